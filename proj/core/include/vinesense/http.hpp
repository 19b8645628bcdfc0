#pragma once

// HTTP transport over service::Service, plus the small client the CLI uses.

#include <memory>
#include <string>

#include "vinesense/service.hpp"

namespace vinesense::http {

class Server {
 public:
  /// Port 0 picks a free port; read it back with port() after start().
  Server(service::Service& service, std::string host = "127.0.0.1", int port = 0);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves on a background thread. Throws io when binding fails.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_;
};

struct ClientResponse {
  int status = 0;
  std::string content_type;
  std::string body;
};

/// Blocking client for "http://host:port". Throws io when the service cannot
/// be reached.
class Client {
 public:
  Client(const std::string& base_url, std::string token);
  ~Client();

  ClientResponse get(const std::string& path_and_query);
  ClientResponse post(const std::string& path, const std::string& body,
                      const std::string& content_type = "application/x-ndjson");

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string token_;
};

/// True for http:// and https:// URLs.
bool looks_like_url(const std::string& text);

}  // namespace vinesense::http
