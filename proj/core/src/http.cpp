#include "vinesense/http.hpp"

#include <thread>

#include <httplib.h>

#include "vinesense/error.hpp"

namespace vinesense::http {

struct Server::Impl {
  service::Service& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(service::Service& s) : service(s) {}
};

namespace {

void install(httplib::Server& server, service::Service& service) {
  auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    service::Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.authorization = req.get_header_value("Authorization");
    r.body = req.body;
    const auto out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server.Get(R"(/v1/.*)", dispatch);
  server.Post(R"(/v1/.*)", dispatch);
  server.Put(R"(/v1/.*)", dispatch);
  server.Delete(R"(/v1/.*)", dispatch);
  server.Patch(R"(/v1/.*)", dispatch);
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.set_payload_max_length(64u << 20);
}

}  // namespace

Server::Server(service::Service& service, std::string host, int port)
    : impl_(std::make_unique<Impl>(service)), host_(std::move(host)), port_(port) {
  install(impl_->server, service);
}

Server::~Server() { stop(); }

void Server::start() {
  if (port_ == 0) {
    port_ = impl_->server.bind_to_any_port(host_);
  } else if (!impl_->server.bind_to_port(host_, port_)) {
    port_ = -1;
  }
  if (port_ <= 0) throw Error(ErrorCode::io, "cannot bind " + host_);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Server::run() {
  if (port_ == 0) {
    port_ = impl_->server.bind_to_any_port(host_);
  } else if (!impl_->server.bind_to_port(host_, port_)) {
    port_ = -1;
  }
  if (port_ <= 0) throw Error(ErrorCode::io, "cannot bind " + host_);
  impl_->server.listen_after_bind();
}

void Server::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

struct Client::Impl {
  httplib::Client client;
  explicit Impl(const std::string& url) : client(url) {}
};

Client::Client(const std::string& base_url, std::string token)
    : impl_(std::make_unique<Impl>(base_url)), token_(std::move(token)) {
  impl_->client.set_connection_timeout(5);
  impl_->client.set_read_timeout(300);
  impl_->client.set_write_timeout(300);
}

Client::~Client() = default;

namespace {

ClientResponse convert(const httplib::Result& res, const std::string& what) {
  if (!res) throw Error(ErrorCode::io, what + ": " + httplib::to_string(res.error()));
  return {res->status, res->get_header_value("Content-Type"), res->body};
}

}  // namespace

ClientResponse Client::get(const std::string& path_and_query) {
  httplib::Headers h;
  if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
  return convert(impl_->client.Get(path_and_query, h), "GET " + path_and_query);
}

ClientResponse Client::post(const std::string& path, const std::string& body,
                            const std::string& content_type) {
  httplib::Headers h;
  if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
  return convert(impl_->client.Post(path, h, body, content_type), "POST " + path);
}

bool looks_like_url(const std::string& text) {
  return text.rfind("http://", 0) == 0 || text.rfind("https://", 0) == 0;
}

}  // namespace vinesense::http
