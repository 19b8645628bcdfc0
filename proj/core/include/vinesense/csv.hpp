#pragma once

// RFC 4180 helpers: fields containing a comma, quote, CR or LF are quoted with
// embedded quotes doubled; records end in CRLF.

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vinesense::csv {

std::string escape(std::string_view field);
void append_row(std::string& out, std::span<const std::string> fields);

/// Parses a whole document. Throws validation on an unterminated quote or
/// stray characters after a closing quote.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace vinesense::csv
