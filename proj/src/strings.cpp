#include "reeb/strings.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "reeb/errors.hpp"

namespace reeb {

std::vector<std::string> split_top_level(std::string_view text, char sep) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string current;
  for (char ch : text) {
    if (ch == '(' || ch == '[') ++depth;
    if (ch == ')' || ch == ']') --depth;
    if (depth < 0) throw ParseError("unbalanced brackets in '" + std::string(text) + "'");
    if (ch == sep && depth == 0) {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (depth != 0) throw ParseError("unbalanced brackets in '" + std::string(text) + "'");
  parts.push_back(trim(current));
  return parts;
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  if (trim(text).empty()) return out;
  for (const auto& item : split_top_level(text, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + item + "'");
    out.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
  return out;
}

std::pair<std::string, KeyValues> split_head(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return {trim(text), {}};
  return {trim(text.substr(0, colon)), parse_key_values(text.substr(colon + 1))};
}

std::string trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

bool is_integer(std::string_view text) {
  if (text.empty()) return false;
  for (char ch : text) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

int parse_int(std::string_view text, std::string_view what) {
  std::string t = trim(text);
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError("bad integer for " + std::string(what) + ": '" + t + "'");
  }
  return value;
}

double parse_double(std::string_view text, std::string_view what) {
  std::string t = trim(text);
  if (t == "pi") return 3.14159265358979323846;
  char* end = nullptr;
  double value = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ParseError("bad number for " + std::string(what) + ": '" + t + "'");
  }
  return value;
}

std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  for (const auto& item : split_top_level(text, ',')) out.push_back(parse_double(item, what));
  return out;
}

}  // namespace reeb
