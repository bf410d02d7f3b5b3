#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reeb {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Splits on `sep` at bracket depth zero; "(" and "[" nest.
std::vector<std::string> split_top_level(std::string_view text, char sep);

/// `head:k=v,k=v` -> {head, [(k, v), ...]}. A missing `:` gives no options.
std::pair<std::string, KeyValues> split_head(std::string_view text);

/// `k=v,k=v` -> [(k, v), ...].
KeyValues parse_key_values(std::string_view text);

std::string trim(std::string_view text);
bool is_integer(std::string_view text);
int parse_int(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);
/// Comma separated list of doubles.
std::vector<double> parse_double_list(std::string_view text, std::string_view what);

}  // namespace reeb
