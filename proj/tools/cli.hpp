#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace reeb::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

std::string version();

/// Runs one command line. args[0] is the program name. Reports and CSV go
/// to `out` unless --out names a file; usage and error text go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The report without its timing fields.
nlohmann::json payload(nlohmann::json report);

}  // namespace reeb::cli
