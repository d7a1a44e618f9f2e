#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace textface::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (args excludes the program name). Progress goes to
/// `out`; usage errors and one-line "<category>: <message>" failures go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Help text for the top level (empty command) or one subcommand.
std::string help_text(const std::string& command = "");

}  // namespace textface::cli
