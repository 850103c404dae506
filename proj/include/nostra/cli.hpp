#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nostra {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitDegenerate = 2;

/// Entry point of the `nostra` command; args excludes the program name.
/// Subcommands: posterior, ablation. Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nostra
