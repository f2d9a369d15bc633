// cli.hpp - command-line front end
//
// Subcommands: pointer, spectrum, rate, sweep, oracle, fit-tls, level, synth.
// Exit codes: 0 success, 2 config/validation error, 3 numerical or fit
// failure, 4 every sweep point failed.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace numsplit {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;
inline constexpr int exit_sweep_failed = 4;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace numsplit
