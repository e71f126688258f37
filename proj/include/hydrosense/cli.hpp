/**
 * @file cli.hpp
 * @brief `hydrosense` command-line entry point: synth, train, evaluate,
 *        sensitivity, report.
 */

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hydrosense::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

/// Runs one command. args excludes the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace hydrosense::cli
