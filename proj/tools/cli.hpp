#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lshpr::cli {

/// Everything needed to re-run one invocation. Serialized as key=value lines:
///
///   command=<name>
///   seed=<u64>
///   input=<path>            (repeated, positional order)
///   config.<flag>=<value>   (repeated, flag order)
///   output.<flag>=<path>    (repeated)
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, std::string>> outputs;
  std::uint64_t seed = 0;

  std::string encode() const;
  static RunManifest decode(std::string_view text);

  /// Argument vector (without program name) that reproduces the invocation.
  std::vector<std::string> to_args() const;
};

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite.
std::string format_double(double v);

/// Runs one command line (without program name). Returns the process exit
/// code; messages go to `out` / `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lshpr::cli
