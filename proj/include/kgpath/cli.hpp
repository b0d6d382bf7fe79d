#ifndef KGPATH_CLI_HPP
#define KGPATH_CLI_HPP

#include <iosfwd>

namespace kgpath {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point of the `kgpath` tool. Subcommands: train-embeddings,
/// mine-rules, train-pbf, evaluate. All stages read and write one output
/// directory (`--out`); each artifact has a `.meta.json` sidecar recording
/// the hashes it was built from, and a stage refuses inputs whose hashes no
/// longer match.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kgpath

#endif  // KGPATH_CLI_HPP
