#ifndef KGPATH_RUN_CONFIG_HPP
#define KGPATH_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgpath/lie_group.hpp"

namespace kgpath {

/// Bad configuration key or value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every knob of the pipeline. Config files are flat `key = value` lines;
/// `#` starts a comment, grids are comma lists. Keys match the field names.
struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::uint64_t seed = 42;
  int workers = 1;

  // train-embeddings
  GroupKind group = GroupKind::circle;
  long dim = 100;
  int epochs = 25;
  double learning_rate = 0.1;
  std::vector<double> regularization{0.001, 0.01, 0.05};  // selected on validation MRR
  long batch_size = 1000;
  double init_scale = 1e-3;

  // mine-rules
  int max_path_len = 3;
  std::size_t rules_per_relation = 1000;
  std::size_t expansion_cap = 4096;

  // train-pbf
  std::vector<int> path_lengths{1, 2, 3};
  std::size_t paths_per_relation = 100;
  std::vector<double> pbf_learning_rates{0.1, 0.01, 0.001};
  std::vector<double> pbf_l2s{0.1, 0.01, 0.001};
  std::size_t negatives = 50;
  std::size_t pbf_batch_size = 100;
  std::size_t pbf_batches = 500;

  // evaluate
  std::string scorer = "embedding";
  std::vector<double> lambdas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::string eval_split = "test";
  bool per_query = false;

  /// Sets one field from its text form. Throws ConfigError.
  void set(std::string_view key, std::string_view value);

  /// Path-length grid clipped to `max_path_len` and to `mined_length`.
  std::vector<int> effective_path_lengths(int mined_length) const;
};

std::vector<std::string> config_keys();

/// Applies every `key = value` line of `in`; `source` names it in errors.
void apply_config(RunConfig& config, std::istream& in, const std::string& source);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Canonical text of `value` as written back into configs and metadata.
std::string format_double(double value);

}  // namespace kgpath

#endif  // KGPATH_RUN_CONFIG_HPP
