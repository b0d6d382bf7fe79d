#include "kgpath/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace kgpath {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

template <class T>
T parse_positive(std::string_view key, std::string_view text) {
  const T v = parse_number<T>(key, text);
  if (!(v > 0)) throw ConfigError(std::string(key) + " must be positive");
  return v;
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view text, bool positive) {
  std::vector<T> out;
  while (true) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    out.push_back(positive ? parse_positive<T>(key, item) : parse_number<T>(key, item));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"dataset", [](RunConfig& c, auto, auto v) { c.dataset = std::string(trim(v)); }},
      {"out", [](RunConfig& c, auto, auto v) { c.out = std::string(trim(v)); }},
      {"seed", [](RunConfig& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"workers", [](RunConfig& c, auto k, auto v) { c.workers = parse_positive<int>(k, v); }},
      {"group",
       [](RunConfig& c, auto, auto v) {
         try {
           c.group = parse_group_kind(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"dim", [](RunConfig& c, auto k, auto v) { c.dim = parse_positive<long>(k, v); }},
      {"epochs", [](RunConfig& c, auto k, auto v) { c.epochs = parse_positive<int>(k, v); }},
      {"learning_rate", [](RunConfig& c, auto k, auto v) { c.learning_rate = parse_positive<double>(k, v); }},
      {"regularization",
       [](RunConfig& c, auto k, auto v) {
         c.regularization = parse_list<double>(k, v, false);
         if (c.regularization.front() < 0) throw ConfigError("regularization must be non-negative");
       }},
      {"batch_size", [](RunConfig& c, auto k, auto v) { c.batch_size = parse_positive<long>(k, v); }},
      {"init_scale", [](RunConfig& c, auto k, auto v) { c.init_scale = parse_positive<double>(k, v); }},
      {"max_path_len", [](RunConfig& c, auto k, auto v) { c.max_path_len = parse_positive<int>(k, v); }},
      {"rules_per_relation",
       [](RunConfig& c, auto k, auto v) { c.rules_per_relation = parse_positive<std::size_t>(k, v); }},
      {"expansion_cap", [](RunConfig& c, auto k, auto v) { c.expansion_cap = parse_positive<std::size_t>(k, v); }},
      {"path_lengths", [](RunConfig& c, auto k, auto v) { c.path_lengths = parse_list<int>(k, v, true); }},
      {"paths_per_relation",
       [](RunConfig& c, auto k, auto v) { c.paths_per_relation = parse_positive<std::size_t>(k, v); }},
      {"pbf_learning_rates",
       [](RunConfig& c, auto k, auto v) { c.pbf_learning_rates = parse_list<double>(k, v, true); }},
      {"pbf_l2s",
       [](RunConfig& c, auto k, auto v) {
         c.pbf_l2s = parse_list<double>(k, v, false);
         if (c.pbf_l2s.front() < 0) throw ConfigError("pbf_l2s must be non-negative");
       }},
      {"negatives", [](RunConfig& c, auto k, auto v) { c.negatives = parse_positive<std::size_t>(k, v); }},
      {"pbf_batch_size", [](RunConfig& c, auto k, auto v) { c.pbf_batch_size = parse_positive<std::size_t>(k, v); }},
      {"pbf_batches", [](RunConfig& c, auto k, auto v) { c.pbf_batches = parse_positive<std::size_t>(k, v); }},
      {"scorer",
       [](RunConfig& c, auto, auto v) {
         const auto s = trim(v);
         if (s != "embedding" && s != "ree" && s != "pbf") {
           throw ConfigError("unknown scorer '" + std::string(s) + "' (expected embedding, ree or pbf)");
         }
         c.scorer = std::string(s);
       }},
      {"lambdas",
       [](RunConfig& c, auto k, auto v) {
         c.lambdas = parse_list<double>(k, v, false);
         for (double l : c.lambdas) {
           const double step = l * 10.0;
           if (l < 0.0 || l > 1.0 || std::abs(step - std::round(step)) > 1e-9) {
             throw ConfigError("lambda " + format_double(l) + " is not on the grid {0, 0.1, ..., 1}");
           }
         }
       }},
      {"eval_split",
       [](RunConfig& c, auto, auto v) {
         const auto s = trim(v);
         if (s != "valid" && s != "test") throw ConfigError("eval_split must be valid or test");
         c.eval_split = std::string(s);
       }},
      {"per_query", [](RunConfig& c, auto k, auto v) { c.per_query = parse_bool(k, v); }},
  };
  return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto& table = setters();
  auto it = table.find(trim(key));
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(trim(key)) + "'");
  it->second(*this, it->first, value);
}

std::vector<int> RunConfig::effective_path_lengths(int mined_length) const {
  std::vector<int> out;
  for (int len : path_lengths) {
    if (len <= max_path_len && len <= mined_length) out.push_back(len);
  }
  if (out.empty()) throw ConfigError("no path length in path_lengths is within max_path_len and the mined length");
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void apply_config(RunConfig& config, std::istream& in, const std::string& source) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      config.set(text.substr(0, eq), text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  apply_config(config, in, path.string());
}

std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

}  // namespace kgpath
