// Shared test fixtures: small graphs, temporary directories and the
// finite-difference checks used by both the unit and acceptance suites.
#ifndef KGPATH_TESTS_FIXTURES_HPP
#define KGPATH_TESTS_FIXTURES_HPP

#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "kgpath/embedding_training.hpp"
#include "kgpath/knowledge_graph.hpp"
#include "kgpath/pbf.hpp"
#include "oracles.hpp"

namespace kgpath::fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("kgpath_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// A small family tree: `parent` edges, with `sibling` and `grandparent`
/// derived from them, split 80/10/10. Dense enough in rules for every stage
/// of the pipeline to have something to learn.
inline void write_family_dataset(const std::filesystem::path& dir, int people = 40, std::uint64_t seed = 1) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  std::vector<int> parent(static_cast<std::size_t>(people), -1);
  std::vector<std::array<std::string, 3>> triples;
  auto name = [](int i) { return "p" + std::to_string(i); };
  for (int i = 1; i < people; ++i) {
    parent[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, i - 1)(rng);
    triples.push_back({name(parent[static_cast<std::size_t>(i)]), "parent", name(i)});
  }
  for (int i = 1; i < people; ++i) {
    for (int j = 1; j < people; ++j) {
      if (i != j && parent[static_cast<std::size_t>(i)] == parent[static_cast<std::size_t>(j)]) {
        triples.push_back({name(i), "sibling", name(j)});
      }
    }
    const int p = parent[static_cast<std::size_t>(i)];
    if (p > 0) triples.push_back({name(parent[static_cast<std::size_t>(p)]), "grandparent", name(i)});
  }
  std::shuffle(triples.begin(), triples.end(), rng);
  const std::size_t n = triples.size();
  std::ofstream train(dir / "train.txt"), valid(dir / "valid.txt"), test(dir / "test.txt");
  for (std::size_t i = 0; i < n; ++i) {
    std::ofstream& out = i < n / 10 ? valid : (i < n / 5 ? test : train);
    out << triples[i][0] << '\t' << triples[i][1] << '\t' << triples[i][2] << '\n';
  }
}

/// Flattens entity then relation parameters, column-major.
inline Eigen::VectorXd flatten(const EmbeddingParameters& p) {
  Eigen::VectorXd x(p.entities.size() + p.relations.size());
  x << Eigen::Map<const Eigen::VectorXd>(p.entities.data(), p.entities.size()),
      Eigen::Map<const Eigen::VectorXd>(p.relations.data(), p.relations.size());
  return x;
}

inline EmbeddingParameters unflatten(EmbeddingParameters p, const Eigen::VectorXd& x) {
  Eigen::Map<Eigen::VectorXd>(p.entities.data(), p.entities.size()) = x.head(p.entities.size());
  Eigen::Map<Eigen::VectorXd>(p.relations.data(), p.relations.size()) = x.tail(p.relations.size());
  return p;
}

/// Five-triple graph over six entities and two relations, augmented.
inline KnowledgeGraph five_triple_graph() {
  return augment_inverses(oracle::make_graph(6, 2, {{0, 0, 1}, {1, 1, 2}, {2, 0, 3}, {3, 1, 4}, {4, 0, 5}}));
}

/// Max relative error between the analytic gradient of the embedding loss
/// (cross entropy + N3) and central finite differences, n = 4.
inline double embedding_gradient_error(GroupKind kind, std::uint64_t seed, double regularization = 0.1) {
  const KnowledgeGraph kg = five_triple_graph();
  EmbeddingParameters params = initial_parameters(kind, 4, kg.entity_count(), kg.label_capacity(), 0.5, seed);
  const std::vector<Triple> batch(kg.train().begin(), kg.train().end());
  EmbeddingParameters grad;
  batch_loss(params, batch, regularization, &grad);
  const Eigen::VectorXd numeric = oracle::numeric_gradient(
      [&](const Eigen::VectorXd& x) { return batch_loss(unflatten(params, x), batch, regularization, nullptr); },
      flatten(params));
  return oracle::max_relative_error(flatten(grad), numeric);
}

/// Random softmax-regression problem: `examples` examples of 1 + negatives
/// candidates over `paths` features in [0, 1].
inline std::vector<RegressionExample> random_regression_examples(std::mt19937_64& rng, int paths, int examples,
                                                                 int negatives) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RegressionExample> out(static_cast<std::size_t>(examples));
  for (auto& ex : out) {
    ex.candidates = Eigen::MatrixXd::NullaryExpr(paths, negatives + 1, [&]() { return u(rng); });
  }
  return out;
}

inline double regression_gradient_error(std::uint64_t seed, double l2 = 0.05) {
  std::mt19937_64 rng(seed);
  const auto examples = random_regression_examples(rng, 6, 8, 5);
  Eigen::VectorXd theta = Eigen::VectorXd::NullaryExpr(6, [&]() { return std::normal_distribution<double>(0, 1)(rng); });
  Eigen::VectorXd grad;
  softmax_regression_loss(theta, examples, l2, &grad);
  const Eigen::VectorXd numeric = oracle::numeric_gradient(
      [&](const Eigen::VectorXd& x) { return softmax_regression_loss(x, examples, l2); }, theta);
  return oracle::max_relative_error(grad, numeric);
}

}  // namespace kgpath::fixtures

#endif  // KGPATH_TESTS_FIXTURES_HPP
