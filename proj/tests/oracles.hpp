// Brute-force reference implementations used by the unit and acceptance
// suites. They deliberately avoid the library's indexes: graphs are read
// back from the raw triples into dense tables.
#ifndef KGPATH_TESTS_ORACLES_HPP
#define KGPATH_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kgpath/knowledge_graph.hpp"

namespace kgpath::oracle {

using RawTriple = std::array<int, 3>;  // head, base relation, tail

/// Graph with entities "e0".."e{n-1}" and relations "r0".. interned in id
/// order, so names and ids agree.
inline KnowledgeGraph make_graph(int entities, int relations, const std::vector<RawTriple>& train,
                                 const std::vector<RawTriple>& valid = {}, const std::vector<RawTriple>& test = {}) {
  Vocabulary ev, rv;
  for (int i = 0; i < entities; ++i) ev.intern("e" + std::to_string(i));
  for (int i = 0; i < relations; ++i) rv.intern("r" + std::to_string(i));
  std::array<std::vector<Triple>, 3> splits;
  const std::vector<RawTriple>* raw[3] = {&train, &valid, &test};
  for (int s = 0; s < 3; ++s) {
    std::set<RawTriple> seen;
    for (const auto& t : *raw[s]) {
      if (seen.insert(t).second) splits[static_cast<std::size_t>(s)].push_back({t[0], RelationId(t[1], false), t[2]});
    }
  }
  return KnowledgeGraph(std::move(ev), std::move(rv), std::move(splits), false);
}

/// Up to `max_triples` random train triples; self-loops allowed.
inline std::vector<RawTriple> random_triples(std::mt19937_64& rng, int entities, int relations, int max_triples) {
  std::uniform_int_distribution<int> e(0, entities - 1), r(0, relations - 1);
  std::vector<RawTriple> out;
  for (int i = 0; i < max_triples; ++i) out.push_back({e(rng), r(rng), e(rng)});
  return out;
}

/// Directed label table of the augmented train split: labels[a][b] holds
/// every label index l with (a, l, b), built from the base triples only.
struct DenseLabels {
  int n = 0;
  std::vector<std::vector<std::vector<int>>> labels;

  explicit DenseLabels(const KnowledgeGraph& kg) : n(kg.entity_count()) {
    labels.assign(static_cast<std::size_t>(n), std::vector<std::vector<int>>(static_cast<std::size_t>(n)));
    for (const Triple& t : kg.train()) {
      if (t.relation.is_inverse()) continue;
      labels[t.head][t.tail].push_back(2 * t.relation.base());
      labels[t.tail][t.head].push_back(2 * t.relation.base() + 1);
    }
    for (auto& row : labels) {
      for (auto& cell : row) {
        std::sort(cell.begin(), cell.end());
        cell.erase(std::unique(cell.begin(), cell.end()), cell.end());
      }
    }
  }

  bool has(int a, int label, int b) const {
    const auto& cell = labels[a][b];
    return std::binary_search(cell.begin(), cell.end(), label);
  }
};

/// mul(h, e, path) by exhaustive search over all injective entity sequences.
inline std::map<int, std::uint64_t> multiplicity(const DenseLabels& g, int h, const std::vector<int>& path) {
  std::map<int, std::uint64_t> counts;
  std::vector<int> seq{h};
  auto rec = [&](auto&& self) -> void {
    if (seq.size() == path.size() + 1) {
      ++counts[seq.back()];
      return;
    }
    for (int x = 0; x < g.n; ++x) {
      if (std::find(seq.begin(), seq.end(), x) != seq.end()) continue;
      if (!g.has(seq.back(), path[seq.size() - 1], x)) continue;
      seq.push_back(x);
      self(self);
      seq.pop_back();
    }
  };
  if (!path.empty()) rec(rec);
  return counts;
}

/// (head label, body labels) of every rule with an injective grounding:
/// distinct x0..xn with body_i(x_{i-1}, x_i) and head(x0, xn); the trivial
/// (r) => r is excluded.
inline std::set<std::pair<int, std::vector<int>>> rules(const DenseLabels& g, int max_body_length) {
  std::set<std::pair<int, std::vector<int>>> out;
  std::vector<int> seq;
  auto emit = [&]() {
    const std::size_t n = seq.size() - 1;
    const auto& heads = g.labels[seq.front()][seq.back()];
    if (heads.empty()) return;
    std::vector<int> body(n);
    auto fill = [&](auto&& self, std::size_t i) -> void {
      if (i == n) {
        for (int head : heads) {
          if (n == 1 && body[0] == head) continue;
          out.insert({head, body});
        }
        return;
      }
      for (int l : g.labels[seq[i]][seq[i + 1]]) {
        body[i] = l;
        self(self, i + 1);
      }
    };
    fill(fill, 0);
  };
  auto rec = [&](auto&& self) -> void {
    if (seq.size() >= 2) emit();
    if (static_cast<int>(seq.size()) == max_body_length + 1) return;
    for (int x = 0; x < g.n; ++x) {
      if (std::find(seq.begin(), seq.end(), x) != seq.end()) continue;
      if (g.labels[seq.back()][x].empty()) continue;
      seq.push_back(x);
      self(self);
      seq.pop_back();
    }
  };
  for (int x0 = 0; x0 < g.n; ++x0) {
    seq = {x0};
    rec(rec);
  }
  return out;
}

/// Number of simple cycles with exactly `m` >= 3 edges in the undirected
/// graph `adj`: closed injective sequences divided by the 2m rotations and
/// reflections of each cycle.
inline std::uint64_t cycle_count(const std::vector<std::vector<bool>>& adj, int m) {
  const int n = static_cast<int>(adj.size());
  std::uint64_t closed = 0;
  std::vector<int> seq;
  auto rec = [&](auto&& self) -> void {
    if (static_cast<int>(seq.size()) == m) {
      closed += adj[seq.back()][seq.front()] ? 1 : 0;
      return;
    }
    for (int x = 0; x < n; ++x) {
      if (std::find(seq.begin(), seq.end(), x) != seq.end()) continue;
      if (!seq.empty() && !adj[seq.back()][x]) continue;
      seq.push_back(x);
      self(self);
      seq.pop_back();
    }
  };
  rec(rec);
  return closed / (2 * static_cast<std::uint64_t>(m));
}

/// Position of `target` after sorting the candidates by (score desc, id asc).
inline std::optional<std::size_t> rank(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& mask,
                                       int target) {
  if (scores(target) == -std::numeric_limits<double>::infinity()) return std::nullopt;
  std::vector<int> ids;
  for (int e = 0; e < scores.size(); ++e) {
    if (mask.empty() || mask[static_cast<std::size_t>(e)]) ids.push_back(e);
  }
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), target) - ids.begin()) + 1;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, 1e-6)
inline double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({1e-6, std::abs(analytic(i)), std::abs(numeric(i))});
    worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / scale);
  }
  return worst;
}

/// Central differences of `f` around `x` with step `h`.
template <class F>
Eigen::VectorXd numeric_gradient(F&& f, Eigen::VectorXd x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x(i);
    x(i) = saved + h;
    const double up = f(x);
    x(i) = saved - h;
    const double down = f(x);
    x(i) = saved;
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace kgpath::oracle

#endif  // KGPATH_TESTS_ORACLES_HPP
