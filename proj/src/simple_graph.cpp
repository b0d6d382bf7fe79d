#include "kgpath/simple_graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace kgpath {

SimpleGraph::SimpleGraph(std::int32_t entity_count) : offsets_(static_cast<std::size_t>(entity_count) + 1, 0) {}

std::span<const EntityId> SimpleGraph::neighbors(EntityId e) const {
  const auto i = static_cast<std::size_t>(e);
  return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::ptrdiff_t SimpleGraph::find_edge(EntityId a, EntityId b) const {
  const auto nb = neighbors(a);
  auto it = std::lower_bound(nb.begin(), nb.end(), b);
  if (it == nb.end() || *it != b) return -1;
  const auto pos = offsets_[static_cast<std::size_t>(a)] + static_cast<std::size_t>(it - nb.begin());
  return static_cast<std::ptrdiff_t>(adjacency_edge_[pos]);
}

void SimpleGraph::append_labels(EntityId from, EntityId to, std::vector<RelationId>& out) const {
  const auto edge = find_edge(from, to);
  if (edge < 0) return;
  const auto& stored = edge_labels_[static_cast<std::size_t>(edge)];
  if (from < to) {
    out.insert(out.end(), stored.begin(), stored.end());
  } else {
    const auto first = out.size();
    for (RelationId r : stored) out.push_back(r.inverse());
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
  }
}

std::vector<RelationId> SimpleGraph::labels(EntityId from, EntityId to) const {
  std::vector<RelationId> out;
  append_labels(from, to, out);
  return out;
}

SimpleGraph to_simple_graph(const KnowledgeGraph& kg) {
  if (!kg.augmented()) throw std::logic_error("to_simple_graph requires an inverse-augmented graph");

  struct Oriented {
    EntityId lo, hi;
    RelationId label;
    auto operator<=>(const Oriented&) const = default;
  };
  std::vector<Oriented> oriented;
  oriented.reserve(kg.train().size());
  for (const Triple& t : kg.train()) {
    if (t.head == t.tail) continue;
    if (t.head < t.tail) {
      oriented.push_back({t.head, t.tail, t.relation});
    } else {
      oriented.push_back({t.tail, t.head, t.relation.inverse()});
    }
  }
  std::sort(oriented.begin(), oriented.end());
  oriented.erase(std::unique(oriented.begin(), oriented.end()), oriented.end());

  SimpleGraph g(kg.entity_count());
  std::vector<std::pair<EntityId, EntityId>> edges;
  for (std::size_t i = 0; i < oriented.size();) {
    std::size_t j = i;
    std::vector<RelationId> labels;
    while (j < oriented.size() && oriented[j].lo == oriented[i].lo && oriented[j].hi == oriented[i].hi) {
      labels.push_back(oriented[j].label);
      ++j;
    }
    edges.emplace_back(oriented[i].lo, oriented[i].hi);
    g.edge_labels_.push_back(std::move(labels));
    i = j;
  }

  auto& offsets = g.offsets_;
  for (const auto& [a, b] : edges) {
    ++offsets[static_cast<std::size_t>(a) + 1];
    ++offsets[static_cast<std::size_t>(b) + 1];
  }
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) offsets[i + 1] += offsets[i];

  std::vector<std::tuple<EntityId, EntityId, std::size_t>> incidences;
  incidences.reserve(2 * edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    incidences.emplace_back(edges[e].first, edges[e].second, e);
    incidences.emplace_back(edges[e].second, edges[e].first, e);
  }
  std::sort(incidences.begin(), incidences.end());
  g.adjacency_.reserve(incidences.size());
  g.adjacency_edge_.reserve(incidences.size());
  for (const auto& [from, to, e] : incidences) {
    g.adjacency_.push_back(to);
    g.adjacency_edge_.push_back(e);
  }
  return g;
}

}  // namespace kgpath
