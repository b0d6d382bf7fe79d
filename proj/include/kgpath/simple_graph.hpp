#ifndef KGPATH_SIMPLE_GRAPH_HPP
#define KGPATH_SIMPLE_GRAPH_HPP

#include <span>
#include <vector>

#include "kgpath/knowledge_graph.hpp"

namespace kgpath {

/// Undirected entity graph with at most one edge per entity pair and no
/// self-loops. Each edge keeps the directed relation labels that connect its
/// endpoints; labels are stored oriented from the smaller to the larger
/// entity id, the opposite orientation being their inverses.
class SimpleGraph {
 public:
  SimpleGraph() = default;
  explicit SimpleGraph(std::int32_t entity_count);

  std::int32_t entity_count() const { return static_cast<std::int32_t>(offsets_.size()) - 1; }
  std::size_t edge_count() const { return edge_labels_.size(); }

  /// Neighbours of `e` in ascending id order.
  std::span<const EntityId> neighbors(EntityId e) const;
  /// Edge index of {a, b}, or -1.
  std::ptrdiff_t find_edge(EntityId a, EntityId b) const;
  bool has_edge(EntityId a, EntityId b) const { return find_edge(a, b) >= 0; }

  /// Labels r with (from, r, to) in the augmented train split; sorted.
  std::vector<RelationId> labels(EntityId from, EntityId to) const;
  /// Same, appended to `out` without allocation of a fresh vector.
  void append_labels(EntityId from, EntityId to, std::vector<RelationId>& out) const;

 private:
  friend SimpleGraph to_simple_graph(const KnowledgeGraph& kg);

  std::vector<std::size_t> offsets_;
  std::vector<EntityId> adjacency_;
  std::vector<std::size_t> adjacency_edge_;
  // labels oriented min(a,b) -> max(a,b)
  std::vector<std::vector<RelationId>> edge_labels_;
};

/// Collapses the augmented train split into a SimpleGraph. Valid and test
/// triples never contribute edges.
SimpleGraph to_simple_graph(const KnowledgeGraph& kg);

}  // namespace kgpath

#endif  // KGPATH_SIMPLE_GRAPH_HPP
