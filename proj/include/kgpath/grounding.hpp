#ifndef KGPATH_GROUNDING_HPP
#define KGPATH_GROUNDING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "kgpath/knowledge_graph.hpp"
#include "kgpath/rules.hpp"

namespace kgpath {

/// mul(h, e, p) for a fixed start h and path p. Entities absent from the
/// table have multiplicity 0.
class MultiplicityTable {
 public:
  struct Entry {
    EntityId entity;
    std::uint64_t count;
  };

  MultiplicityTable() = default;
  /// `entries` must be sorted by entity with positive counts.
  explicit MultiplicityTable(std::vector<Entry> entries);

  std::uint64_t count(EntityId e) const;
  std::uint64_t max_count() const { return max_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
  std::uint64_t max_ = 0;
};

/// Counts injective groundings of `path` starting at `head`: walks over the
/// train adjacency that never revisit an entity, endpoints included.
MultiplicityTable path_targets(const KnowledgeGraph& kg, EntityId head, std::span<const RelationId> path);

/// Concatenated rule ranking for (head, r, ?). Rules are taken in the given
/// order; each ranks its grounded tails by multiplicity (descending, entity
/// id ascending on ties) and contributes the ones not ranked yet. Entities
/// reached by no rule are left out.
std::vector<EntityId> ree_rank_entities(const KnowledgeGraph& kg, std::span<const Rule> ranked_rules, EntityId head);

}  // namespace kgpath

#endif  // KGPATH_GROUNDING_HPP
