#ifndef KGPATH_RULE_MINING_HPP
#define KGPATH_RULE_MINING_HPP

#include <functional>
#include <span>
#include <vector>

#include "kgpath/knowledge_graph.hpp"
#include "kgpath/rules.hpp"
#include "kgpath/simple_graph.hpp"

namespace kgpath {

struct MiningConfig {
  int max_body_length = 3;
  /// Upper bound on labeled rules expanded from one entity cycle.
  std::size_t expansion_cap = 4096;
  int workers = 1;
};

struct MiningStats {
  std::size_t entity_cycles = 0;  // cycles of >= 3 edges, each counted once
  std::size_t multi_label_edges = 0;
  std::size_t skipped_cycles = 0;  // over the expansion cap
};

struct MiningResult {
  /// Unscored, deduplicated, ordered by (head, body).
  std::vector<Rule> rules;
  MiningStats stats;
};

/// All rules p => r with 1 <= |p| <= max_body_length that have at least one
/// injective grounding in the train split, except the trivial (r) => r.
///
/// Cycles are enumerated per anchor entity e: simple paths of at most
/// ceil((max_body_length + 1) / 2) edges whose other vertices all exceed e
/// are paired at a shared last vertex, so every cycle of 3 or more edges is
/// found exactly once, from its smallest vertex. Each cycle is then expanded
/// into labeled rules over all head-edge choices and both orientations.
/// Length-1 rules come from pairs of labels on one simple-graph edge.
MiningResult mine_candidate_rules(const KnowledgeGraph& kg, const SimpleGraph& graph, const MiningConfig& config);
MiningResult mine_candidate_rules(const KnowledgeGraph& kg, const MiningConfig& config);

/// Calls `visit` with the vertex sequence (anchor first, then c1 < c_last) of
/// every simple cycle with between 3 and `max_edges` edges whose smallest
/// vertex is `anchor`.
void for_each_anchored_cycle(const SimpleGraph& graph, EntityId anchor, int max_edges,
                             const std::function<void(std::span<const EntityId>)>& visit);

}  // namespace kgpath

#endif  // KGPATH_RULE_MINING_HPP
