#include "kgpath/grounding.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace kgpath {

MultiplicityTable::MultiplicityTable(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) max_ = std::max(max_, e.count);
}

std::uint64_t MultiplicityTable::count(EntityId e) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), e,
                             [](const Entry& entry, EntityId id) { return entry.entity < id; });
  return (it != entries_.end() && it->entity == e) ? it->count : 0;
}

namespace {

void walk(const KnowledgeGraph& kg, std::span<const RelationId> path, std::size_t step,
          std::vector<EntityId>& visited, std::unordered_map<EntityId, std::uint64_t>& counts) {
  const EntityId at = visited.back();
  const bool last = step + 1 == path.size();
  for (const Neighbor& nb : kg.neighbors(at, path[step])) {
    if (std::find(visited.begin(), visited.end(), nb.tail) != visited.end()) continue;
    if (last) {
      ++counts[nb.tail];
      continue;
    }
    visited.push_back(nb.tail);
    walk(kg, path, step + 1, visited, counts);
    visited.pop_back();
  }
}

}  // namespace

MultiplicityTable path_targets(const KnowledgeGraph& kg, EntityId head, std::span<const RelationId> path) {
  if (path.empty()) return {};
  std::unordered_map<EntityId, std::uint64_t> counts;
  std::vector<EntityId> visited{head};
  visited.reserve(path.size() + 1);
  walk(kg, path, 0, visited, counts);

  std::vector<MultiplicityTable::Entry> entries;
  entries.reserve(counts.size());
  for (const auto& [e, c] : counts) entries.push_back({e, c});
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.entity < b.entity; });
  return MultiplicityTable(std::move(entries));
}

std::vector<EntityId> ree_rank_entities(const KnowledgeGraph& kg, std::span<const Rule> ranked_rules, EntityId head) {
  std::vector<EntityId> ranking;
  std::unordered_set<EntityId> ranked;
  std::vector<MultiplicityTable::Entry> order;
  for (const Rule& rule : ranked_rules) {
    const auto table = path_targets(kg, head, rule.body);
    order.assign(table.entries().begin(), table.entries().end());
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
    for (const auto& entry : order) {
      if (ranked.insert(entry.entity).second) ranking.push_back(entry.entity);
    }
  }
  return ranking;
}

}  // namespace kgpath
