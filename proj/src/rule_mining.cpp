#include "kgpath/rule_mining.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "kgpath/parallel.hpp"

namespace kgpath {

namespace {

/// Deduplicating set of (head, body) keys. Bodies of up to three labels with
/// label indexes below 0xFFFF are packed into one 64-bit word.
class RuleKeySet {
 public:
  RuleKeySet(int max_body_length, std::int32_t label_capacity)
      : packed_(max_body_length <= 3 && label_capacity < 0xFFFF) {}

  void insert(RelationId head, std::span<const RelationId> body) {
    if (packed_) {
      std::uint64_t key = static_cast<std::uint64_t>(head.index() + 1);
      for (std::size_t i = 0; i < body.size(); ++i) {
        key |= static_cast<std::uint64_t>(body[i].index() + 1) << (16 * (i + 1));
      }
      packed_keys_.insert(key);
    } else {
      std::u32string key;
      key.push_back(static_cast<char32_t>(head.index()));
      for (RelationId r : body) key.push_back(static_cast<char32_t>(r.index()));
      wide_keys_.insert(std::move(key));
    }
  }

  void merge(RuleKeySet& other) {
    packed_keys_.merge(other.packed_keys_);
    wide_keys_.merge(other.wide_keys_);
  }

  std::vector<Rule> to_rules() const {
    std::vector<Rule> rules;
    rules.reserve(packed_keys_.size() + wide_keys_.size());
    for (std::uint64_t key : packed_keys_) {
      Rule rule;
      rule.head = RelationId::from_index(static_cast<std::int32_t>(key & 0xFFFF) - 1);
      for (int slot = 1; slot < 4; ++slot) {
        const auto v = static_cast<std::int32_t>((key >> (16 * slot)) & 0xFFFF);
        if (v == 0) break;
        rule.body.push_back(RelationId::from_index(v - 1));
      }
      rules.push_back(std::move(rule));
    }
    for (const auto& key : wide_keys_) {
      Rule rule;
      rule.head = RelationId::from_index(static_cast<std::int32_t>(key[0]));
      for (std::size_t i = 1; i < key.size(); ++i) rule.body.push_back(RelationId::from_index(static_cast<std::int32_t>(key[i])));
      rules.push_back(std::move(rule));
    }
    std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
      if (a.head != b.head) return a.head < b.head;
      return a.body < b.body;
    });
    return rules;
  }

 private:
  bool packed_;
  std::unordered_set<std::uint64_t> packed_keys_;
  std::unordered_set<std::u32string> wide_keys_;
};

struct WorkerState {
  RuleKeySet keys;
  MiningStats stats;
  std::vector<std::vector<RelationId>> forward;
  std::vector<std::vector<RelationId>> backward;
  std::vector<RelationId> body;
};

/// Calls emit(head, body) for every labeled rule in the odometer over
/// `lists` (the body) combined with each head label.
template <class Emit>
void expand(std::span<const RelationId> heads, const std::vector<const std::vector<RelationId>*>& lists,
            std::vector<RelationId>& body, Emit&& emit) {
  const std::size_t n = lists.size();
  std::vector<std::size_t> at(n, 0);
  body.resize(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) body[i] = (*lists[i])[at[i]];
    for (RelationId head : heads) emit(head, std::span<const RelationId>(body));
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++at[i] < lists[i]->size()) break;
      at[i] = 0;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

void expand_cycle(const SimpleGraph& graph, std::span<const EntityId> cycle, std::size_t cap, WorkerState& state) {
  const std::size_t m = cycle.size();
  state.forward.resize(m);
  state.backward.resize(m);
  std::size_t product = 1;
  for (std::size_t i = 0; i < m; ++i) {
    const EntityId a = cycle[i];
    const EntityId b = cycle[(i + 1) % m];
    state.forward[i].clear();
    graph.append_labels(a, b, state.forward[i]);
    state.backward[i].clear();
    graph.append_labels(b, a, state.backward[i]);
    product *= state.forward[i].size();
    if (product > cap) break;
  }
  ++state.stats.entity_cycles;
  if (product > cap || 2 * m * product > cap) {
    ++state.stats.skipped_cycles;
    return;
  }

  std::vector<const std::vector<RelationId>*> lists(m - 1);
  auto emit = [&](RelationId head, std::span<const RelationId> body) { state.keys.insert(head, body); };
  for (std::size_t j = 0; j < m; ++j) {
    // head c_j -> c_{j+1}; body walks c_j, c_{j-1}, ..., c_{j+1}
    for (std::size_t s = 0; s + 1 < m; ++s) lists[s] = &state.backward[(j + m - 1 - s) % m];
    expand(state.forward[j], lists, state.body, emit);
    // head c_{j+1} -> c_j; body walks c_{j+1}, c_{j+2}, ..., c_j
    for (std::size_t s = 0; s + 1 < m; ++s) lists[s] = &state.forward[(j + 1 + s) % m];
    expand(state.backward[j], lists, state.body, emit);
  }
}

void expand_parallel_labels(const SimpleGraph& graph, EntityId a, EntityId b, std::size_t cap, WorkerState& state) {
  state.forward.resize(1);
  state.forward[0].clear();
  graph.append_labels(a, b, state.forward[0]);
  const auto& labels = state.forward[0];
  if (labels.size() < 2) return;
  ++state.stats.multi_label_edges;
  if (2 * labels.size() * (labels.size() - 1) > cap) {
    ++state.stats.skipped_cycles;
    return;
  }
  RelationId body[1];
  for (RelationId r1 : labels) {
    for (RelationId r : labels) {
      if (r1 == r) continue;
      body[0] = r1;
      state.keys.insert(r, body);
      body[0] = r1.inverse();
      state.keys.insert(r.inverse(), body);
    }
  }
}

}  // namespace

void for_each_anchored_cycle(const SimpleGraph& graph, EntityId anchor, int max_edges,
                             const std::function<void(std::span<const EntityId>)>& visit) {
  if (max_edges < 3) return;
  const int k = (max_edges + 1) / 2;
  const auto stride = static_cast<std::size_t>(k);

  // Simple paths from the anchor through larger vertices; flat storage,
  // `stride` slots per path, vertices after the anchor.
  std::vector<EntityId> flat;
  std::vector<int> lengths;
  std::vector<EntityId> stack;
  std::function<void()> extend = [&]() {
    const EntityId last = stack.empty() ? anchor : stack.back();
    for (EntityId next : graph.neighbors(last)) {
      if (next <= anchor || std::find(stack.begin(), stack.end(), next) != stack.end()) continue;
      stack.push_back(next);
      lengths.push_back(static_cast<int>(stack.size()));
      flat.insert(flat.end(), stack.begin(), stack.end());
      flat.resize(lengths.size() * stride, -1);
      if (static_cast<int>(stack.size()) < k) extend();
      stack.pop_back();
    }
  };
  extend();

  const std::size_t n_paths = lengths.size();
  auto terminal = [&](std::size_t p) { return flat[p * stride + static_cast<std::size_t>(lengths[p]) - 1]; };
  std::vector<std::size_t> order(n_paths);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (terminal(x) != terminal(y)) return terminal(x) < terminal(y);
    return x < y;
  });

  std::vector<EntityId> cycle;
  for (std::size_t lo = 0; lo < n_paths;) {
    std::size_t hi = lo;
    while (hi < n_paths && terminal(order[hi]) == terminal(order[lo])) ++hi;
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t p1 = order[i];
      const int a = lengths[p1];
      const EntityId* v1 = &flat[p1 * stride];
      for (std::size_t j = lo; j < hi; ++j) {
        const std::size_t p2 = order[j];
        const int b = lengths[p2];
        if (a != b && a != b + 1) continue;
        if (a + b < 3 || a + b > max_edges) continue;
        const EntityId* v2 = &flat[p2 * stride];
        if (v1[0] >= v2[0]) continue;
        bool disjoint = true;
        for (int x = 0; x + 1 < a && disjoint; ++x) {
          for (int y = 0; y + 1 < b; ++y) {
            if (v1[x] == v2[y]) {
              disjoint = false;
              break;
            }
          }
        }
        if (!disjoint) continue;
        cycle.clear();
        cycle.push_back(anchor);
        cycle.insert(cycle.end(), v1, v1 + a);
        for (int y = b - 2; y >= 0; --y) cycle.push_back(v2[y]);
        visit(cycle);
      }
    }
    lo = hi;
  }
}

MiningResult mine_candidate_rules(const KnowledgeGraph& kg, const SimpleGraph& graph, const MiningConfig& config) {
  if (config.max_body_length < 1) throw std::invalid_argument("max body length must be at least 1");
  if (config.expansion_cap < 1) throw std::invalid_argument("expansion cap must be at least 1");
  if (!kg.augmented()) throw std::logic_error("mine_candidate_rules requires an inverse-augmented graph");

  const int workers = std::max(1, config.workers);
  std::vector<WorkerState> states;
  states.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    states.push_back({RuleKeySet(config.max_body_length, kg.label_capacity()), {}, {}, {}, {}});
  }

  const int max_edges = config.max_body_length + 1;
  parallel_for_dynamic(static_cast<std::size_t>(graph.entity_count()), workers, [&](std::size_t w, std::size_t i) {
    WorkerState& state = states[w];
    const auto anchor = static_cast<EntityId>(i);
    for (EntityId other : graph.neighbors(anchor)) {
      if (other > anchor) expand_parallel_labels(graph, anchor, other, config.expansion_cap, state);
    }
    for_each_anchored_cycle(graph, anchor, max_edges, [&](std::span<const EntityId> cycle) {
      expand_cycle(graph, cycle, config.expansion_cap, state);
    });
  });

  MiningResult result;
  for (std::size_t w = 1; w < states.size(); ++w) states[0].keys.merge(states[w].keys);
  for (const auto& s : states) {
    result.stats.entity_cycles += s.stats.entity_cycles;
    result.stats.multi_label_edges += s.stats.multi_label_edges;
    result.stats.skipped_cycles += s.stats.skipped_cycles;
  }
  result.rules = states[0].keys.to_rules();
  return result;
}

MiningResult mine_candidate_rules(const KnowledgeGraph& kg, const MiningConfig& config) {
  return mine_candidate_rules(kg, to_simple_graph(kg), config);
}

}  // namespace kgpath
