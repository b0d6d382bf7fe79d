#include "kgpath/knowledge_graph.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <unordered_set>

namespace kgpath {

std::int32_t Vocabulary::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

KnowledgeGraph::KnowledgeGraph(Vocabulary entities, Vocabulary relations,
                               std::array<std::vector<Triple>, 3> splits, bool augmented)
    : entities_(std::move(entities)),
      relations_(std::move(relations)),
      splits_(std::move(splits)),
      augmented_(augmented) {
  build_indexes();
}

void KnowledgeGraph::build_indexes() {
  const auto n_entities = static_cast<std::size_t>(entity_count());
  const auto n_labels = static_cast<std::size_t>(label_capacity());
  const auto& train = splits_[0];

  adjacency_offsets_.assign(n_entities + 1, 0);
  label_offsets_.assign(n_labels + 1, 0);
  for (const Triple& t : train) {
    ++adjacency_offsets_[static_cast<std::size_t>(t.head) + 1];
    ++label_offsets_[static_cast<std::size_t>(t.relation.index()) + 1];
  }
  for (std::size_t i = 0; i < n_entities; ++i) adjacency_offsets_[i + 1] += adjacency_offsets_[i];
  for (std::size_t i = 0; i < n_labels; ++i) label_offsets_[i + 1] += label_offsets_[i];

  adjacency_.resize(train.size());
  by_label_.resize(train.size());
  auto adj_fill = adjacency_offsets_;
  auto label_fill = label_offsets_;
  for (const Triple& t : train) {
    adjacency_[adj_fill[static_cast<std::size_t>(t.head)]++] = {t.relation, t.tail};
    by_label_[label_fill[static_cast<std::size_t>(t.relation.index())]++] = t;
  }
  for (std::size_t e = 0; e < n_entities; ++e) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(adjacency_offsets_[e]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(adjacency_offsets_[e + 1]));
  }
}

std::span<const Neighbor> KnowledgeGraph::neighbors(EntityId head) const {
  const auto e = static_cast<std::size_t>(head);
  return {adjacency_.data() + adjacency_offsets_[e], adjacency_offsets_[e + 1] - adjacency_offsets_[e]};
}

std::span<const Neighbor> KnowledgeGraph::neighbors(EntityId head, RelationId relation) const {
  const auto all = neighbors(head);
  auto lo = std::lower_bound(all.begin(), all.end(), Neighbor{relation, 0});
  auto hi = std::lower_bound(lo, all.end(), Neighbor{RelationId::from_index(relation.index() + 1), 0});
  return {lo, hi};
}

bool KnowledgeGraph::has_train_edge(EntityId head, RelationId relation, EntityId tail) const {
  const auto all = neighbors(head);
  return std::binary_search(all.begin(), all.end(), Neighbor{relation, tail});
}

std::span<const Triple> KnowledgeGraph::triples_with(RelationId relation) const {
  const auto r = static_cast<std::size_t>(relation.index());
  return {by_label_.data() + label_offsets_[r], label_offsets_[r + 1] - label_offsets_[r]};
}

std::string KnowledgeGraph::relation_name(RelationId r) const {
  const std::string& base = relations_.name(r.base());
  return r.is_inverse() ? std::string(kInversePrefix) + base : base;
}

std::optional<RelationId> KnowledgeGraph::parse_relation(std::string_view name) const {
  const bool inverse = name.starts_with(kInversePrefix);
  if (inverse) name.remove_prefix(kInversePrefix.size());
  auto base = relations_.find(name);
  if (!base) return std::nullopt;
  return RelationId(*base, inverse);
}

namespace {

std::vector<Triple> read_split(const std::filesystem::path& path, Vocabulary& entities, Vocabulary& relations,
                               std::size_t& duplicates) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::vector<Triple> triples;
  std::unordered_set<Triple, TripleHash> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::array<std::string_view, 3> fields;
    std::string_view rest = line;
    std::size_t n_fields = 0;
    while (true) {
      const auto tab = rest.find('\t');
      if (n_fields == fields.size()) {
        ++n_fields;
        break;
      }
      fields[n_fields++] = rest.substr(0, tab);
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (n_fields != 3) throw ParseError(path.string(), line_no, "expected 3 tab-separated fields");
    for (auto f : fields) {
      if (f.empty()) throw ParseError(path.string(), line_no, "empty field");
    }
    if (fields[1].starts_with(kInversePrefix)) {
      throw ParseError(path.string(), line_no, "relation names may not start with INV:");
    }

    const EntityId h = entities.intern(fields[0]);
    const RelationId r(relations.intern(fields[1]), false);
    const EntityId t = entities.intern(fields[2]);
    const Triple triple{h, r, t};
    if (!seen.insert(triple).second) {
      ++duplicates;
      continue;
    }
    triples.push_back(triple);
  }
  if (duplicates > 0) {
    std::cerr << "warning: dropped " << duplicates << " duplicate line(s) in " << path.string() << "\n";
  }
  return triples;
}

}  // namespace

KnowledgeGraph load_dataset(const std::filesystem::path& train, const std::filesystem::path& valid,
                            const std::filesystem::path& test, LoadStats* stats) {
  Vocabulary entities;
  Vocabulary relations;
  LoadStats local;
  std::array<std::vector<Triple>, 3> splits;
  splits[0] = read_split(train, entities, relations, local.duplicates_dropped[0]);
  if (splits[0].empty()) throw std::runtime_error("train split is empty: " + train.string());
  splits[1] = read_split(valid, entities, relations, local.duplicates_dropped[1]);
  splits[2] = read_split(test, entities, relations, local.duplicates_dropped[2]);
  if (stats) *stats = local;
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(splits), false);
}

KnowledgeGraph load_dataset_dir(const std::filesystem::path& dir, LoadStats* stats) {
  return load_dataset(dir / "train.txt", dir / "valid.txt", dir / "test.txt", stats);
}

void write_dataset_dir(const KnowledgeGraph& kg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  constexpr std::array<const char*, 3> names{"train.txt", "valid.txt", "test.txt"};
  for (std::size_t s = 0; s < names.size(); ++s) {
    std::ofstream out(dir / names[s]);
    if (!out) throw std::runtime_error("cannot write " + (dir / names[s]).string());
    for (const Triple& t : kg.split(static_cast<Split>(s))) {
      if (t.relation.is_inverse()) continue;
      out << kg.entities().name(t.head) << '\t' << kg.relations().name(t.relation.base()) << '\t'
          << kg.entities().name(t.tail) << '\n';
    }
  }
}

KnowledgeGraph augment_inverses(const KnowledgeGraph& kg) {
  if (kg.augmented()) throw std::logic_error("knowledge graph is already augmented with inverses");
  std::array<std::vector<Triple>, 3> splits;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const auto src = kg.split(static_cast<Split>(s));
    auto& dst = splits[s];
    dst.reserve(2 * src.size());
    dst.assign(src.begin(), src.end());
    for (const Triple& t : src) dst.push_back(inverted(t));
  }
  return KnowledgeGraph(kg.entities(), kg.relations(), std::move(splits), true);
}

}  // namespace kgpath
