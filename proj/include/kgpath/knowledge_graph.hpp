#ifndef KGPATH_KNOWLEDGE_GRAPH_HPP
#define KGPATH_KNOWLEDGE_GRAPH_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgpath/types.hpp"

namespace kgpath {

enum class Split { train = 0, valid = 1, test = 2 };

inline constexpr std::string_view kInversePrefix = "INV:";

/// Bijective name <-> dense id map; ids are assigned in first-seen order.
class Vocabulary {
 public:
  std::int32_t intern(std::string_view name);
  std::optional<std::int32_t> find(std::string_view name) const;
  const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

/// Outgoing edge of the train-split adjacency index.
struct Neighbor {
  RelationId relation;
  EntityId tail = 0;

  constexpr auto operator<=>(const Neighbor&) const = default;
};

/// Interned triple store with train-split adjacency indexes.
///
/// Immutable after construction. Per-label arrays always have room for both
/// orientations of every base relation, whether or not the graph has been
/// augmented with inverses.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::array<std::vector<Triple>, 3> splits,
                 bool augmented);

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }

  std::int32_t entity_count() const { return entities_.size(); }
  std::int32_t base_relation_count() const { return relations_.size(); }
  /// Directed labels in use: 2R once augmented, R before.
  std::int32_t relation_count() const { return augmented_ ? 2 * base_relation_count() : base_relation_count(); }
  /// Size of arrays indexed by `RelationId::index()`.
  std::int32_t label_capacity() const { return 2 * base_relation_count(); }
  bool augmented() const { return augmented_; }

  std::span<const Triple> split(Split s) const { return splits_[static_cast<std::size_t>(s)]; }
  std::span<const Triple> train() const { return split(Split::train); }

  /// Train-split out-edges of `head`, sorted by (relation, tail).
  std::span<const Neighbor> neighbors(EntityId head) const;
  /// Train-split tails reachable from `head` through `relation`, ascending.
  std::span<const Neighbor> neighbors(EntityId head, RelationId relation) const;
  bool has_train_edge(EntityId head, RelationId relation, EntityId tail) const;
  /// Train-split triples carrying `relation`.
  std::span<const Triple> triples_with(RelationId relation) const;

  /// Relation name as serialized: base name, prefixed with "INV:" for r^-1.
  std::string relation_name(RelationId r) const;
  std::optional<RelationId> parse_relation(std::string_view name) const;

 private:
  void build_indexes();

  Vocabulary entities_;
  Vocabulary relations_;
  std::array<std::vector<Triple>, 3> splits_;
  bool augmented_ = false;

  std::vector<std::size_t> adjacency_offsets_;
  std::vector<Neighbor> adjacency_;
  std::vector<std::size_t> label_offsets_;
  std::vector<Triple> by_label_;
};

struct LoadStats {
  std::array<std::size_t, 3> duplicates_dropped{};
};

/// Reads three head<TAB>relation<TAB>tail files. Entity and relation ids are
/// assigned by first appearance in train, then valid, then test. Duplicate
/// lines within a file are dropped (with a warning on stderr).
KnowledgeGraph load_dataset(const std::filesystem::path& train, const std::filesystem::path& valid,
                            const std::filesystem::path& test, LoadStats* stats = nullptr);

/// `dir/train.txt`, `dir/valid.txt`, `dir/test.txt`.
KnowledgeGraph load_dataset_dir(const std::filesystem::path& dir, LoadStats* stats = nullptr);

/// Writes the non-inverse triples of each split back as TSV into `dir`.
void write_dataset_dir(const KnowledgeGraph& kg, const std::filesystem::path& dir);

/// Adds (t, r^-1, h) for every (h, r, t) in every split. Throws
/// std::logic_error when `kg` is already augmented.
KnowledgeGraph augment_inverses(const KnowledgeGraph& kg);

}  // namespace kgpath

#endif  // KGPATH_KNOWLEDGE_GRAPH_HPP
