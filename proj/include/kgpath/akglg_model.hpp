#ifndef KGPATH_AKGLG_MODEL_HPP
#define KGPATH_AKGLG_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>

#include "kgpath/lie_group.hpp"
#include "kgpath/types.hpp"

namespace kgpath {

/// Attention vectors and points on G^n for every entity and every directed
/// relation label. Columns are items, rows are coordinates. Relation columns
/// are indexed by `RelationId::index()`, so r (tail prediction) and r^-1
/// (head prediction) carry independent embeddings.
template <class Group>
struct GroupEmbedding {
  using GroupType = Group;
  using Scalar = typename Group::Scalar;
  using Element = typename Group::Element;
  using AttentionMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using PointMatrix = Eigen::Matrix<Element, Eigen::Dynamic, Eigen::Dynamic>;

  AttentionMatrix entity_attention;
  PointMatrix entity_points;
  AttentionMatrix relation_attention;
  PointMatrix relation_points;

  Eigen::Index dim() const { return entity_attention.rows(); }
  Eigen::Index entity_count() const { return entity_attention.cols(); }
  Eigen::Index label_count() const { return relation_attention.cols(); }

  /// Unit attention everywhere, identity points.
  static GroupEmbedding identity(Eigen::Index dim, Eigen::Index entities, Eigen::Index labels) {
    GroupEmbedding m;
    m.entity_attention = AttentionMatrix::Ones(dim, entities);
    m.entity_points = PointMatrix::Constant(dim, entities, Group::identity());
    m.relation_attention = AttentionMatrix::Ones(dim, labels);
    m.relation_points = PointMatrix::Constant(dim, labels, Group::identity());
    return m;
  }
};

/// (w_h o w_r o w_t) . d_G(g_h +_G g_r, g_t), summed over coordinates.
template <class Group>
typename Group::Scalar score_triple(const GroupEmbedding<Group>& m, EntityId h, RelationId r, EntityId t) {
  using Scalar = typename Group::Scalar;
  Scalar total(0);
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    const Scalar weight = m.entity_attention(i, h) * m.relation_attention(i, r.index()) * m.entity_attention(i, t);
    total += weight * Group::similarity(Group::compose(m.entity_points(i, h), m.relation_points(i, r.index())),
                                        m.entity_points(i, t));
  }
  return total;
}

using SignEmbedding = GroupEmbedding<SignGroup<double>>;
using CircleEmbedding = GroupEmbedding<CircleGroup<double>>;
using LineEmbedding = GroupEmbedding<LineGroup<double>>;

/// An AKGLG embedding on one of the three supported base groups.
class AkglgModel {
 public:
  using Variant = std::variant<SignEmbedding, CircleEmbedding, LineEmbedding>;

  AkglgModel() = default;
  AkglgModel(Variant embedding) : embedding_(std::move(embedding)) {}  // NOLINT(google-explicit-constructor)

  GroupKind kind() const { return static_cast<GroupKind>(embedding_.index()); }
  Eigen::Index dim() const;
  Eigen::Index entity_count() const;
  Eigen::Index label_count() const;

  const Variant& embedding() const { return embedding_; }
  Variant& embedding() { return embedding_; }

  template <class Visitor>
  decltype(auto) visit(Visitor&& v) const {
    return std::visit(std::forward<Visitor>(v), embedding_);
  }

 private:
  Variant embedding_;
};

double score_triple(const AkglgModel& model, EntityId h, RelationId r, EntityId t);

/// Complex vectors c = w o g for entities and relation labels.
struct ComposedComplex {
  Eigen::MatrixXcd entities;
  Eigen::MatrixXcd relations;
};

/// Real vectors c = w o g (DistMult form of a SIGN model).
struct ComposedReal {
  Eigen::MatrixXd entities;
  Eigen::MatrixXd relations;
};

ComposedComplex compose_complex(const CircleEmbedding& model);
/// Splits each coordinate into attention |c| and point c/|c|. A zero
/// coordinate yields attention 0 and the identity point.
CircleEmbedding decompose_complex(const ComposedComplex& composed);

ComposedReal compose_real(const SignEmbedding& model);
/// Attention |c|, point sign(c); zero coordinates map to attention 0, point +1.
SignEmbedding decompose_real(const ComposedReal& composed);

struct EquivalenceReport {
  bool passed = true;
  double max_deviation = 0.0;
  Triple worst{};
  double worst_group_score = 0.0;
  double worst_factored_score = 0.0;
  std::size_t checked = 0;

  std::string diagnostic() const;
};

/// Compares the group-form score with the factored bilinear score of the
/// composed vectors (DistMult for SIGN, ComplEx for CIRCLE) on `samples`
/// random triples. LINE has no factored form and throws std::invalid_argument.
EquivalenceReport score_equivalence_check(const AkglgModel& model, std::size_t samples, std::uint64_t seed,
                                          double tolerance = 1e-9);

}  // namespace kgpath

#endif  // KGPATH_AKGLG_MODEL_HPP
