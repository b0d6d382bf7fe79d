#include "kgpath/akglg_model.hpp"

#include <random>
#include <sstream>
#include <stdexcept>

namespace kgpath {

std::string_view to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::sign:
      return "sign";
    case GroupKind::circle:
      return "circle";
    case GroupKind::line:
      return "line";
  }
  return "unknown";
}

GroupKind parse_group_kind(std::string_view name) {
  if (name == "sign") return GroupKind::sign;
  if (name == "circle") return GroupKind::circle;
  if (name == "line") return GroupKind::line;
  throw std::invalid_argument("unknown group '" + std::string(name) + "' (expected sign, circle or line)");
}

Eigen::Index AkglgModel::dim() const {
  return visit([](const auto& m) { return m.dim(); });
}
Eigen::Index AkglgModel::entity_count() const {
  return visit([](const auto& m) { return m.entity_count(); });
}
Eigen::Index AkglgModel::label_count() const {
  return visit([](const auto& m) { return m.label_count(); });
}

double score_triple(const AkglgModel& model, EntityId h, RelationId r, EntityId t) {
  return model.visit([&](const auto& m) { return static_cast<double>(score_triple(m, h, r, t)); });
}

ComposedComplex compose_complex(const CircleEmbedding& model) {
  return {model.entity_attention.cast<std::complex<double>>().cwiseProduct(model.entity_points),
          model.relation_attention.cast<std::complex<double>>().cwiseProduct(model.relation_points)};
}

namespace {

void split_complex(const Eigen::MatrixXcd& c, Eigen::MatrixXd& attention, Eigen::MatrixXcd& points) {
  attention = c.cwiseAbs();
  points.resize(c.rows(), c.cols());
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      const double a = attention(i, j);
      points(i, j) = a == 0.0 ? CircleGroup<double>::identity() : c(i, j) / a;
    }
  }
}

void split_real(const Eigen::MatrixXd& c, Eigen::MatrixXd& attention, Eigen::MatrixXd& points) {
  attention = c.cwiseAbs();
  points = c.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
}

}  // namespace

CircleEmbedding decompose_complex(const ComposedComplex& composed) {
  CircleEmbedding m;
  split_complex(composed.entities, m.entity_attention, m.entity_points);
  split_complex(composed.relations, m.relation_attention, m.relation_points);
  return m;
}

ComposedReal compose_real(const SignEmbedding& model) {
  return {model.entity_attention.cwiseProduct(model.entity_points),
          model.relation_attention.cwiseProduct(model.relation_points)};
}

SignEmbedding decompose_real(const ComposedReal& composed) {
  SignEmbedding m;
  split_real(composed.entities, m.entity_attention, m.entity_points);
  split_real(composed.relations, m.relation_attention, m.relation_points);
  return m;
}

std::string EquivalenceReport::diagnostic() const {
  std::ostringstream os;
  os << (passed ? "ok" : "MISMATCH") << ": checked " << checked << " triples, max |deviation| " << max_deviation;
  if (checked > 0) {
    os << " at (" << worst.head << ", " << worst.relation.index() << ", " << worst.tail
       << "): group score " << worst_group_score << " vs factored " << worst_factored_score;
  }
  return os.str();
}

EquivalenceReport score_equivalence_check(const AkglgModel& model, std::size_t samples, std::uint64_t seed,
                                          double tolerance) {
  if (model.kind() == GroupKind::line) {
    throw std::invalid_argument("score_equivalence_check: LINE has no bilinear factored form");
  }
  EquivalenceReport report;
  if (model.entity_count() == 0 || model.label_count() == 0) return report;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<EntityId> entity(0, static_cast<EntityId>(model.entity_count() - 1));
  std::uniform_int_distribution<std::int32_t> label(0, static_cast<std::int32_t>(model.label_count() - 1));

  auto factored = [&](const Triple& t) -> double {
    if (const auto* sign = std::get_if<SignEmbedding>(&model.embedding())) {
      const Eigen::VectorXd h = sign->entity_attention.col(t.head).cwiseProduct(sign->entity_points.col(t.head));
      const Eigen::VectorXd r = sign->relation_attention.col(t.relation.index())
                                    .cwiseProduct(sign->relation_points.col(t.relation.index()));
      const Eigen::VectorXd e = sign->entity_attention.col(t.tail).cwiseProduct(sign->entity_points.col(t.tail));
      return h.cwiseProduct(r).dot(e);
    }
    const auto& circle = std::get<CircleEmbedding>(model.embedding());
    const Eigen::VectorXcd h =
        circle.entity_attention.col(t.head).cast<std::complex<double>>().cwiseProduct(circle.entity_points.col(t.head));
    const Eigen::VectorXcd r = circle.relation_attention.col(t.relation.index())
                                   .cast<std::complex<double>>()
                                   .cwiseProduct(circle.relation_points.col(t.relation.index()));
    const Eigen::VectorXcd e =
        circle.entity_attention.col(t.tail).cast<std::complex<double>>().cwiseProduct(circle.entity_points.col(t.tail));
    return h.cwiseProduct(r).cwiseProduct(e.conjugate()).sum().real();
  };

  for (std::size_t s = 0; s < samples; ++s) {
    const Triple t{entity(rng), RelationId::from_index(label(rng)), entity(rng)};
    const double group_score = score_triple(model, t.head, t.relation, t.tail);
    const double factored_score = factored(t);
    const double deviation = std::abs(group_score - factored_score);
    if (report.checked == 0 || deviation > report.max_deviation) {
      report.max_deviation = deviation;
      report.worst = t;
      report.worst_group_score = group_score;
      report.worst_factored_score = factored_score;
    }
    ++report.checked;
  }
  report.passed = report.max_deviation < tolerance;
  return report;
}

}  // namespace kgpath
