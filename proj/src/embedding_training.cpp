#include "kgpath/embedding_training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "kgpath/parallel.hpp"

namespace kgpath {

void TrainConfig::validate() const {
  if (dim <= 0) throw std::invalid_argument("dimension must be positive");
  if (!(regularization >= 0.0)) throw std::invalid_argument("regularization must be non-negative");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (epochs <= 0) throw std::invalid_argument("epoch count must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (!(init_scale > 0.0)) throw std::invalid_argument("init scale must be positive");
  if (workers <= 0) throw std::invalid_argument("worker count must be positive");
}

Eigen::Index parameter_rows(GroupKind kind, Eigen::Index dim) { return kind == GroupKind::sign ? dim : 2 * dim; }

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index feature_rows(GroupKind kind, Index dim) {
  switch (kind) {
    case GroupKind::sign:
      return dim;
    case GroupKind::circle:
      return 2 * dim;
    case GroupKind::line:
      return 3 * dim;
  }
  return 0;
}

/// F such that the scores of all tails are F^T q.
MatrixXd entity_features(const EmbeddingParameters& p) {
  if (p.kind != GroupKind::line) return p.entities;
  const Index n = p.dim;
  const auto w = p.entities.topRows(n);
  const auto g = p.entities.bottomRows(n);
  MatrixXd f(3 * n, p.entities.cols());
  f.topRows(n) = w;
  f.middleRows(n, n) = w.cwiseProduct(g);
  f.bottomRows(n) = w.cwiseProduct(g).cwiseProduct(g);
  return f;
}

VectorXd query_vector(const EmbeddingParameters& p, EntityId h, RelationId r) {
  const Index n = p.dim;
  const auto hc = p.entities.col(h);
  const auto rc = p.relations.col(r.index());
  switch (p.kind) {
    case GroupKind::sign:
      return hc.cwiseProduct(rc);
    case GroupKind::circle: {
      VectorXd q(2 * n);
      const auto hr = hc.head(n), hi = hc.tail(n), rr = rc.head(n), ri = rc.tail(n);
      q.head(n) = hr.cwiseProduct(rr) - hi.cwiseProduct(ri);
      q.tail(n) = hr.cwiseProduct(ri) + hi.cwiseProduct(rr);
      return q;
    }
    case GroupKind::line: {
      VectorXd q(3 * n);
      const VectorXd a = hc.head(n).cwiseProduct(rc.head(n));
      const VectorXd u = hc.tail(n) + rc.tail(n);
      q.head(n) = -a.cwiseProduct(u).cwiseProduct(u);
      q.segment(n, n) = 2.0 * a.cwiseProduct(u);
      q.tail(n) = -a;
      return q;
    }
  }
  return {};
}

/// Accumulates d(loss)/d(h column) and d(loss)/d(r column) given d(loss)/dq.
void backprop_query(const EmbeddingParameters& p, EntityId h, RelationId r, const Eigen::Ref<const VectorXd>& gq,
                    Eigen::Ref<VectorXd> gh, Eigen::Ref<VectorXd> gr) {
  const Index n = p.dim;
  const auto hc = p.entities.col(h);
  const auto rc = p.relations.col(r.index());
  switch (p.kind) {
    case GroupKind::sign:
      gh += gq.cwiseProduct(rc);
      gr += gq.cwiseProduct(hc);
      return;
    case GroupKind::circle: {
      const auto gre = gq.head(n), gim = gq.tail(n);
      const auto hr = hc.head(n), hi = hc.tail(n), rr = rc.head(n), ri = rc.tail(n);
      gh.head(n) += gre.cwiseProduct(rr) + gim.cwiseProduct(ri);
      gh.tail(n) += gim.cwiseProduct(rr) - gre.cwiseProduct(ri);
      gr.head(n) += gre.cwiseProduct(hr) + gim.cwiseProduct(hi);
      gr.tail(n) += gim.cwiseProduct(hr) - gre.cwiseProduct(hi);
      return;
    }
    case GroupKind::line: {
      const auto wh = hc.head(n), wr = rc.head(n);
      const VectorXd a = wh.cwiseProduct(wr);
      const VectorXd u = hc.tail(n) + rc.tail(n);
      const auto g1 = gq.head(n), g2 = gq.segment(n, n), g3 = gq.tail(n);
      const VectorXd ga = -g1.cwiseProduct(u).cwiseProduct(u) + 2.0 * g2.cwiseProduct(u) - g3;
      const VectorXd gu = -2.0 * g1.cwiseProduct(a).cwiseProduct(u) + 2.0 * g2.cwiseProduct(a);
      gh.head(n) += ga.cwiseProduct(wr);
      gr.head(n) += ga.cwiseProduct(wh);
      gh.tail(n) += gu;
      gr.tail(n) += gu;
      return;
    }
  }
}

/// Accumulates d(loss)/d(entity parameters) given d(loss)/dF.
void backprop_features(const EmbeddingParameters& p, const MatrixXd& gf, MatrixXd& ge) {
  if (p.kind != GroupKind::line) {
    ge += gf;
    return;
  }
  const Index n = p.dim;
  const auto w = p.entities.topRows(n);
  const auto g = p.entities.bottomRows(n);
  const auto g1 = gf.topRows(n), g2 = gf.middleRows(n, n), g3 = gf.bottomRows(n);
  ge.topRows(n) += g1 + g2.cwiseProduct(g) + g3.cwiseProduct(g).cwiseProduct(g);
  ge.bottomRows(n) += g2.cwiseProduct(w) + 2.0 * g3.cwiseProduct(w).cwiseProduct(g);
}

/// weight * sum_i |x_i|^3 over the regularized coordinates of one column.
/// Circle coordinates use the complex modulus; line regularizes attention only.
double nuclear3(GroupKind kind, Index n, const Eigen::Ref<const VectorXd>& col, double weight,
                Eigen::Ref<VectorXd> grad) {
  double value = 0.0;
  switch (kind) {
    case GroupKind::sign:
    case GroupKind::line: {
      for (Index i = 0; i < n; ++i) {
        const double x = col(i);
        const double ax = std::abs(x);
        value += ax * ax * ax;
        grad(i) += weight * 3.0 * ax * x;
      }
      break;
    }
    case GroupKind::circle: {
      for (Index i = 0; i < n; ++i) {
        const double re = col(i), im = col(n + i);
        const double m = std::sqrt(re * re + im * im);
        value += m * m * m;
        grad(i) += weight * 3.0 * m * re;
        grad(n + i) += weight * 3.0 * m * im;
      }
      break;
    }
  }
  return weight * value;
}

constexpr std::size_t kShardSize = 128;

struct PartialGradient {
  double loss = 0.0;
  MatrixXd features;
  MatrixXd entities;
  MatrixXd relations;
};

}  // namespace

EmbeddingParameters initial_parameters(GroupKind kind, Index dim, Index entities, Index labels, double init_scale,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  EmbeddingParameters p{kind, dim, MatrixXd(parameter_rows(kind, dim), entities),
                        MatrixXd(parameter_rows(kind, dim), labels)};
  for (MatrixXd* m : {&p.entities, &p.relations}) {
    for (Index j = 0; j < m->cols(); ++j) {
      for (Index i = 0; i < m->rows(); ++i) {
        // line attention starts in (0, 1); everything else near the origin
        (*m)(i, j) = (kind == GroupKind::line && i < dim) ? uniform(rng) : init_scale * normal(rng);
      }
    }
  }
  return p;
}

EmbeddingParameters to_parameters(const AkglgModel& model) {
  EmbeddingParameters p;
  p.kind = model.kind();
  p.dim = model.dim();
  switch (model.kind()) {
    case GroupKind::sign: {
      auto composed = compose_real(std::get<SignEmbedding>(model.embedding()));
      p.entities = std::move(composed.entities);
      p.relations = std::move(composed.relations);
      break;
    }
    case GroupKind::circle: {
      const auto composed = compose_complex(std::get<CircleEmbedding>(model.embedding()));
      p.entities.resize(2 * p.dim, composed.entities.cols());
      p.entities << composed.entities.real(), composed.entities.imag();
      p.relations.resize(2 * p.dim, composed.relations.cols());
      p.relations << composed.relations.real(), composed.relations.imag();
      break;
    }
    case GroupKind::line: {
      const auto& m = std::get<LineEmbedding>(model.embedding());
      p.entities.resize(2 * p.dim, m.entity_count());
      p.entities << m.entity_attention, m.entity_points;
      p.relations.resize(2 * p.dim, m.label_count());
      p.relations << m.relation_attention, m.relation_points;
      break;
    }
  }
  return p;
}

AkglgModel to_model(const EmbeddingParameters& p) {
  const Index n = p.dim;
  switch (p.kind) {
    case GroupKind::sign:
      return AkglgModel(decompose_real({p.entities, p.relations}));
    case GroupKind::circle: {
      ComposedComplex c;
      c.entities.resize(n, p.entities.cols());
      c.entities.real() = p.entities.topRows(n);
      c.entities.imag() = p.entities.bottomRows(n);
      c.relations.resize(n, p.relations.cols());
      c.relations.real() = p.relations.topRows(n);
      c.relations.imag() = p.relations.bottomRows(n);
      return AkglgModel(decompose_complex(c));
    }
    case GroupKind::line: {
      LineEmbedding m;
      m.entity_attention = p.entities.topRows(n);
      m.entity_points = p.entities.bottomRows(n);
      m.relation_attention = p.relations.topRows(n);
      m.relation_points = p.relations.bottomRows(n);
      return AkglgModel(std::move(m));
    }
  }
  throw std::logic_error("unreachable group kind");
}

double batch_loss(const EmbeddingParameters& params, std::span<const Triple> batch, double regularization,
                  EmbeddingParameters* gradient, int workers) {
  const Index n = params.dim;
  const Index rows = params.entities.rows();
  const Index n_entities = params.entities.cols();
  const auto batch_n = static_cast<Index>(batch.size());
  if (gradient) {
    gradient->kind = params.kind;
    gradient->dim = n;
    gradient->entities = MatrixXd::Zero(rows, n_entities);
    gradient->relations = MatrixXd::Zero(params.relations.rows(), params.relations.cols());
  }
  if (batch_n == 0) return 0.0;

  const MatrixXd features = entity_features(params);
  const Index f_rows = feature_rows(params.kind, n);
  const double inv_batch = 1.0 / static_cast<double>(batch_n);
  const double reg_weight = regularization * inv_batch;

  // Shard boundaries depend on the batch alone and shards are folded in
  // order, so the result is bit-identical for every worker count.
  const std::size_t n_shards = (batch.size() + kShardSize - 1) / kShardSize;
  const auto wave = static_cast<std::size_t>(std::max(1, workers));
  std::vector<PartialGradient> partials(std::min(wave, n_shards));
  double loss = 0.0;
  MatrixXd feature_grad;

  auto shard_gradient = [&](PartialGradient& part, std::size_t begin, std::size_t end) {
    part = {};
    const auto cols = static_cast<Index>(end - begin);
    MatrixXd queries(f_rows, cols);
    for (Index b = 0; b < cols; ++b) {
      const Triple& t = batch[begin + static_cast<std::size_t>(b)];
      queries.col(b) = query_vector(params, t.head, t.relation);
    }
    MatrixXd scores = features.transpose() * queries;  // entities x cols
    for (Index b = 0; b < cols; ++b) {
      const Triple& t = batch[begin + static_cast<std::size_t>(b)];
      auto s = scores.col(b);
      const double max = s.maxCoeff();
      const double target = s(t.tail) - max;
      s = (s.array() - max).exp();
      const double z = s.sum();
      part.loss += std::log(z) - target;
      s *= inv_batch / z;
      s(t.tail) -= inv_batch;
    }
    part.loss *= inv_batch;
    if (!gradient) {
      for (std::size_t i = begin; i < end; ++i) {
        VectorXd scratch = VectorXd::Zero(rows);
        const Triple& t = batch[i];
        part.loss += nuclear3(params.kind, n, params.entities.col(t.head), reg_weight, scratch);
        part.loss += nuclear3(params.kind, n, params.relations.col(t.relation.index()), reg_weight, scratch);
        part.loss += nuclear3(params.kind, n, params.entities.col(t.tail), reg_weight, scratch);
      }
      return;
    }
    part.features = queries * scores.transpose();  // f_rows x entities
    const MatrixXd query_grad = features * scores;  // f_rows x cols
    part.entities = MatrixXd::Zero(rows, n_entities);
    part.relations = MatrixXd::Zero(params.relations.rows(), params.relations.cols());
    for (Index b = 0; b < cols; ++b) {
      const Triple& t = batch[begin + static_cast<std::size_t>(b)];
      backprop_query(params, t.head, t.relation, query_grad.col(b), part.entities.col(t.head),
                     part.relations.col(t.relation.index()));
      part.loss += nuclear3(params.kind, n, params.entities.col(t.head), reg_weight, part.entities.col(t.head));
      part.loss += nuclear3(params.kind, n, params.relations.col(t.relation.index()), reg_weight,
                            part.relations.col(t.relation.index()));
      part.loss += nuclear3(params.kind, n, params.entities.col(t.tail), reg_weight, part.entities.col(t.tail));
    }
  };

  for (std::size_t first = 0; first < n_shards; first += wave) {
    const std::size_t count = std::min(wave, n_shards - first);
    parallel_chunks(count, static_cast<int>(count), [&](std::size_t, std::size_t lo, std::size_t hi) {
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t shard = first + k;
        shard_gradient(partials[k], shard * kShardSize, std::min(batch.size(), (shard + 1) * kShardSize));
      }
    });
    for (std::size_t k = 0; k < count; ++k) {
      PartialGradient& part = partials[k];
      loss += part.loss;
      if (!gradient || part.features.size() == 0) continue;
      if (feature_grad.size() == 0) {
        feature_grad = std::move(part.features);
      } else {
        feature_grad += part.features;
      }
      gradient->entities += part.entities;
      gradient->relations += part.relations;
    }
  }
  if (gradient && feature_grad.size() > 0) backprop_features(params, feature_grad, gradient->entities);
  return loss;
}

TrainingResult train_embeddings(const KnowledgeGraph& kg, GroupKind kind, const TrainConfig& config,
                                const std::function<void(int, double)>& on_epoch) {
  config.validate();
  if (!kg.augmented()) throw std::logic_error("train_embeddings requires an inverse-augmented graph");

  TrainingResult result;
  EmbeddingParameters& params = result.parameters;
  params = initial_parameters(kind, config.dim, kg.entity_count(), kg.label_capacity(), config.init_scale,
                              config.seed);
  MatrixXd accum_entities = MatrixXd::Zero(params.entities.rows(), params.entities.cols());
  MatrixXd accum_relations = MatrixXd::Zero(params.relations.rows(), params.relations.cols());
  constexpr double kEps = 1e-10;

  std::vector<Triple> data(kg.train().begin(), kg.train().end());
  std::mt19937_64 rng(config.seed ^ 0x5DEECE66Dull);
  EmbeddingParameters grad;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(data.begin(), data.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < data.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(data.size(), begin + static_cast<std::size_t>(config.batch_size));
      const std::span<const Triple> batch(data.data() + begin, end - begin);
      const double loss = batch_loss(params, batch, config.regularization, &grad, config.workers);
      if (!std::isfinite(loss) || !grad.entities.allFinite() || !grad.relations.allFinite()) {
        std::ostringstream os;
        os << "training diverged at epoch " << epoch << ", batch " << batch_index << " (loss " << loss << ")";
        throw NumericError(os.str());
      }
      accum_entities.array() += grad.entities.array().square();
      accum_relations.array() += grad.relations.array().square();
      params.entities.array() -= config.learning_rate * grad.entities.array() / (accum_entities.array().sqrt() + kEps);
      params.relations.array() -=
          config.learning_rate * grad.relations.array() / (accum_relations.array().sqrt() + kEps);
      if (kind == GroupKind::line) {
        params.entities.topRows(config.dim) = params.entities.topRows(config.dim).cwiseMax(0.0);
        params.relations.topRows(config.dim) = params.relations.topRows(config.dim).cwiseMax(0.0);
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      ++batch_index;
    }
    epoch_loss /= static_cast<double>(std::max<std::size_t>(1, data.size()));
    result.epoch_losses.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  result.model = to_model(params);
  return result;
}

EmbeddingQueryScorer::EmbeddingQueryScorer(const AkglgModel& model) : EmbeddingQueryScorer(to_parameters(model)) {}

EmbeddingQueryScorer::EmbeddingQueryScorer(EmbeddingParameters params)
    : params_(std::move(params)), features_(entity_features(params_)) {}

Eigen::VectorXd EmbeddingQueryScorer::score_tails(EntityId head, RelationId relation) const {
  return features_.transpose() * query_vector(params_, head, relation);
}

}  // namespace kgpath
