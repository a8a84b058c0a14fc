#include "gsr/gmm.hpp"

#include "gsr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace gsr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double symmetry_tolerance(const Eigen::MatrixXd& m) {
  return 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

Eigen::VectorXd packed_scatter(const Eigen::MatrixXd& centered) {
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(centered.rows(), centered.rows());
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  scatter.triangularView<Eigen::StrictlyUpper>() = scatter.transpose();
  return pack_symmetric(scatter);
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& values) {
  const double top = values.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((values.array() - top).exp().sum());
}

}  // namespace

GmmModel::GmmModel(std::vector<double> weights, std::vector<Eigen::MatrixXd> covariances)
    : GmmModel(weights, std::vector<Eigen::VectorXd>(), std::move(covariances)) {}

GmmModel::GmmModel(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
                   std::vector<Eigen::MatrixXd> covariances) {
  const std::size_t k_count = weights.size();
  if (k_count == 0) throw ModelError("model needs at least one component");
  if (covariances.size() != k_count) throw ModelError("weight and covariance counts differ");
  if (!means.empty() && means.size() != k_count) throw ModelError("weight and mean counts differ");

  patch_dim_ = static_cast<int>(covariances.front().rows());
  if (patch_dim_ < 1) throw ModelError("empty covariance");

  double weight_sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || !(w > 0.0)) throw ModelError("mixture weights must be finite and positive");
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > 1e-10) {
    throw ModelError("mixture weights sum to " + std::to_string(weight_sum) + ", expected 1");
  }

  components_.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    GmmComponent c;
    c.weight = weights[k];
    c.covariance = std::move(covariances[k]);
    c.mean = means.empty() ? Eigen::VectorXd::Zero(patch_dim_) : std::move(means[k]);
    const std::string tag = "component " + std::to_string(k) + ": ";
    if (c.covariance.rows() != patch_dim_ || c.covariance.cols() != patch_dim_ || c.mean.size() != patch_dim_) {
      throw ModelError(tag + "dimension mismatch");
    }
    if (!c.covariance.allFinite() || !c.mean.allFinite()) throw ModelError(tag + "non-finite parameters");
    const double tol = symmetry_tolerance(c.covariance);
    if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > tol) {
      throw ModelError(tag + "covariance not symmetric");
    }
    c.eigen = symmetric_eigen(c.covariance);
    if (c.eigen.values.minCoeff() < -tol) throw ModelError(tag + "covariance not positive semi-definite");
    const Eigen::MatrixXd gram = c.eigen.vectors.transpose() * c.eigen.vectors;
    if ((gram - Eigen::MatrixXd::Identity(patch_dim_, patch_dim_)).cwiseAbs().maxCoeff() > 1e-8) {
      throw ModelError(tag + "eigenvectors not orthonormal");
    }
    if (relative_frobenius(c.eigen.reconstruct(), c.covariance) > 1e-6) {
      throw ModelError(tag + "eigendecomposition does not reconstruct covariance");
    }
    components_.push_back(std::move(c));
  }
}

int GmmModel::patch_size() const {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(patch_dim_))));
  return d * d == patch_dim_ ? d : 0;
}

void TrainingConfig::validate(int num_components) const {
  spec.validate();
  if (num_components < 1) throw std::invalid_argument("component count must be >= 1");
  if (n_groups < num_components) throw std::invalid_argument("n_groups must be >= component count");
  if (!(covariance_floor > 0.0)) throw std::invalid_argument("covariance floor must be > 0");
  if (max_em_iters < 0) throw std::invalid_argument("max_em_iters must be >= 0");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("EM tolerance must be >= 0");
}

std::vector<PatchGroup> sample_training_groups(std::span<const GrayImage> corpus, const TrainingConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("training corpus is empty");
  cfg.spec.validate();
  for (const GrayImage& img : corpus) cfg.spec.validate(img);

  struct Draw {
    std::size_t image;
    Position ref;
  };
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_image(0, corpus.size() - 1);
  std::vector<Draw> draws(static_cast<std::size_t>(std::max(cfg.n_groups, 0)));
  for (Draw& draw : draws) {
    draw.image = pick_image(rng);
    const GrayImage& img = corpus[draw.image];
    std::uniform_int_distribution<int> pick_row(0, img.height() - cfg.spec.patch_size);
    std::uniform_int_distribution<int> pick_col(0, img.width() - cfg.spec.patch_size);
    draw.ref.row = pick_row(rng);
    draw.ref.col = pick_col(rng);
  }

  std::vector<PatchGroup> groups(draws.size());
  parallel_for(draws.size(), cfg.threads, [&](std::size_t i) {
    groups[i] = subtract_group_mean(block_match(corpus[draws[i].image], draws[i].ref, cfg.spec));
  });
  return groups;
}

namespace {

struct ComponentParams {
  std::vector<double> weights;
  std::vector<Eigen::MatrixXd> covariances;
};

// Maximizes the expected complete log-likelihood for zero-mean components
// with eigenvalues floored at `floor`.
void m_step(const Eigen::MatrixXd& scatter, const Eigen::VectorXd& group_sizes,
            const Eigen::MatrixXd& resp, Eigen::Index dim, double floor, ComponentParams& params) {
  const Eigen::Index k_count = resp.cols();
  const double n = static_cast<double>(resp.rows());
  const Eigen::MatrixXd weighted = scatter.transpose() * resp;  // packed x K
  const Eigen::VectorXd patch_mass = resp.transpose() * group_sizes;

  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double group_mass = resp.col(k).sum();
    auto& weight = params.weights[static_cast<std::size_t>(k)];
    auto& cov = params.covariances[static_cast<std::size_t>(k)];
    if (!(patch_mass(k) > 0.0)) {
      // Component received no responsibility; keep its covariance.
      weight = std::numeric_limits<double>::min();
      if (cov.size() == 0) cov = floor * Eigen::MatrixXd::Identity(dim, dim);
      continue;
    }
    weight = std::max(group_mass / n, std::numeric_limits<double>::min());
    SymmetricEigen eig = symmetric_eigen(unpack_symmetric(weighted.col(k), dim) / patch_mass(k));
    eig.values = eig.values.cwiseMax(floor);
    cov = eig.reconstruct();
    cov = 0.5 * (cov + cov.transpose()).eval();
  }
  const double total = std::accumulate(params.weights.begin(), params.weights.end(), 0.0);
  for (double& w : params.weights) w /= total;
}

// Fills per-group log(pi_k) + sum_j log N(y_j | 0, Sigma_k); returns the
// mean over groups of the log-sum-exp and writes normalized responsibilities.
double e_step(const Eigen::MatrixXd& scatter, const Eigen::VectorXd& group_sizes, Eigen::Index dim,
              const ComponentParams& params, Eigen::MatrixXd& resp) {
  const Eigen::Index k_count = static_cast<Eigen::Index>(params.weights.size());
  Eigen::MatrixXd precisions(packed_size(dim), k_count);
  Eigen::VectorXd log_det(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const SymmetricEigen eig = symmetric_eigen(params.covariances[static_cast<std::size_t>(k)]);
    const Eigen::VectorXd values = eig.values.cwiseMax(std::numeric_limits<double>::min());
    log_det(k) = values.array().log().sum();
    const Eigen::MatrixXd precision = eig.vectors * values.cwiseInverse().asDiagonal() * eig.vectors.transpose();
    precisions.col(k) = pack_symmetric(precision, true);
  }

  resp = -0.5 * (scatter * precisions);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    resp.col(k).array() += std::log(params.weights[static_cast<std::size_t>(k)]) -
                           0.5 * group_sizes.array() * (static_cast<double>(dim) * kLog2Pi + log_det(k));
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < resp.rows(); ++i) {
    const double lse = log_sum_exp(resp.row(i));
    total += lse;
    resp.row(i) = (resp.row(i).array() - lse).exp();
    resp.row(i) /= resp.row(i).sum();
  }
  return total / static_cast<double>(resp.rows());
}

void check_groups(std::span<const PatchGroup> groups) {
  const int dim = groups.front().patch_dim();
  for (const PatchGroup& g : groups) {
    if (g.patch_dim() != dim) throw std::invalid_argument("training groups differ in patch dimension");
    if (g.group_size() < 1) throw std::invalid_argument("training group has no columns");
  }
}

}  // namespace

TrainingResult train_em(std::span<const PatchGroup> groups, int num_components, const TrainingConfig& cfg) {
  if (num_components < 1) throw std::invalid_argument("component count must be >= 1");
  if (!(cfg.covariance_floor > 0.0)) throw std::invalid_argument("covariance floor must be > 0");
  if (groups.size() < static_cast<std::size_t>(num_components)) {
    throw std::invalid_argument("fewer training groups than components");
  }
  check_groups(groups);

  const Eigen::Index n = static_cast<Eigen::Index>(groups.size());
  const Eigen::Index dim = groups.front().patch_dim();
  Eigen::MatrixXd scatter(n, packed_size(dim));
  Eigen::VectorXd group_sizes(n);
  parallel_for(groups.size(), cfg.threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    scatter.row(row) = packed_scatter(groups[i].matrix).transpose();
    group_sizes(row) = groups[i].group_size();
  });
  if (!scatter.allFinite()) throw NumericalError("training groups contain non-finite values");
  double energy = 0.0;
  for (const PatchGroup& g : groups) energy += g.matrix.squaredNorm();
  if (!(energy > 0.0)) throw NumericalError("training groups are all zero; nothing to learn");

  // Random balanced hard assignment, then one M-step.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, num_components);
  for (std::size_t i = 0; i < order.size(); ++i) resp(order[i], static_cast<Eigen::Index>(i % num_components)) = 1.0;

  ComponentParams params;
  params.weights.assign(static_cast<std::size_t>(num_components), 0.0);
  params.covariances.resize(static_cast<std::size_t>(num_components));
  m_step(scatter, group_sizes, resp, dim, cfg.covariance_floor, params);

  std::vector<double> history;
  bool converged = false;
  int iterations = 0;
  for (;;) {
    const double ll = e_step(scatter, group_sizes, dim, params, resp);
    if (!std::isfinite(ll)) throw NumericalError("EM produced a non-finite log-likelihood");
    if (!history.empty()) {
      const double prev = history.back();
      converged = std::abs(ll - prev) <= cfg.tolerance * std::max(std::abs(prev), 1e-300);
    }
    history.push_back(ll);
    if (converged || iterations >= cfg.max_em_iters) break;
    m_step(scatter, group_sizes, resp, dim, cfg.covariance_floor, params);
    ++iterations;
  }

  return TrainingResult{GmmModel(std::move(params.weights), std::move(params.covariances)), std::move(history),
                        iterations, converged};
}

double mean_log_likelihood(const GmmModel& model, std::span<const PatchGroup> groups) {
  if (groups.empty()) throw std::invalid_argument("no groups");
  ComponentScorer scorer(model, 0.0, true);
  double total = 0.0;
  for (const PatchGroup& g : groups) {
    const std::vector<double> scores = scorer.log_scores(g);
    total += log_sum_exp(Eigen::Map<const Eigen::RowVectorXd>(scores.data(), static_cast<Eigen::Index>(scores.size())));
  }
  return total / static_cast<double>(groups.size());
}

Eigen::MatrixXd group_responsibilities(const GmmModel& model, std::span<const PatchGroup> groups) {
  ComponentScorer scorer(model, 0.0, true);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(groups.size()), model.num_components());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::vector<double> scores = scorer.log_scores(groups[i]);
    const Eigen::Map<const Eigen::RowVectorXd> row(scores.data(), static_cast<Eigen::Index>(scores.size()));
    const double lse = log_sum_exp(row);
    auto target = out.row(static_cast<Eigen::Index>(i));
    target = (row.array() - lse).exp().matrix();
    target /= target.sum();
  }
  return out;
}

ComponentScorer::ComponentScorer(const GmmModel& model, double sigma, bool use_weights)
    : dim_(model.patch_dim()) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  const int k_count = model.num_components();
  packed_precisions_.resize(packed_size(dim_), k_count);
  log_norms_.resize(k_count);
  log_weights_.resize(k_count);
  const double noise_var = sigma * sigma;
  for (int k = 0; k < k_count; ++k) {
    const GmmComponent& c = model.component(k);
    const Eigen::VectorXd variances =
        (c.eigen.values.array() + noise_var).cwiseMax(std::numeric_limits<double>::min()).matrix();
    const Eigen::MatrixXd precision =
        c.eigen.vectors * variances.cwiseInverse().asDiagonal() * c.eigen.vectors.transpose();
    packed_precisions_.col(k) = pack_symmetric(precision, true);
    log_norms_(k) = -0.5 * (dim_ * kLog2Pi + variances.array().log().sum());
    log_weights_(k) = use_weights ? std::log(c.weight) : 0.0;
  }
}

std::vector<double> ComponentScorer::log_scores(const Eigen::VectorXd& packed, int group_size) const {
  if (packed.size() != packed_precisions_.rows()) throw std::invalid_argument("scatter dimension mismatch");
  const Eigen::VectorXd quad = packed_precisions_.transpose() * packed;
  std::vector<double> out(static_cast<std::size_t>(quad.size()));
  for (Eigen::Index k = 0; k < quad.size(); ++k) {
    out[static_cast<std::size_t>(k)] = log_weights_(k) + group_size * log_norms_(k) - 0.5 * quad(k);
  }
  return out;
}

std::vector<double> ComponentScorer::log_scores(const PatchGroup& group) const {
  if (group.patch_dim() != dim_) throw std::invalid_argument("group dimension does not match model");
  return log_scores(packed_scatter(group.matrix), group.group_size());
}

namespace {
int first_argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}
}  // namespace

int ComponentScorer::select(const PatchGroup& group) const { return first_argmax(log_scores(group)); }

int ComponentScorer::select(const Eigen::VectorXd& packed, int group_size) const {
  return first_argmax(log_scores(packed, group_size));
}

int select_component(const GmmModel& model, const PatchGroup& group, double sigma, bool use_weights) {
  return ComponentScorer(model, sigma, use_weights).select(group);
}

const SymmetricEigen& component_dictionary(const GmmModel& model, int k) { return model.component(k).eigen; }

}  // namespace gsr
