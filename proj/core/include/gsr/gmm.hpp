#pragma once

#include "gsr/grouping.hpp"
#include "gsr/image.hpp"
#include "gsr/linalg.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace gsr {

/// A model that violates its invariants, or a model file that cannot be read.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training or inference hit a numerically meaningless configuration.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GmmComponent {
  double weight = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  SymmetricEigen eigen;  ///< cached dictionary U_k and its eigenvalues
};

/// K-component Gaussian mixture over vectorized, group-centered patches.
///
/// Construction validates every invariant (positive weights summing to one,
/// finite symmetric PSD covariances, orthonormal eigenvectors that
/// reconstruct the covariance) and throws ModelError otherwise.
class GmmModel {
 public:
  GmmModel(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
           std::vector<Eigen::MatrixXd> covariances);

  /// Zero-mean convenience constructor.
  GmmModel(std::vector<double> weights, std::vector<Eigen::MatrixXd> covariances);

  int num_components() const { return static_cast<int>(components_.size()); }
  int patch_dim() const { return patch_dim_; }
  /// Patch side d with d*d == patch_dim, or 0 if patch_dim is not a square.
  int patch_size() const;

  const GmmComponent& component(int k) const { return components_.at(static_cast<std::size_t>(k)); }
  std::span<const GmmComponent> components() const { return components_; }

 private:
  int patch_dim_ = 0;
  std::vector<GmmComponent> components_;
};

struct TrainingConfig {
  int n_groups = 20000;
  PatchSpec spec;
  int max_em_iters = 30;
  double tolerance = 1e-6;          ///< relative change of the mean log-likelihood
  double covariance_floor = 1e-4;   ///< eigenvalue floor, intensity^2 units
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate(int num_components) const;
};

struct TrainingResult {
  GmmModel model;
  /// Mean per-group log-likelihood after initialization and after every
  /// M-step, in order. The last entry belongs to `model`.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

/// Draws n_groups uniformly random (image, position) pairs, block-matches
/// each and subtracts the group mean.
std::vector<PatchGroup> sample_training_groups(std::span<const GrayImage> corpus, const TrainingConfig& cfg);

/// Fits a zero-mean K-component mixture by EM with one responsibility per
/// group. Throws NumericalError on all-zero input.
TrainingResult train_em(std::span<const PatchGroup> groups, int num_components, const TrainingConfig& cfg);

/// Mean per-group log-likelihood of centered groups under `model`
/// (log of the mixture of per-group products, averaged over groups).
double mean_log_likelihood(const GmmModel& model, std::span<const PatchGroup> groups);

/// Posterior component probabilities of each centered group (one row per
/// group), with every patch of a group sharing the component.
Eigen::MatrixXd group_responsibilities(const GmmModel& model, std::span<const PatchGroup> groups);

/// Scores centered groups against every component with covariance
/// Sigma_k + sigma^2 I.
///
/// score_k = sum_j log N(y_j | 0, Sigma_k + sigma^2 I) + log pi_k. The
/// weight term is dropped when `use_weights` is false.
class ComponentScorer {
 public:
  ComponentScorer(const GmmModel& model, double sigma, bool use_weights = true);

  std::vector<double> log_scores(const PatchGroup& group) const;
  /// Same, from the packed (pack_symmetric, undoubled) scatter sum_j y_j y_j^T.
  std::vector<double> log_scores(const Eigen::VectorXd& packed_scatter, int group_size) const;

  /// Argmax of log_scores; ties go to the smallest index.
  int select(const PatchGroup& group) const;
  int select(const Eigen::VectorXd& packed_scatter, int group_size) const;

 private:
  int dim_;
  Eigen::MatrixXd packed_precisions_;  // packed_size(dim) x K, off-diagonals doubled
  Eigen::VectorXd log_norms_;          // -(dim log 2pi + log det) / 2 per component
  Eigen::VectorXd log_weights_;
};

int select_component(const GmmModel& model, const PatchGroup& group, double sigma, bool use_weights = true);

/// Eigendictionary of component k (cached at model construction).
const SymmetricEigen& component_dictionary(const GmmModel& model, int k);

/// Binary model file: "GSR-GMM\0", little-endian u32 version/K/patch_dim,
/// then per component f64 weight, mean, row-major covariance.
void save_model(const GmmModel& model, const std::filesystem::path& path);
GmmModel load_model(const std::filesystem::path& path);
std::string encode_model(const GmmModel& model);
GmmModel decode_model(std::string_view bytes);

}  // namespace gsr
