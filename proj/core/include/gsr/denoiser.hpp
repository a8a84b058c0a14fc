#pragma once

#include "gsr/gmm.hpp"
#include "gsr/grouping.hpp"
#include "gsr/image.hpp"
#include "gsr/linalg.hpp"
#include "gsr/params.hpp"

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace gsr {

/// Lower bound on per-row residual deviations.
inline constexpr double kResidualSigmaFloor = 1e-4;

/// Codes of one centered group under the group's own dictionary (noisy
/// codes A) and the selected prior dictionary (estimated true codes B).
struct GroupCodes {
  Eigen::MatrixXd noisy;     ///< A = D_i^T Y_i
  Eigen::MatrixXd prior;     ///< B = U_k^T Y_i
  Eigen::MatrixXd residual;  ///< R = A - B
  Eigen::VectorXd lambda_rows;
  Eigen::VectorXd sigma_rows;
};

/// PCA dictionary of a centered group: eigendecomposition of Y Y^T / m with
/// the same ordering and sign conventions as the prior dictionaries.
SymmetricEigen group_dictionary(const PatchGroup& group);

GroupCodes compute_codes(const PatchGroup& group, const Eigen::MatrixXd& prior_dictionary,
                         const Eigen::MatrixXd& group_dictionary);

/// Scales row j of the prior codes by l_j / (l_j + sigma_t^2) and refreshes
/// the residual. Used by PriorCodes::Wiener.
GroupCodes attenuate_prior_codes(GroupCodes codes, const Eigen::VectorXd& prior_eigenvalues, double sigma_t);

/// Sets sigma_rows(j) = max(std of row j of R, floor) and
/// lambda_rows(j) = c * 2 sqrt(2) * sigma_t^2 / sigma_rows(j).
GroupCodes lambda_schedule(GroupCodes codes, double sigma_t, double c,
                           double sigma_floor = kResidualSigmaFloor);

inline double soft_threshold(double x, double lambda) {
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return 0.0;
}

/// A_new = B + soft(A - B, lambda_row), elementwise. Exact minimizer of
/// 1/2 (x - a)^2 + lambda |x - b| for every coefficient.
Eigen::MatrixXd shrink(const GroupCodes& codes);

/// 1/2 ||Y - D A||_F^2 + sum_j lambda_j sum_l |A_jl - B_jl|.
double residual_objective(const Eigen::MatrixXd& group_matrix, const Eigen::MatrixXd& dictionary,
                          const Eigen::MatrixXd& codes, const Eigen::MatrixXd& prior_codes,
                          const Eigen::VectorXd& lambda_rows);

struct IterationState {
  GrayImage y_reg;  ///< regularized input the groups were matched on
  GrayImage x_hat;  ///< estimate after this iteration
  double sigma_t = 0.0;
  int t = 0;        ///< 1-based
};

struct DenoiseResult {
  GrayImage image;  ///< final estimate clamped to [0,255]
  std::vector<double> sigma_per_iteration;
};

/// Result of running one reference patch through match, select, code.
struct GroupPass {
  PatchGroup group;  ///< centered group as matched on y_reg
  int component = 0;
  SymmetricEigen dictionary;  ///< D_i
  GroupCodes codes;           ///< with lambda_rows populated
};

struct GroupPassOptions {
  bool prior_equals_group_dictionary = false;  ///< test hook: use D_i in place of U_k
};

/// Match, center, select a component, build both dictionaries, code and
/// compute thresholds for the group at `ref` in `y_reg`.
GroupPass run_group_pass(const GrayImage& y_reg, Position ref, const GmmModel& model,
                         const ComponentScorer& scorer, const DenoiseParams& params, double sigma_t,
                         const GroupPassOptions& options = {});

/// sigma_{t+1} = gamma * sqrt(max(sigma^2 - mean((y - x_hat)^2), 0)).
double update_noise_level(const GrayImage& noisy, const GrayImage& estimate, double sigma, double gamma);

using IterationObserver = std::function<void(const IterationState&)>;

/// Iterative group-sparsity-residual denoising with an external GMM prior.
/// Throws ModelError when the model's patch dimension is not d^2.
DenoiseResult denoise(const GrayImage& noisy, const GmmModel& model, const DenoiseParams& params,
                      const IterationObserver& observer = {});

}  // namespace gsr
