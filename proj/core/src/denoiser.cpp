#include "gsr/denoiser.hpp"

#include "gsr/parallel.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <string>

namespace gsr {

SymmetricEigen group_dictionary(const PatchGroup& group) {
  const Eigen::MatrixXd cov = group.matrix * group.matrix.transpose() / static_cast<double>(group.group_size());
  return symmetric_eigen(cov);
}

GroupCodes compute_codes(const PatchGroup& group, const Eigen::MatrixXd& prior_dictionary,
                         const Eigen::MatrixXd& group_dictionary) {
  GroupCodes codes;
  codes.prior = prior_dictionary.transpose() * group.matrix;
  codes.noisy = group_dictionary.transpose() * group.matrix;
  codes.residual = codes.noisy - codes.prior;
  return codes;
}

GroupCodes attenuate_prior_codes(GroupCodes codes, const Eigen::VectorXd& prior_eigenvalues, double sigma_t) {
  const double noise_var = sigma_t * sigma_t;
  for (Eigen::Index j = 0; j < codes.prior.rows(); ++j) {
    const double signal = std::max(prior_eigenvalues(j), 0.0);
    const double denom = signal + noise_var;
    codes.prior.row(j) *= denom > 0.0 ? signal / denom : 1.0;
  }
  codes.residual = codes.noisy - codes.prior;
  return codes;
}

GroupCodes lambda_schedule(GroupCodes codes, double sigma_t, double c, double sigma_floor) {
  if (!(sigma_t >= 0.0)) throw std::invalid_argument("sigma_t must be >= 0");
  const Eigen::Index rows = codes.residual.rows();
  const double cols = static_cast<double>(codes.residual.cols());
  const double scale = c * 2.0 * std::numbers::sqrt2 * sigma_t * sigma_t;
  codes.sigma_rows.resize(rows);
  codes.lambda_rows.resize(rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    const auto row = codes.residual.row(j).array();
    const double mean = row.mean();
    const double sd = std::sqrt((row - mean).square().sum() / cols);
    codes.sigma_rows(j) = std::max(sd, sigma_floor);
    codes.lambda_rows(j) = scale / codes.sigma_rows(j);
  }
  return codes;
}

Eigen::MatrixXd shrink(const GroupCodes& codes) {
  if (codes.lambda_rows.size() != codes.noisy.rows()) throw std::invalid_argument("lambda_rows not populated");
  Eigen::MatrixXd out(codes.noisy.rows(), codes.noisy.cols());
  for (Eigen::Index l = 0; l < out.cols(); ++l) {
    for (Eigen::Index j = 0; j < out.rows(); ++j) {
      const double b = codes.prior(j, l);
      out(j, l) = soft_threshold(codes.noisy(j, l) - b, codes.lambda_rows(j)) + b;
    }
  }
  return out;
}

double residual_objective(const Eigen::MatrixXd& group_matrix, const Eigen::MatrixXd& dictionary,
                          const Eigen::MatrixXd& codes, const Eigen::MatrixXd& prior_codes,
                          const Eigen::VectorXd& lambda_rows) {
  const double fidelity = 0.5 * (group_matrix - dictionary * codes).squaredNorm();
  const double penalty = lambda_rows.dot((codes - prior_codes).cwiseAbs().rowwise().sum());
  return fidelity + penalty;
}

GroupPass run_group_pass(const GrayImage& y_reg, Position ref, const GmmModel& model,
                         const ComponentScorer& scorer, const DenoiseParams& params, double sigma_t,
                         const GroupPassOptions& options) {
  GroupPass pass;
  pass.group = subtract_group_mean(block_match(y_reg, ref, params.patch_spec()));
  pass.component = scorer.select(pass.group);
  pass.dictionary = group_dictionary(pass.group);
  const SymmetricEigen& prior = options.prior_equals_group_dictionary ? pass.dictionary
                                                                      : component_dictionary(model, pass.component);
  GroupCodes codes = compute_codes(pass.group, prior.vectors, pass.dictionary.vectors);
  if (params.prior_codes == PriorCodes::Wiener) codes = attenuate_prior_codes(std::move(codes), prior.values, sigma_t);
  pass.codes = lambda_schedule(std::move(codes), sigma_t, params.c);
  return pass;
}

double update_noise_level(const GrayImage& noisy, const GrayImage& estimate, double sigma, double gamma) {
  const double remaining = sigma * sigma - mean_squared_error(noisy, estimate);
  return gamma * std::sqrt(std::max(remaining, 0.0));
}

DenoiseResult denoise(const GrayImage& noisy, const GmmModel& model, const DenoiseParams& params,
                      const IterationObserver& observer) {
  params.validate();
  const PatchSpec spec = params.patch_spec();
  spec.validate(noisy);
  if (model.patch_dim() != spec.patch_dim()) {
    throw ModelError("model patch dimension " + std::to_string(model.patch_dim()) + " (d=" +
                     std::to_string(model.patch_size()) + ") does not match patch size d=" +
                     std::to_string(params.patch_size) + " (dimension " + std::to_string(spec.patch_dim()) + ")");
  }

  const std::vector<Position> refs = reference_positions(noisy, spec);
  DenoiseResult result;
  GrayImage x_hat = noisy;

  for (int t = 1; t <= params.iters; ++t) {
    GrayImage y_reg = x_hat;
    for (std::size_t k = 0; k < y_reg.size(); ++k) {
      y_reg.data()[k] += params.rho * (noisy.data()[k] - x_hat.data()[k]);
    }
    const double sigma_t = t == 1 ? params.sigma : update_noise_level(noisy, x_hat, params.sigma, params.gamma);
    result.sigma_per_iteration.push_back(sigma_t);

    const ComponentScorer scorer(model, sigma_t, params.use_prior_weights);
    std::vector<PatchGroup> estimates(refs.size());
    parallel_for(refs.size(), params.threads, [&](std::size_t i) {
      GroupPass pass = run_group_pass(y_reg, refs[i], model, scorer, params, sigma_t);
      const Eigen::MatrixXd shrunk = shrink(pass.codes);
#ifndef NDEBUG
      {
        const auto objective = [&](const Eigen::MatrixXd& a) {
          return residual_objective(pass.group.matrix, pass.dictionary.vectors, a, pass.codes.prior,
                                    pass.codes.lambda_rows);
        };
        const double at_new = objective(shrunk);
        const double slack = 1e-9 * (1.0 + pass.group.matrix.squaredNorm());
        assert(at_new <= objective(pass.codes.noisy) + slack);
        assert(at_new <= objective(pass.codes.prior) + slack);
      }
#endif
      pass.group.matrix = pass.dictionary.vectors * shrunk;
      estimates[i] = restore_group_mean(std::move(pass.group));
    });

    x_hat = aggregate(estimates, noisy.width(), noisy.height(), &x_hat);
    if (observer) observer(IterationState{std::move(y_reg), x_hat, sigma_t, t});
  }

  result.image = clamped(x_hat);
  return result;
}

}  // namespace gsr
