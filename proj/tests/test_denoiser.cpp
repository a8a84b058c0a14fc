#include <doctest.h>

#include "gsr/denoiser.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace gsr;

namespace {

GroupCodes codes_from(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  GroupCodes codes;
  codes.noisy = a;
  codes.prior = b;
  codes.residual = a - b;
  return codes;
}

GmmModel small_model(std::mt19937_64& rng, int dim, int k_count) {
  std::vector<Eigen::MatrixXd> covs;
  for (int k = 0; k < k_count; ++k) covs.push_back(testing::random_spd(dim, rng, 1.0) * 20.0);
  return GmmModel(std::vector<double>(static_cast<std::size_t>(k_count), 1.0 / k_count), covs);
}

DenoiseParams small_params(double sigma) {
  DenoiseParams p = schedule_for_sigma(sigma);
  p.patch_size = 4;
  p.group_size = 12;
  p.window = 12;
  p.stride = 2;
  p.threads = 1;
  return p;
}

}  // namespace

TEST_CASE("dictionary of a rank-one group") {
  const Eigen::Vector4d u(1, -2, 0, 2);
  PatchGroup g;
  g.patch_size = 2;
  g.matrix = Eigen::MatrixXd(4, 4);
  const double coeff[] = {1, -1, 2, -2};
  for (int j = 0; j < 4; ++j) g.matrix.col(j) = coeff[j] * u;
  const SymmetricEigen d = group_dictionary(g);
  // Y Y^T / m = (sum c^2 / m) u u^T.
  CHECK(d.values(0) == doctest::Approx(u.squaredNorm() * 10.0 / 4.0));
  CHECK(std::abs(d.values(1)) < 1e-9);
  CHECK(std::abs(d.vectors.col(0).dot(u.normalized())) == doctest::Approx(1.0));
  CHECK(d.vectors(0, 0) > 0.0);
}

TEST_CASE("codes under matching dictionaries") {
  std::mt19937_64 rng(2);
  const PatchGroup g = testing::synthetic_group(testing::random_spd(9, rng), 15, rng);
  const SymmetricEigen d = group_dictionary(g);
  const GroupCodes same = compute_codes(g, d.vectors, d.vectors);
  CHECK(same.residual.cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(9, 9);
  const GroupCodes ident = compute_codes(g, id, id);
  CHECK(ident.noisy == g.matrix);
  CHECK(ident.prior == g.matrix);

  // Orthonormal dictionaries preserve energy.
  const GroupCodes own = compute_codes(g, testing::random_orthonormal(9, rng), d.vectors);
  CHECK(own.noisy.squaredNorm() == doctest::Approx(g.matrix.squaredNorm()).epsilon(1e-10));
  CHECK(own.prior.squaredNorm() == doctest::Approx(g.matrix.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("threshold from a symmetric residual row") {
  Eigen::MatrixXd a(1, 2);
  a << 15.0, -15.0;
  const GroupCodes codes = lambda_schedule(codes_from(a, Eigen::MatrixXd::Zero(1, 2)), 30.0, 0.12);
  CHECK(codes.sigma_rows(0) == doctest::Approx(15.0));
  CHECK(codes.lambda_rows(0) == doctest::Approx(0.12 * 2.0 * std::sqrt(2.0) * 900.0 / 15.0).epsilon(1e-12));
  CHECK(codes.lambda_rows(0) == doctest::Approx(20.3647).epsilon(1e-5));
}

TEST_CASE("zero scale gives zero thresholds and the noisy codes back") {
  std::mt19937_64 rng(3);
  const PatchGroup g = testing::synthetic_group(testing::random_spd(4, rng), 8, rng);
  const GroupCodes codes =
      lambda_schedule(compute_codes(g, testing::random_orthonormal(4, rng), group_dictionary(g).vectors), 25.0, 0.0);
  CHECK(codes.lambda_rows.isZero(0.0));
  CHECK((shrink(codes) - codes.noisy).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a constant residual row hits the sigma floor") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(2, 3, 4.0);
  const GroupCodes codes = lambda_schedule(codes_from(a, Eigen::MatrixXd::Zero(2, 3)), 10.0, 0.1);
  CHECK(codes.sigma_rows(0) == kResidualSigmaFloor);
  CHECK(codes.lambda_rows(0) == doctest::Approx(0.1 * 2.0 * std::sqrt(2.0) * 100.0 / kResidualSigmaFloor));
  // Enormous threshold collapses every coefficient onto B.
  CHECK(shrink(codes).isZero(0.0));
}

TEST_CASE("soft thresholding matches a grid search") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50, 50);
  std::uniform_real_distribution<double> l(0, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = u(rng);
    const double b = u(rng);
    const double lambda = l(rng);
    Eigen::MatrixXd ma(1, 1);
    ma(0, 0) = a;
    Eigen::MatrixXd mb(1, 1);
    mb(0, 0) = b;
    GroupCodes codes = codes_from(ma, mb);
    codes.lambda_rows = Eigen::VectorXd::Constant(1, lambda);
    CHECK(std::abs(shrink(codes)(0, 0) - testing::grid_search_shrink(a, b, lambda)) <= 2e-4);
  }
}

TEST_CASE("soft threshold edge cases") {
  CHECK(soft_threshold(3.0, 0.0) == 3.0);
  CHECK(soft_threshold(3.0, 3.0) == 0.0);
  CHECK(soft_threshold(-5.0, 2.0) == -3.0);
  CHECK(soft_threshold(1.0, 2.0) == 0.0);
}

TEST_CASE("shrinkage does not increase the residual objective") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const PatchGroup g = testing::synthetic_group(testing::random_spd(9, rng, 0.5) * 30.0, 20, rng);
    const SymmetricEigen d = group_dictionary(g);
    const GroupCodes codes =
        lambda_schedule(compute_codes(g, testing::random_orthonormal(9, rng), d.vectors), 5.0, 0.12);
    const Eigen::MatrixXd shrunk = shrink(codes);
    const double at_new = residual_objective(g.matrix, d.vectors, shrunk, codes.prior, codes.lambda_rows);
    CHECK(at_new <= residual_objective(g.matrix, d.vectors, codes.noisy, codes.prior, codes.lambda_rows) + 1e-9);
    CHECK(at_new <= residual_objective(g.matrix, d.vectors, codes.prior, codes.prior, codes.lambda_rows) + 1e-9);
  }
}

TEST_CASE("wiener attenuation scales prior rows") {
  Eigen::MatrixXd b = Eigen::MatrixXd::Constant(2, 2, 10.0);
  const GroupCodes codes = attenuate_prior_codes(codes_from(b, b), Eigen::Vector2d(300.0, 0.0), 10.0);
  CHECK(codes.prior(0, 0) == doctest::Approx(7.5));
  CHECK(codes.prior(1, 1) == 0.0);
  CHECK(codes.residual(1, 0) == 10.0);
}

TEST_CASE("noise level update") {
  const GrayImage y(4, 4, 10.0);
  const GrayImage x(4, 4, 7.0);
  CHECK(update_noise_level(y, x, 5.0, 1.05) == doctest::Approx(1.05 * 4.0));
  CHECK(update_noise_level(y, x, 2.0, 1.05) == 0.0);
}

TEST_CASE("a nearly clean image passes through almost unchanged") {
  std::mt19937_64 rng(6);
  const GmmModel model = small_model(rng, 16, 3);
  const GrayImage clean = testing::synthetic_scene(32, 32);
  DenoiseParams p = small_params(0.01);
  const GrayImage noisy = add_awgn(clean, {0.01, 1});
  const DenoiseResult r = denoise(noisy, model, p);
  CHECK(psnr(clean, r.image) >= 45.0);
  CHECK(r.sigma_per_iteration.size() == static_cast<std::size_t>(p.iters));
  CHECK(r.sigma_per_iteration.front() == 0.01);
}

TEST_CASE("denoising is deterministic and independent of thread count") {
  std::mt19937_64 rng(7);
  const GmmModel model = small_model(rng, 16, 4);
  const GrayImage clean = testing::synthetic_scene(40, 36);
  const GrayImage noisy = add_awgn(clean, {20.0, 3});
  DenoiseParams p = small_params(20.0);
  const GrayImage one = denoise(noisy, model, p).image;
  CHECK(denoise(noisy, model, p).image == one);
  p.threads = 4;
  CHECK(denoise(noisy, model, p).image == one);
}

TEST_CASE("observer sees every iteration with the scheduled noise levels") {
  std::mt19937_64 rng(8);
  const GmmModel model = small_model(rng, 16, 2);
  const GrayImage clean = testing::synthetic_scene(24, 24);
  const GrayImage noisy = add_awgn(clean, {25.0, 4});
  const DenoiseParams p = small_params(25.0);
  std::vector<IterationState> states;
  const DenoiseResult r = denoise(noisy, model, p, [&](const IterationState& s) { states.push_back(s); });
  REQUIRE(states.size() == 4);
  CHECK(states[0].sigma_t == 25.0);
  CHECK(states[0].y_reg == noisy);
  for (std::size_t t = 1; t < states.size(); ++t) {
    CHECK(states[t].t == static_cast<int>(t) + 1);
    CHECK(states[t].sigma_t == update_noise_level(noisy, states[t - 1].x_hat, 25.0, p.gamma));
    for (std::size_t k = 0; k < noisy.size(); ++k) {
      const double prev = states[t - 1].x_hat.data()[k];
      CHECK(states[t].y_reg.data()[k] == doctest::Approx(prev + p.rho * (noisy.data()[k] - prev)));
    }
  }
  CHECK(r.image == clamped(states.back().x_hat));
}

TEST_CASE("mismatched model dimension is rejected") {
  std::mt19937_64 rng(9);
  const GmmModel model = small_model(rng, 9, 2);
  const GrayImage noisy(20, 20, 100.0);
  CHECK_THROWS_AS(denoise(noisy, model, small_params(10.0)), ModelError);
}
