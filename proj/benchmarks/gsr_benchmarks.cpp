#include <benchmark/benchmark.h>

#include "gsr/denoiser.hpp"
#include "gsr/gmm.hpp"
#include "gsr/grouping.hpp"
#include "gsr/image.hpp"

#include <random>

namespace {

gsr::GrayImage random_image(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  gsr::GrayImage img(size, size);
  for (double& v : img.data()) v = u(rng);
  return img;
}

gsr::GmmModel random_model(int k_count, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> weights(static_cast<std::size_t>(k_count), 1.0 / k_count);
  std::vector<Eigen::MatrixXd> covs;
  for (int k = 0; k < k_count; ++k) {
    Eigen::MatrixXd a(dim, dim);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    covs.push_back(a * a.transpose() + Eigen::MatrixXd::Identity(dim, dim));
  }
  return gsr::GmmModel(weights, covs);
}

void BM_BlockMatch(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const gsr::GrayImage img = random_image(128, 1);
  const gsr::PatchSpec spec{d, 90, 50, 4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(gsr::block_match(img, {60, 60}, spec));
  }
}
BENCHMARK(BM_BlockMatch)->Arg(6)->Arg(7)->Arg(9);

void BM_SelectComponent(benchmark::State& state) {
  const int k_count = static_cast<int>(state.range(0));
  const gsr::GmmModel model = random_model(k_count, 49, 2);
  const gsr::GrayImage img = random_image(128, 3);
  const auto group = gsr::subtract_group_mean(gsr::block_match(img, {60, 60}, {7, 90, 50, 4}));
  const gsr::ComponentScorer scorer(model, 30.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(scorer.select(group));
  }
}
BENCHMARK(BM_SelectComponent)->Arg(16)->Arg(64);

void BM_GroupDictionaryAndShrink(benchmark::State& state) {
  const gsr::GmmModel model = random_model(4, 49, 4);
  const gsr::GrayImage img = random_image(128, 5);
  const auto group = gsr::subtract_group_mean(gsr::block_match(img, {60, 60}, {7, 90, 50, 4}));
  for (auto _ : state) {
    const gsr::SymmetricEigen dict = gsr::group_dictionary(group);
    auto codes = gsr::compute_codes(group, model.component(0).eigen.vectors, dict.vectors);
    codes = gsr::lambda_schedule(std::move(codes), 30.0, 0.12);
    benchmark::DoNotOptimize(gsr::shrink(codes));
  }
}
BENCHMARK(BM_GroupDictionaryAndShrink);

void BM_DenoiseIteration(benchmark::State& state) {
  const gsr::GmmModel model = random_model(16, 49, 6);
  const gsr::GrayImage clean = random_image(64, 7);
  const gsr::GrayImage noisy = gsr::add_awgn(clean, {30.0, 8});
  gsr::DenoiseParams p = gsr::schedule_for_sigma(30.0);
  p.iters = 1;
  p.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gsr::denoise(noisy, model, p));
  }
}
BENCHMARK(BM_DenoiseIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
