#include "gsr/analysis.hpp"

#include "gsr/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gsr {

ResidualSample collect_residuals(const GrayImage& noisy, const GmmModel& model, const DenoiseParams& params,
                                 const GroupPassOptions& options) {
  params.validate();
  const PatchSpec spec = params.patch_spec();
  spec.validate(noisy);
  if (model.patch_dim() != spec.patch_dim()) {
    throw ModelError("model patch dimension " + std::to_string(model.patch_dim()) +
                     " does not match patch size d=" + std::to_string(params.patch_size));
  }
  const std::vector<Position> refs = reference_positions(noisy, spec);
  const ComponentScorer scorer(model, params.sigma, params.use_prior_weights);

  // First iteration: y_reg equals the noisy input and sigma_t equals sigma.
  std::vector<Eigen::MatrixXd> residuals(refs.size());
  parallel_for(refs.size(), params.threads, [&](std::size_t i) {
    residuals[i] = run_group_pass(noisy, refs[i], model, scorer, params, params.sigma, options).codes.residual;
  });

  ResidualSample sample;
  sample.sigma = params.sigma;
  const std::size_t per_group = static_cast<std::size_t>(spec.patch_dim()) * spec.group_size;
  sample.values.reserve(refs.size() * per_group);
  for (const Eigen::MatrixXd& r : residuals) {
    sample.values.insert(sample.values.end(), r.data(), r.data() + r.size());
  }
  return sample;
}

std::string_view family_name(Family family) {
  switch (family) {
    case Family::Gaussian:
      return "gaussian";
    case Family::Laplacian:
      return "laplacian";
    case Family::HyperLaplacian:
      return "hyper-laplacian";
  }
  return "unknown";
}

double DistributionFit::log_density(double x) const {
  // Every family is exp(-|x/s|^a) / (2 s Gamma(1 + 1/a)) for some (s, a);
  // the Gaussian uses s = sqrt(2) * std and a = 2.
  const double s = family == Family::Gaussian ? std::numbers::sqrt2 * scale : scale;
  return -std::pow(std::abs(x / s), exponent) - std::log(2.0 * s) - std::lgamma(1.0 + 1.0 / exponent);
}

double DistributionFit::density(double x) const { return std::exp(log_density(x)); }

Histogram make_histogram(std::span<const double> values, int bins) {
  if (values.empty()) throw std::invalid_argument("histogram of an empty sample");
  if (bins < 1 || bins % 2 == 0) throw std::invalid_argument("histogram needs an odd bin count");
  double extent = 0.0;
  for (double v : values) extent = std::max(extent, std::abs(v));
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw std::invalid_argument("histogram of a degenerate (all-zero or non-finite) sample");
  }
  Histogram h;
  h.bin_width = 2.0 * extent / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    const auto idx = static_cast<long>(std::floor((v + extent) / h.bin_width));
    ++h.counts[static_cast<std::size_t>(std::clamp(idx, 0L, static_cast<long>(bins) - 1))];
  }
  const double n = static_cast<double>(values.size());
  for (int b = 0; b < bins; ++b) {
    h.centers.push_back(-extent + (b + 0.5) * h.bin_width);
    h.density.push_back(static_cast<double>(h.counts[static_cast<std::size_t>(b)]) / (n * h.bin_width));
  }
  return h;
}

namespace {

double mean_log_likelihood(const DistributionFit& f, std::span<const double> sorted) {
  double total = 0.0;
  for (double v : sorted) total += f.log_density(v);
  return total / static_cast<double>(sorted.size());
}

double log_fit_error(const DistributionFit& f, const Histogram& h) {
  double total = 0.0;
  std::size_t occupied = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    if (h.counts[b] == 0) continue;
    const double gap = std::log(h.density[b]) - f.log_density(h.centers[b]);
    total += gap * gap;
    ++occupied;
  }
  return total / static_cast<double>(occupied);
}

double mean_abs_power(std::span<const double> sorted, double a) {
  double total = 0.0;
  for (double v : sorted) total += std::pow(std::abs(v), a);
  return total / static_cast<double>(sorted.size());
}

}  // namespace

double hyper_laplacian_scale(std::span<const double> values, double exponent) {
  if (values.empty()) throw std::invalid_argument("scale of an empty sample");
  if (!(exponent > 0.0)) throw std::invalid_argument("exponent must be > 0");
  return std::pow(exponent * mean_abs_power(values, exponent), 1.0 / exponent);
}

DistributionFit fit(std::span<const double> values, Family family) {
  if (values.size() < kMinFitSamples) {
    throw std::invalid_argument("fit needs at least " + std::to_string(kMinFitSamples) + " samples, got " +
                                std::to_string(values.size()));
  }
  // Sorting fixes the summation order, so the fit is independent of the
  // order of the sample.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const Histogram hist = make_histogram(sorted);

  DistributionFit best;
  best.family = family;
  switch (family) {
    case Family::Gaussian:
      best.scale = std::sqrt(mean_abs_power(sorted, 2.0));
      best.exponent = 2.0;
      best.log_likelihood = mean_log_likelihood(best, sorted);
      break;
    case Family::Laplacian:
      best.scale = mean_abs_power(sorted, 1.0);
      best.exponent = 1.0;
      best.log_likelihood = mean_log_likelihood(best, sorted);
      break;
    case Family::HyperLaplacian: {
      best.log_likelihood = -std::numeric_limits<double>::infinity();
      for (int step = 1; step <= 10; ++step) {
        const double a = step / 10.0;
        DistributionFit candidate = best;
        candidate.exponent = a;
        candidate.scale = hyper_laplacian_scale(sorted, a);
        // With the moment-matched scale, sum |x/s|^a = n / a exactly.
        candidate.log_likelihood = -std::log(2.0 * candidate.scale) - std::lgamma(1.0 + 1.0 / a) - 1.0 / a;
        if (candidate.log_likelihood > best.log_likelihood) best = candidate;
      }
      break;
    }
  }
  best.log_fit_error = log_fit_error(best, hist);
  return best;
}

std::string histogram_csv(const Histogram& hist) {
  std::ostringstream out;
  out << "bin_center,count,density\n" << std::setprecision(10);
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    out << hist.centers[b] << ',' << hist.counts[b] << ',' << hist.density[b] << '\n';
  }
  return out.str();
}

namespace {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << v;
  return out.str();
}

std::string format_sigma(double sigma) {
  std::ostringstream out;
  out << sigma;
  return out.str();
}

}  // namespace

std::string BenchTable::to_csv() const {
  std::string out = "image,sigma,psnr_noisy,psnr_denoised\n";
  for (const auto* rows : {&cells, &averages}) {
    for (const BenchCell& c : *rows) {
      out += c.image + ',' + format_sigma(c.sigma) + ',' + format_number(c.psnr_noisy) + ',' +
             format_number(c.psnr_denoised) + '\n';
    }
  }
  return out;
}

std::vector<std::filesystem::path> list_pgm_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

std::size_t choose_model(std::span<const GmmModel> models, double sigma, DenoiseParams& params) {
  if (models.empty()) throw std::invalid_argument("no models supplied");
  params = schedule_for_sigma(sigma);
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].patch_dim() == params.patch_size * params.patch_size) return i;
  }
  const int d = models.front().patch_size();
  if (d == 0) throw ModelError("model patch dimension is not a perfect square");
  params.patch_size = d;
  params.stride = default_stride(d);
  return 0;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t image_index, std::size_t sigma_index) {
  // splitmix64 finalizer over the combined index.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (1 + image_index * 1000003ULL + sigma_index);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

BenchTable bench(const std::filesystem::path& test_dir, std::span<const GmmModel> models,
                 const BenchOptions& options) {
  const auto files = list_pgm_files(test_dir);
  if (files.empty()) throw IoError("no PGM images in " + test_dir.string());
  if (options.sigmas.empty()) throw std::invalid_argument("no noise levels requested");

  BenchTable table;
  std::vector<double> noisy_sum(options.sigmas.size(), 0.0);
  std::vector<double> denoised_sum(options.sigmas.size(), 0.0);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const GrayImage clean = load_pgm(files[i]);
    for (std::size_t s = 0; s < options.sigmas.size(); ++s) {
      const double sigma = options.sigmas[s];
      DenoiseParams params;
      const std::size_t model_index = choose_model(models, sigma, params);
      params.threads = options.threads;
      if (options.customize) options.customize(params);

      const GrayImage noisy = add_awgn(clean, {sigma, cell_seed(options.seed, i, s)});
      const GrayImage denoised = denoise(noisy, models[model_index], params).image;
      BenchCell cell{files[i].stem().string(), sigma, psnr(clean, noisy), psnr(clean, denoised)};
      noisy_sum[s] += cell.psnr_noisy;
      denoised_sum[s] += cell.psnr_denoised;
      table.cells.push_back(std::move(cell));
    }
  }
  const double count = static_cast<double>(files.size());
  for (std::size_t s = 0; s < options.sigmas.size(); ++s) {
    table.averages.push_back({"average", options.sigmas[s], noisy_sum[s] / count, denoised_sum[s] / count});
  }
  return table;
}

std::span<const ReferencePsnr> reference_average_psnr() {
  static constexpr std::array<ReferencePsnr, 6> kValues{{
      {20, 30.81}, {30, 28.82}, {40, 27.42}, {50, 26.34}, {75, 24.50}, {100, 23.19}}};
  return kValues;
}

}  // namespace gsr
