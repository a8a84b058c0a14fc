#pragma once

#include "gsr/denoiser.hpp"
#include "gsr/gmm.hpp"
#include "gsr/image.hpp"
#include "gsr/params.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gsr {

/// All group sparsity residual entries gathered from one image.
struct ResidualSample {
  std::vector<double> values;
  std::string image_id;
  double sigma = 0.0;
};

/// Runs the first-iteration group pipeline (no shrinkage) over every
/// reference patch of `noisy` and concatenates the residuals R = A - B,
/// group by group, column-major within a group.
ResidualSample collect_residuals(const GrayImage& noisy, const GmmModel& model, const DenoiseParams& params,
                                 const GroupPassOptions& options = {});

enum class Family { Gaussian, Laplacian, HyperLaplacian };

std::string_view family_name(Family family);

struct DistributionFit {
  Family family = Family::Gaussian;
  /// Gaussian: std s. Laplacian: scale b. Hyper-Laplacian: scale s.
  double scale = 0.0;
  /// Shape a of exp(-|x/s|^a): 2 for Gaussian, 1 for Laplacian.
  double exponent = 0.0;
  double log_likelihood = 0.0;  ///< mean per sample
  double log_fit_error = 0.0;

  double log_density(double x) const;
  double density(double x) const;
};

/// Symmetric histogram with an odd number of uniform bins spanning
/// [-max|x|, max|x|].
struct Histogram {
  double bin_width = 0.0;
  std::vector<double> centers;
  std::vector<std::size_t> counts;
  std::vector<double> density;  ///< count / (n * bin_width)
};

inline constexpr int kHistogramBins = 129;
inline constexpr std::size_t kMinFitSamples = 100;

Histogram make_histogram(std::span<const double> values, int bins = kHistogramBins);

/// Zero-mean maximum-likelihood fit of one family, scored by the mean
/// squared log-density gap over occupied histogram bins.
///
/// The hyper-Laplacian shape is searched over a = 0.1, 0.2, ..., 1.0 with
/// s^a = a * mean(|x|^a) for each a, keeping the most likely pair.
DistributionFit fit(std::span<const double> values, Family family);
inline DistributionFit fit(const ResidualSample& sample, Family family) { return fit(sample.values, family); }

/// Scale s of exp(-|x/s|^a) maximizing the likelihood for a fixed shape a:
/// s^a = a * mean(|x|^a). At a = 1 this is the Laplacian scale mean(|x|).
double hyper_laplacian_scale(std::span<const double> values, double exponent);

std::string histogram_csv(const Histogram& hist);

struct BenchCell {
  std::string image;
  double sigma = 0.0;
  double psnr_noisy = 0.0;
  double psnr_denoised = 0.0;
};

struct BenchTable {
  std::vector<BenchCell> cells;     ///< image-major, sigma-minor
  std::vector<BenchCell> averages;  ///< one per sigma, image == "average"

  /// `image,sigma,psnr_noisy,psnr_denoised` rows, then the average rows.
  std::string to_csv() const;
};

struct BenchOptions {
  std::vector<double> sigmas{20, 30, 40, 50, 75, 100};
  std::uint64_t seed = 0;
  unsigned threads = 0;
  /// Applied to each scheduled parameter set before denoising.
  std::function<void(DenoiseParams&)> customize;
};

/// PGM files of a directory in lexicographic filename order.
std::vector<std::filesystem::path> list_pgm_files(const std::filesystem::path& dir);

/// Denoising parameters for `sigma` against one of `models`: the table row
/// for sigma, with the patch size taken from a model whose dimension
/// matches, or else from the first model. Returns the chosen model index.
std::size_t choose_model(std::span<const GmmModel> models, double sigma, DenoiseParams& params);

/// Noise seed for one (image, sigma) cell, derived from the run seed.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t image_index, std::size_t sigma_index);

/// Synthesizes noise for every image x sigma, denoises with the scheduled
/// parameters and records both PSNRs. Deterministic for a given seed.
BenchTable bench(const std::filesystem::path& test_dir, std::span<const GmmModel> models,
                 const BenchOptions& options);

/// Reference full-scale average PSNR at sigma = 20, 30, 40, 50, 75, 100.
struct ReferencePsnr {
  double sigma;
  double psnr;
};
std::span<const ReferencePsnr> reference_average_psnr();

}  // namespace gsr
