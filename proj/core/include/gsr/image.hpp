#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsr {

/// Dense row-major grayscale image with real-valued intensities.
///
/// Values loaded from 8-bit files lie in [0,255]. Intermediate results may
/// leave that range; quantization happens only when saving.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(int row, int col) const {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  double& operator()(int row, int col) {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool same_shape(const GrayImage& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Raised for anything that prevents reading or writing an image file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PgmParseError : public IoError {
 public:
  enum class Kind { BadMagic, BadHeader, BadMaxval, Truncated };

  PgmParseError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Parses an in-memory binary PGM ("P5", maxval 255).
GrayImage parse_pgm(std::string_view bytes);
GrayImage load_pgm(const std::filesystem::path& path);

/// Rounds half away from zero and clamps to [0,255].
std::vector<std::uint8_t> quantize(const GrayImage& img);
std::string encode_pgm(const GrayImage& img);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Returns img + sigma * g with g drawn i.i.d. standard normal.
///
/// Generator: std::mt19937_64 seeded with `noise.seed`, transformed by
/// std::normal_distribution (Marsaglia polar method in libstdc++). The
/// output is not clamped.
GrayImage add_awgn(const GrayImage& img, const NoiseSpec& noise);

GrayImage clamped(const GrayImage& img);

/// Mean squared difference of the raw (unclamped) values.
double mean_squared_error(const GrayImage& a, const GrayImage& b);

/// 10 log10(255^2 / MSE) after clamping both images to [0,255].
/// Returns +infinity when the images are identical after clamping.
double psnr(const GrayImage& reference, const GrayImage& test);

}  // namespace gsr
