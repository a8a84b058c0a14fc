#include "gsr/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace gsr {

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("image data length does not match dimensions");
  }
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Next whitespace-delimited token, skipping '#' comments.
  std::string_view token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') {
      ++pos_;
    }
    return bytes_.substr(start, pos_ - start);
  }

  int integer(const char* field) {
    const std::string_view tok = token();
    if (tok.empty() || tok.size() > 9 ||
        !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw PgmParseError(PgmParseError::Kind::BadHeader,
                          std::string("PGM header: invalid ") + field);
    }
    return std::stoi(std::string(tok));
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw PgmParseError(PgmParseError::Kind::BadHeader,
                          "PGM header: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  static bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") {
    throw PgmParseError(PgmParseError::Kind::BadMagic, "not a binary PGM (expected magic P5)");
  }
  HeaderReader reader(bytes.substr(2));
  const int width = reader.integer("width");
  const int height = reader.integer("height");
  const int maxval = reader.integer("maxval");
  if (width < 1 || height < 1) {
    throw PgmParseError(PgmParseError::Kind::BadHeader, "PGM header: zero dimension");
  }
  if (maxval != 255) {
    throw PgmParseError(PgmParseError::Kind::BadMaxval,
                        "PGM maxval " + std::to_string(maxval) + " unsupported (need 255)");
  }
  const std::size_t offset = 2 + reader.raster_offset();
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() < offset + count) {
    throw PgmParseError(PgmParseError::Kind::Truncated,
                        "PGM raster truncated: expected " + std::to_string(count) + " bytes, got " +
                            std::to_string(bytes.size() > offset ? bytes.size() - offset : 0));
  }
  std::vector<double> data(count);
  for (std::size_t k = 0; k < count; ++k) {
    data[k] = static_cast<unsigned char>(bytes[offset + k]);
  }
  return GrayImage(width, height, std::move(data));
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_pgm(buffer.str());
  } catch (const PgmParseError& e) {
    throw PgmParseError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> quantize(const GrayImage& img) {
  std::vector<std::uint8_t> out(img.size());
  std::transform(img.data().begin(), img.data().end(), out.begin(), [](double v) {
    const double r = std::round(v);  // half away from zero
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
  });
  return out;
}

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  const auto bytes = quantize(img);
  out.append(bytes.begin(), bytes.end());
  return out;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string encoded = encode_pgm(img);
  out.write(encoded.data(), static_cast<std::streamsize>(encoded.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

GrayImage add_awgn(const GrayImage& img, const NoiseSpec& noise) {
  if (!(noise.sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  GrayImage out = img;
  if (noise.sigma == 0.0) return out;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.data()) v += noise.sigma * normal(rng);
  return out;
}

GrayImage clamped(const GrayImage& img) {
  GrayImage out = img;
  for (double& v : out.data()) v = std::clamp(v, 0.0, 255.0);
  return out;
}

double mean_squared_error(const GrayImage& a, const GrayImage& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("image dimension mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a.data()[k] - b.data()[k];
    sum += diff * diff;
  }
  return sum / static_cast<double>(a.size());
}

double psnr(const GrayImage& reference, const GrayImage& test) {
  if (!reference.same_shape(test)) throw std::invalid_argument("image dimension mismatch");
  const double mse = mean_squared_error(clamped(reference), clamped(test));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace gsr
