#include <doctest.h>

#include "gsr/image.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

using namespace gsr;

namespace {

std::string pgm_bytes(const std::string& header, std::initializer_list<unsigned char> raster) {
  std::string out = header;
  for (unsigned char b : raster) out.push_back(static_cast<char>(b));
  return out;
}

PgmParseError::Kind parse_error_kind(const std::string& bytes) {
  try {
    parse_pgm(bytes);
  } catch (const PgmParseError& e) {
    return e.kind();
  }
  FAIL("expected a parse error");
  return PgmParseError::Kind::BadHeader;
}

}  // namespace

TEST_CASE("load maps raster bytes directly to intensities") {
  const GrayImage img = parse_pgm(pgm_bytes("P5\n2 1\n255\n", {0, 255}));
  CHECK(img.width() == 2);
  CHECK(img.height() == 1);
  CHECK(img.data()[0] == 0.0);
  CHECK(img.data()[1] == 255.0);
}

TEST_CASE("header comments and arbitrary whitespace are accepted") {
  const GrayImage img = parse_pgm(pgm_bytes("P5 # comment\n# another\n 3\t1 255\n", {1, 2, 3}));
  CHECK(img.width() == 3);
  CHECK(img.data()[2] == 3.0);
}

TEST_CASE("parse errors are distinguished") {
  CHECK(parse_error_kind("P3\n1 1\n255\n1") == PgmParseError::Kind::BadMagic);
  CHECK(parse_error_kind("P5\n1 x\n255\n1") == PgmParseError::Kind::BadHeader);
  CHECK(parse_error_kind("P5\n1 1\n65535\n11") == PgmParseError::Kind::BadMaxval);
  CHECK(parse_error_kind("P5\n1 1\n15\n1") == PgmParseError::Kind::BadMaxval);
  CHECK(parse_error_kind(pgm_bytes("P5\n2 2\n255\n", {1, 2, 3})) == PgmParseError::Kind::Truncated);
}

TEST_CASE("save quantizes by rounding half away from zero and clamping") {
  CHECK(quantize(GrayImage(3, 1, {-3.2, 254.7, 300.0})) == std::vector<std::uint8_t>{0, 255, 255});
  CHECK(quantize(GrayImage(1, 1, {127.5})) == std::vector<std::uint8_t>{128});
  CHECK(quantize(GrayImage(1, 1, {0.0})) == std::vector<std::uint8_t>{0});
  CHECK(quantize(GrayImage(2, 1, {0.49, 0.5})) == std::vector<std::uint8_t>{0, 1});
}

TEST_CASE("PGM round trip is the identity on integer images") {
  const auto dir = testing::scratch_dir("image_roundtrip");
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> dim(1, 40);
    const GrayImage img = testing::random_integer_image(dim(rng), dim(rng), rng, 256);
    const auto path = dir / "img.pgm";
    save_pgm(img, path);
    CHECK(load_pgm(path) == img);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("I/O failures raise IoError") {
  CHECK_THROWS_AS(load_pgm("/nonexistent/dir/img.pgm"), IoError);
  CHECK_THROWS_AS(save_pgm(GrayImage(1, 1), "/nonexistent/dir/img.pgm"), IoError);
}

TEST_CASE("image construction validates dimensions") {
  CHECK_THROWS_AS(GrayImage(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(GrayImage(2, 2, std::vector<double>(3)), std::invalid_argument);
}

TEST_CASE("awgn with zero sigma is the identity") {
  std::mt19937_64 rng(1);
  const GrayImage img = testing::random_image(17, 9, rng);
  CHECK(add_awgn(img, {0.0, 42}) == img);
}

TEST_CASE("awgn is deterministic per seed and differs across seeds") {
  const GrayImage img(32, 32, 100.0);
  CHECK(add_awgn(img, {25.0, 9}) == add_awgn(img, {25.0, 9}));
  CHECK_FALSE(add_awgn(img, {25.0, 9}) == add_awgn(img, {25.0, 10}));
}

TEST_CASE("awgn statistics match sigma and are not clamped") {
  const GrayImage img(256, 256, 128.0);
  const GrayImage noisy = add_awgn(img, {30.0, 5});
  double sum = 0.0;
  double sq = 0.0;
  bool outside = false;
  for (std::size_t k = 0; k < img.size(); ++k) {
    const double diff = noisy.data()[k] - img.data()[k];
    sum += diff;
    sq += diff * diff;
    outside = outside || noisy.data()[k] < 0.0 || noisy.data()[k] > 255.0;
  }
  const double n = static_cast<double>(img.size());
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(sd >= 29.0);
  CHECK(sd <= 31.0);
  CHECK(std::abs(mean) < 0.5);
  CHECK(outside);
}

TEST_CASE("psnr of identical images is infinite") {
  const GrayImage img(4, 4, 10.0);
  CHECK(std::isinf(psnr(img, img)));
  CHECK(psnr(img, img) > 0);
}

TEST_CASE("psnr with unit error everywhere") {
  // MSE = 1 by construction.
  const GrayImage a(8, 8, 100.0);
  const GrayImage b(8, 8, 101.0);
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(255.0 * 255.0)).epsilon(1e-12));
  CHECK(psnr(a, b) == doctest::Approx(48.1308).epsilon(1e-5));
}

TEST_CASE("psnr of sigma 30 noise is about 20 log10(255/30)") {
  const GrayImage clean(512, 512, 128.0);
  const GrayImage noisy = add_awgn(clean, {30.0, 3});
  CHECK(std::abs(psnr(clean, noisy) - 20.0 * std::log10(255.0 / 30.0)) < 0.2);
}

TEST_CASE("psnr clamps both inputs first") {
  const GrayImage a(2, 1, {0.0, 255.0});
  const GrayImage b(2, 1, {-50.0, 400.0});
  CHECK(std::isinf(psnr(a, b)));
}

TEST_CASE("psnr is symmetric and decreases with error magnitude") {
  std::mt19937_64 rng(8);
  const GrayImage ref = testing::random_image(20, 20, rng, 50, 200);
  GrayImage prev_test = ref;
  double prev = std::numeric_limits<double>::infinity();
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> direction(ref.size());
  for (double& v : direction) v = n(rng);
  for (double scale : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    GrayImage test = ref;
    for (std::size_t k = 0; k < test.size(); ++k) test.data()[k] += scale * direction[k];
    const double p = psnr(ref, test);
    CHECK(p == psnr(test, ref));
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("psnr rejects mismatched dimensions") {
  CHECK_THROWS_AS(psnr(GrayImage(2, 2), GrayImage(2, 3)), std::invalid_argument);
}
