#include "gsr/gmm.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gsr {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'R', '-', 'G', 'M', 'M', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    value = to_little_endian(value);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out_.append(bytes, sizeof(T));
  }
  void raw(const char* data, std::size_t n) { out_.append(data, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw ModelError(std::string("model file truncated while reading ") + what);
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little_endian(value);
  }

  double finite(const char* what) {
    const double v = get<double>(what);
    if (!std::isfinite(v)) throw ModelError(std::string("model file has non-finite ") + what);
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_model(const GmmModel& model) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.num_components()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.patch_dim()));
  const Eigen::Index dim = model.patch_dim();
  for (const GmmComponent& c : model.components()) {
    w.put<double>(c.weight);
    for (Eigen::Index i = 0; i < dim; ++i) w.put<double>(c.mean(i));
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index col = 0; col < dim; ++col) w.put<double>(c.covariance(r, col));
    }
  }
  return w.take();
}

GmmModel decode_model(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ModelError("not a GSR-GMM model file (bad magic)");
  }
  Reader r(bytes.substr(sizeof(kMagic)));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) throw ModelError("unsupported model file version " + std::to_string(version));
  const auto k_count = r.get<std::uint32_t>("component count");
  const auto dim = r.get<std::uint32_t>("patch dimension");
  if (k_count == 0 || dim == 0) throw ModelError("model file declares zero components or dimension");

  const std::size_t per_component = 8 * (1 + std::size_t{dim} + std::size_t{dim} * dim);
  if (r.remaining() / per_component < k_count) throw ModelError("model file truncated");
  if (r.remaining() != per_component * k_count) {
    throw ModelError("model file size does not match declared dimensions");
  }

  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  for (std::uint32_t k = 0; k < k_count; ++k) {
    weights.push_back(r.finite("weight"));
    Eigen::VectorXd mean(dim);
    for (std::uint32_t i = 0; i < dim; ++i) mean(i) = r.finite("mean");
    Eigen::MatrixXd cov(dim, dim);
    for (std::uint32_t row = 0; row < dim; ++row) {
      for (std::uint32_t col = 0; col < dim; ++col) cov(row, col) = r.finite("covariance");
    }
    means.push_back(std::move(mean));
    covs.push_back(std::move(cov));
  }
  return GmmModel(std::move(weights), std::move(means), std::move(covs));
}

void save_model(const GmmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string bytes = encode_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

GmmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_model(buffer.str());
}

}  // namespace gsr
