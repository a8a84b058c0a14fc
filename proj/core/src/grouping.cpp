#include "gsr/grouping.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gsr {

void PatchSpec::validate() const {
  if (patch_size < 1) throw std::invalid_argument("patch size must be >= 1");
  if (group_size < 1) throw std::invalid_argument("group size must be >= 1");
  if (window < patch_size) throw std::invalid_argument("search window must be >= patch size");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
}

void PatchSpec::validate(const GrayImage& img) const {
  validate();
  if (patch_size > std::min(img.width(), img.height())) {
    throw std::invalid_argument("image " + std::to_string(img.width()) + "x" +
                                std::to_string(img.height()) + " smaller than patch size " +
                                std::to_string(patch_size));
  }
}

int default_stride(int patch_size) { return patch_size <= 8 ? 4 : 5; }

namespace {

std::vector<int> axis_offsets(int extent, int patch_size, int stride) {
  const int last = extent - patch_size;
  std::vector<int> offsets;
  for (int v = 0; v < last; v += stride) offsets.push_back(v);
  offsets.push_back(last);
  return offsets;
}

}  // namespace

std::vector<Position> reference_positions(const GrayImage& img, const PatchSpec& spec) {
  spec.validate(img);
  const auto rows = axis_offsets(img.height(), spec.patch_size, spec.stride);
  const auto cols = axis_offsets(img.width(), spec.patch_size, spec.stride);
  std::vector<Position> out;
  out.reserve(rows.size() * cols.size());
  for (int r : rows) {
    for (int c : cols) out.push_back({r, c});
  }
  return out;
}

std::pair<int, int> window_range(int center, int extent, const PatchSpec& spec) {
  const int lo = center - spec.window / 2;
  const int hi = lo + spec.window - 1;
  return {std::max(lo, 0), std::min(hi, extent - spec.patch_size)};
}

Eigen::VectorXd extract_patch(const GrayImage& img, Position pos, int patch_size) {
  Eigen::VectorXd v(patch_size * patch_size);
  for (int r = 0; r < patch_size; ++r) {
    const double* src = &img.data()[static_cast<std::size_t>(pos.row + r) * img.width() + pos.col];
    for (int c = 0; c < patch_size; ++c) v(r * patch_size + c) = src[c];
  }
  return v;
}

double patch_distance(const GrayImage& img, Position a, Position b, int patch_size) {
  const std::size_t w = static_cast<std::size_t>(img.width());
  const double* base = img.data().data();
  double sum = 0.0;
  for (int r = 0; r < patch_size; ++r) {
    const double* pa = base + (a.row + r) * w + a.col;
    const double* pb = base + (b.row + r) * w + b.col;
    for (int c = 0; c < patch_size; ++c) {
      const double d = pa[c] - pb[c];
      sum += d * d;
    }
  }
  return sum;
}

PatchGroup block_match(const GrayImage& img, Position ref, const PatchSpec& spec) {
  spec.validate(img);
  const int d = spec.patch_size;
  if (ref.row < 0 || ref.col < 0 || ref.row > img.height() - d || ref.col > img.width() - d) {
    throw std::invalid_argument("reference patch outside image");
  }
  const auto [row_lo, row_hi] = window_range(ref.row, img.height(), spec);
  const auto [col_lo, col_hi] = window_range(ref.col, img.width(), spec);

  struct Candidate {
    double distance;
    Position pos;  // raster order is the tie-break
  };
  std::vector<Candidate> candidates;
  candidates.reserve(static_cast<std::size_t>(row_hi - row_lo + 1) * (col_hi - col_lo + 1));
  for (int r = row_lo; r <= row_hi; ++r) {
    for (int c = col_lo; c <= col_hi; ++c) {
      const Position p{r, c};
      if (p == ref) continue;
      candidates.push_back({patch_distance(img, ref, p, d), p});
    }
  }

  const auto closer = [](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.pos < b.pos;
  };
  const std::size_t wanted = std::min<std::size_t>(static_cast<std::size_t>(spec.group_size - 1),
                                                   candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(wanted),
                    candidates.end(), closer);

  std::vector<Candidate> chosen;
  chosen.reserve(wanted + 1);
  chosen.push_back({0.0, ref});
  chosen.insert(chosen.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(wanted));

  PatchGroup group;
  group.patch_size = d;
  group.reference_index = 0;
  group.matrix.resize(d * d, spec.group_size);
  group.mean_patch = Eigen::VectorXd::Zero(d * d);
  group.positions.reserve(static_cast<std::size_t>(spec.group_size));
  group.distances.reserve(static_cast<std::size_t>(spec.group_size));
  for (int j = 0; j < spec.group_size; ++j) {
    const Candidate& c = chosen[static_cast<std::size_t>(j) % chosen.size()];
    group.matrix.col(j) = extract_patch(img, c.pos, d);
    group.positions.push_back(c.pos);
    group.distances.push_back(c.distance);
  }
  return group;
}

PatchGroup subtract_group_mean(PatchGroup group) {
  const Eigen::VectorXd mean = group.matrix.rowwise().mean();
  group.matrix.colwise() -= mean;
  group.mean_patch = mean;
  return group;
}

PatchGroup restore_group_mean(PatchGroup group) {
  if (group.mean_patch.size() == group.matrix.rows()) {
    group.matrix.colwise() += group.mean_patch;
    group.mean_patch.setZero();
  }
  return group;
}

GrayImage aggregate(std::span<const PatchGroup> groups, int width, int height, const GrayImage* fallback) {
  if (groups.empty() && fallback == nullptr) {
    throw std::invalid_argument("aggregate: no groups and no fallback image");
  }
  if (fallback != nullptr && (fallback->width() != width || fallback->height() != height)) {
    throw std::invalid_argument("aggregate: fallback image has wrong dimensions");
  }
  std::vector<double> sum(static_cast<std::size_t>(width) * height, 0.0);
  std::vector<std::uint32_t> count(sum.size(), 0);

  for (const PatchGroup& g : groups) {
    const int d = g.patch_size;
    for (int j = 0; j < g.group_size(); ++j) {
      const Position p = g.positions[static_cast<std::size_t>(j)];
      if (p.row < 0 || p.col < 0 || p.row + d > height || p.col + d > width) {
        throw std::invalid_argument("aggregate: patch position outside target image");
      }
      for (int r = 0; r < d; ++r) {
        const std::size_t base = static_cast<std::size_t>(p.row + r) * width + p.col;
        for (int c = 0; c < d; ++c) {
          sum[base + c] += g.matrix(r * d + c, j);
          ++count[base + c];
        }
      }
    }
  }

  GrayImage out(width, height);
  for (std::size_t k = 0; k < sum.size(); ++k) {
    if (count[k] > 0) {
      out.data()[k] = sum[k] / count[k];
    } else if (fallback != nullptr) {
      out.data()[k] = fallback->data()[k];
    } else {
      throw std::invalid_argument("aggregate: uncovered pixel and no fallback image");
    }
  }
  return out;
}

}  // namespace gsr
