#pragma once

#include "gsr/image.hpp"

#include <Eigen/Core>

#include <compare>
#include <optional>
#include <span>
#include <vector>

namespace gsr {

/// Geometry of nonlocal patch grouping.
struct PatchSpec {
  int patch_size = 7;    ///< patch side d
  int group_size = 90;   ///< patches per group m
  int window = 50;       ///< search window side W
  int stride = 4;        ///< step between reference patches

  int patch_dim() const { return patch_size * patch_size; }

  /// Throws std::invalid_argument unless this geometry fits `img`.
  void validate(const GrayImage& img) const;
  void validate() const;
};

/// Top-left corner of a patch.
struct Position {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Position&, const Position&) = default;
};

/// d^2 x m matrix of vectorized similar patches.
///
/// Patches are vectorized row by row. Column 0 is always the reference
/// patch. After subtract_group_mean() the columns sum to zero and
/// `mean_patch` holds what was removed.
struct PatchGroup {
  int patch_size = 0;
  Eigen::MatrixXd matrix;
  std::vector<Position> positions;
  std::vector<double> distances;  ///< squared distance of each column to the reference
  Eigen::VectorXd mean_patch;
  int reference_index = 0;

  int group_size() const { return static_cast<int>(matrix.cols()); }
  int patch_dim() const { return static_cast<int>(matrix.rows()); }
};

/// Default reference stride: 4 for d <= 8, 5 otherwise.
int default_stride(int patch_size);

/// Raster-order reference positions at the given stride. The last valid
/// row and column offsets are always included so every pixel is covered.
std::vector<Position> reference_positions(const GrayImage& img, const PatchSpec& spec);

/// Inclusive range of top-left offsets searched around `center` along an
/// axis of length `extent`: the W offsets starting at center - W/2, clipped
/// to [0, extent - d].
std::pair<int, int> window_range(int center, int extent, const PatchSpec& spec);

Eigen::VectorXd extract_patch(const GrayImage& img, Position pos, int patch_size);

double patch_distance(const GrayImage& img, Position a, Position b, int patch_size);

/// Selects the m patches nearest (squared Euclidean, raw intensities) to the
/// reference within its search window.
///
/// The reference occupies column 0. The remaining m-1 columns are the
/// closest other candidates, ties broken by raster order. When the window
/// holds fewer than m candidates the selection is repeated cyclically. The
/// group mean is not subtracted.
PatchGroup block_match(const GrayImage& img, Position ref, const PatchSpec& spec);

/// Removes the per-pixel mean across columns and stores it in mean_patch.
/// Applying it twice leaves a zero mean_patch.
PatchGroup subtract_group_mean(PatchGroup group);

/// Adds mean_patch back to every column and zeroes mean_patch.
PatchGroup restore_group_mean(PatchGroup group);

/// Averages every patch in every group into an image of the given size.
///
/// Each pixel is the plain mean of all contributions covering it. Pixels no
/// patch covers come from `fallback`, which is then required. Groups are
/// accumulated in the order given.
GrayImage aggregate(std::span<const PatchGroup> groups, int width, int height,
                    const GrayImage* fallback = nullptr);

}  // namespace gsr
