#pragma once

#include "gsr/grouping.hpp"

#include <span>

namespace gsr {

/// One row of the noise-level parameter table.
struct ScheduleRow {
  double sigma_upper;  ///< row applies to (previous upper, sigma_upper]
  int num_components;  ///< K (learning stage)
  int window;          ///< W
  int patch_size;      ///< d
  int group_size;      ///< m
  double c;            ///< lambda scale
  double rho;          ///< iterative regularization step
  double gamma;        ///< noise re-estimation factor
};

/// The seven built-in rows, ordered by sigma_upper. The first row covers
/// sigma <= 10 and the last row also serves every sigma above 100.
std::span<const ScheduleRow> parameter_table();

const ScheduleRow& schedule_row(double sigma);

/// Outer iteration count: 4 for sigma <= 30, 6 up to 60, 8 above.
int default_iterations(double sigma);

/// How the estimated true codes B are formed from the selected component.
enum class PriorCodes {
  Projection,  ///< B = U_k^T Y
  Wiener,      ///< B = diag(l / (l + sigma_t^2)) U_k^T Y, l the eigenvalues of Sigma_k
};

struct DenoiseParams {
  double sigma = 30.0;
  int num_components = 64;
  int window = 50;
  int patch_size = 7;
  int group_size = 90;
  double c = 0.12;
  double rho = 0.21;
  double gamma = 1.05;
  int iters = 4;
  int stride = 4;
  /// Include log pi_k when selecting a component.
  bool use_prior_weights = true;
  PriorCodes prior_codes = PriorCodes::Projection;
  unsigned threads = 0;

  PatchSpec patch_spec() const { return {patch_size, group_size, window, stride}; }
  void validate() const;
};

/// Table row for sigma plus default iteration count and stride.
DenoiseParams schedule_for_sigma(double sigma);

}  // namespace gsr
