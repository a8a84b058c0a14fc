#include "gsr/params.hpp"

#include <array>
#include <stdexcept>

namespace gsr {

namespace {

constexpr std::array<ScheduleRow, 7> kTable{{
    {10.0, 64, 50, 6, 80, 0.14, 0.19, 1.08},
    {20.0, 64, 50, 6, 80, 0.13, 0.20, 1.05},
    {30.0, 64, 50, 7, 90, 0.12, 0.21, 1.05},
    {40.0, 64, 50, 8, 100, 0.11, 0.22, 1.05},
    {50.0, 64, 50, 8, 100, 0.10, 0.23, 1.05},
    {75.0, 64, 50, 9, 120, 0.09, 0.24, 1.00},
    {100.0, 64, 50, 9, 120, 0.08, 0.25, 1.00},
}};

}  // namespace

std::span<const ScheduleRow> parameter_table() { return kTable; }

const ScheduleRow& schedule_row(double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  for (const ScheduleRow& row : kTable) {
    if (sigma <= row.sigma_upper) return row;
  }
  return kTable.back();
}

int default_iterations(double sigma) {
  if (sigma <= 30.0) return 4;
  if (sigma <= 60.0) return 6;
  return 8;
}

DenoiseParams schedule_for_sigma(double sigma) {
  const ScheduleRow& row = schedule_row(sigma);
  DenoiseParams p;
  p.sigma = sigma;
  p.num_components = row.num_components;
  p.window = row.window;
  p.patch_size = row.patch_size;
  p.group_size = row.group_size;
  p.c = row.c;
  p.rho = row.rho;
  p.gamma = row.gamma;
  p.iters = default_iterations(sigma);
  p.stride = default_stride(row.patch_size);
  return p;
}

void DenoiseParams::validate() const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(c >= 0.0)) throw std::invalid_argument("c must be >= 0");
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (iters < 1) throw std::invalid_argument("iters must be >= 1");
  if (num_components < 1) throw std::invalid_argument("K must be >= 1");
  patch_spec().validate();
}

}  // namespace gsr
