#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ifpsync/passivity.hpp"

// Data-parallel kernels. Each OpenMP kernel has a serial twin that computes
// the same values in the same order; tests require bit-identical output.
namespace ifpsync::kernels {

/// n log-spaced points on [lo, hi], both ends included.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Re W(i w) at every grid point. Points where the denominator vanishes
/// (to 1e-14 of its magnitude scale) yield +infinity.
std::vector<double> real_part_sweep_serial(const passivity::RationalTF& w,
                                           std::span<const double> omegas);
std::vector<double> real_part_sweep(const passivity::RationalTF& w,
                                    std::span<const double> omegas);

struct SweepMin {
  std::size_t index = 0;
  double value = 0.0;
};

/// First index attaining the minimum. The reduction is sequential so the
/// result does not depend on the thread count.
SweepMin argmin(std::span<const double> values);

/// Re W(i w) for a single frequency, +infinity on a pole.
double real_part_or_inf(const passivity::RationalTF& w, double omega);

}  // namespace ifpsync::kernels
