#include "ifpsync/kernels.hpp"

#include <cmath>
#include <limits>

namespace ifpsync::kernels {

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> grid(n);
  if (n == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = std::exp(a + step * static_cast<double>(i));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

double real_part_or_inf(const passivity::RationalTF& w, double omega) {
  const passivity::Complex s{0.0, omega};
  const passivity::Complex d = w.den()(s);
  if (std::abs(d) <= 1e-14 * w.den().abs_scale(std::abs(omega)))
    return std::numeric_limits<double>::infinity();
  return (w.num()(s) / d).real();
}

std::vector<double> real_part_sweep_serial(const passivity::RationalTF& w,
                                           std::span<const double> omegas) {
  std::vector<double> out(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) out[i] = real_part_or_inf(w, omegas[i]);
  return out;
}

std::vector<double> real_part_sweep(const passivity::RationalTF& w,
                                    std::span<const double> omegas) {
  std::vector<double> out(omegas.size());
  const auto n = static_cast<std::ptrdiff_t>(omegas.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = real_part_or_inf(w, omegas[i]);
  return out;
}

SweepMin argmin(std::span<const double> values) {
  SweepMin best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < best.value) best = {i, values[i]};
  }
  return best;
}

}  // namespace ifpsync::kernels
