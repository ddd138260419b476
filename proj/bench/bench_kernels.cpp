// Serial versus OpenMP timings for the frequency sweep and batch simulation.
#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "ifpsync/kernels.hpp"
#include "ifpsync/netsim.hpp"
#include "ifpsync/scenarios.hpp"

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
  using namespace ifpsync;
  std::printf("threads: %d\n", omp_get_max_threads());

  const passivity::RationalTF w{passivity::Polynomial{1.0},
                                passivity::Polynomial{0.0, 3.0, 2.0, 1.0}};
  const auto grid = kernels::log_grid(1e-6, 1e6, 1000000);
  std::vector<double> a, b;
  const double ts = seconds([&] { a = kernels::real_part_sweep_serial(w, grid); });
  const double tp = seconds([&] { b = kernels::real_part_sweep(w, grid); });
  std::printf("sweep 1e6 points: serial %.4f s, openmp %.4f s, speedup %.2f, identical %s\n", ts,
              tp, ts / tp, a == b ? "yes" : "no");

  std::vector<netsim::SimJob> jobs;
  for (int k = 0; k < 8; ++k) {
    netsim::SimConfig c;
    c.dt = 1e-3;
    c.t_final = 20.0;
    c.record_stride = 10;
    for (int i = 0; i < 4; ++i) c.initial_states.push_back(netsim::Vec::Unit(3, 0) * (i + k));
    jobs.push_back({scenarios::remark1_network(1.0, 1.0, 4, 0.05 + 0.02 * k), c});
  }
  std::vector<netsim::SimResult> rs, rp;
  const double bs = seconds([&] { rs = netsim::simulate_batch_serial(jobs); });
  const double bp = seconds([&] { rp = netsim::simulate_batch(jobs); });
  bool same = rs.size() == rp.size();
  for (std::size_t k = 0; same && k < rs.size(); ++k)
    for (std::size_t i = 0; i < rs[k].y.size(); ++i) same = same && rs[k].y[i] == rp[k].y[i];
  std::printf("batch of %zu runs: serial %.4f s, openmp %.4f s, speedup %.2f, identical %s\n",
              jobs.size(), bs, bp, bs / bp, same ? "yes" : "no");
  return 0;
}
