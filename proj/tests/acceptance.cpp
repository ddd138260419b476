// Acceptance run: one PASS/FAIL line per criterion. `--criterion N` runs one.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ifpsync/certify.hpp"
#include "ifpsync/graphnet.hpp"
#include "ifpsync/netsim.hpp"
#include "ifpsync/passivity.hpp"
#include "ifpsync/scenarios.hpp"
#include "ifpsync/selftest.hpp"

using namespace ifpsync;
using netsim::SimConfig;
using netsim::Vec;
using passivity::Polynomial;
using passivity::RationalTF;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SimConfig config(double dt, double t_final, int stride, double tol = 1e-3) {
  SimConfig c;
  c.dt = dt;
  c.t_final = t_final;
  c.record_stride = stride;
  c.tol = tol;
  return c;
}

// 1. Two-vehicle chain: certified delay synchronizes, the larger one must not.
Outcome chain_threshold() {
  std::ostringstream d;
  bool pass = true;
  for (double alpha : {0.4, 0.6}) {
    const auto start = std::chrono::steady_clock::now();
    const auto run = scenarios::run_traffic(
        scenarios::TrafficSpec::classic_chain(1, 1.0, alpha, Vec::Constant(1, 25.0), 20.0),
        config(1e-3, 100.0, 100));
    const double secs = seconds_since(start);
    const bool diverged = run.sim.status == netsim::SimStatus::diverged;
    const double tail = run.sim.metrics.pairwise_sup_tail;
    const bool ok = alpha < 0.5 ? (!diverged && tail < 1e-3) : (diverged || tail > 0.1);
    pass = pass && ok && secs < 5.0;
    d << "alpha=" << alpha << " tail=" << tail << (diverged ? " diverged" : "") << " "
      << secs << "s" << (ok ? "" : " (wrong outcome)") << "; ";
  }
  return {pass, d.str()};
}

// 2. Cubic family against its closed form and a dense grid.
Outcome cubic_family() {
  double worst_closed = 0.0, worst_grid = 0.0;
  const std::vector<double> vals{0.5, 1.0, 2.0, 4.0};
  for (double p : vals) {
    for (double q : vals) {
      const double closed = q > p * p / 2.0 ? 1.0 / (p * q - p * p * p / 4.0) : p / (q * q);
      double grid = 0.0;
      const int n = 1000000;
      for (int k = 0; k < n; ++k) {
        const double w = std::pow(10.0, -6.0 + 12.0 * k / (n - 1));
        grid = std::min(grid, -p / (p * p * w * w + (q - w * w) * (q - w * w)));
      }
      grid = -grid;
      const double got = passivity::ifp_index(RationalTF(Polynomial{1.0}, Polynomial{0.0, q, p, 1.0})).alpha;
      worst_closed = std::max(worst_closed, std::abs(got - closed) / closed);
      worst_grid = std::max(worst_grid, std::abs(grid - closed) / closed);
    }
  }
  std::ostringstream d;
  d << "max rel err vs closed form " << worst_closed << ", grid vs closed form " << worst_grid;
  return {worst_closed <= 1e-6 && worst_grid <= 1e-6, d.str()};
}

// 3. Vehicle model 1/(tau s^3 + s^2 + mu s) has index 1/mu^2 at the origin.
Outcome vehicle_index() {
  double worst = 0.0, worst_omega = 0.0;
  for (double mu : {1.0, 2.0, 4.0}) {
    for (double frac : {0.1, 0.5, 0.9}) {
      const double tau = frac / (2.0 * mu);
      const auto c = passivity::ifp_index(RationalTF(Polynomial{1.0}, Polynomial{0.0, mu, 1.0, tau}));
      worst = std::max(worst, std::abs(c.alpha - 1.0 / (mu * mu)));
      worst_omega = std::max(worst_omega, std::abs(c.omega_star));
    }
  }
  std::ostringstream d;
  d << "max |alpha - 1/mu^2| " << worst << ", max omega_star " << worst_omega;
  return {worst <= 1e-8 && worst_omega <= 1e-6, d.str()};
}

// 4. All-to-all third-order agents: stated bound against simulation.
Outcome remark1_grid() {
  struct Family {
    double p, q;
    int n;
  };
  const std::vector<Family> families{{1.0, 1.0, 3}, {2.0, 3.0, 2}, {0.5, 2.0, 4}, {1.5, 1.0, 3}};
  const std::vector<double> ratios{0.25, 0.5, 0.8, 1.2, 2.0};  // kappa (N - 1) / pq
  int agree = 0, spectral_agree = 0, total = 0;
  std::ostringstream d, misses;
  for (const auto& f : families) {
    for (double r : ratios) {
      const double kappa = r * f.p * f.q / (f.n - 1);
      const auto res = scenarios::remark1_counterexample(f.p, f.q, f.n, kappa, config(5e-3, 300.0, 20));
      ++total;
      if (res.predicted_spectral == res.observed) ++spectral_agree;
      if (res.predicted == res.observed) {
        ++agree;
      } else {
        misses << " (" << f.p << "," << f.q << "," << f.n << "," << kappa << ")"
               << " predicted=" << res.predicted << " observed=" << res.observed;
      }
    }
  }
  const auto low = scenarios::remark1_counterexample(1.0, 1.0, 3, 0.4, config(5e-3, 300.0, 20));
  const auto high = scenarios::remark1_counterexample(1.0, 1.0, 3, 0.6, config(5e-3, 300.0, 20));
  d << agree << "/" << total << " agree (N kappa bound: " << spectral_agree << "/" << total << ");"
    << misses.str() << "; (1,1,3,0.4) observed=" << low.observed << " (1,1,3,0.6) observed=" << high.observed;
  return {agree == total && low.observed && !high.observed, d.str()};
}

// 5. Coupled oscillators: non-synchronizing despite bounded gain.
Outcome harmonic() {
  const auto r = scenarios::harmonic_counterexample(1.0, 2.0, 1.0, config(1e-3, 100.0, 10));
  const double exact = 2.0 / std::sqrt(13.0);
  const double analytic_err = std::abs(r.amplitude_ratio - exact);
  const double sim_err = std::abs(r.simulated_ratio / exact - 1.0);
  std::ostringstream d;
  d << "|ratio - 2/sqrt13| " << analytic_err << ", simulated rel err " << sim_err
    << ", synchronized=" << r.sim.metrics.synchronized;
  return {analytic_err <= 1e-9 && sim_err <= 0.02 && !r.sim.metrics.synchronized, d.str()};
}

// 6. Storage identities on random instances.
Outcome identities() {
  const auto start = std::chrono::steady_clock::now();
  const auto rep = selftest::run(20261017, 200, 100);
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << rep.graph_instances << " graphs, " << rep.shift_instances << " shifts; identity " << rep.worst_identity_residual
    << ", margin " << rep.worst_inequality_margin << ", shift " << rep.worst_shift_residual << ", " << secs
    << "s";
  return {rep.worst_identity_residual < 1e-10 && rep.worst_inequality_margin >= -1e-10 &&
              rep.worst_shift_residual < 1e-12 && rep.graph_instances >= 200 && rep.shift_instances >= 100 &&
              secs < 10.0,
          d.str()};
}

// 7. Heterogeneous LTI networks certified by index and weak coupling.
Outcome lti_suite() {
  const std::vector<RationalTF> pool{
      RationalTF(Polynomial{1.0}, Polynomial{0.0, 1.0}),                 // 1/s
      RationalTF(Polynomial{1.0}, Polynomial{0.0, 1.0, 1.0}),            // 1/(s(s+1))
      RationalTF(Polynomial{1.0}, Polynomial{0.0, 3.0, 2.0, 1.0}),       // 1/(s(s^2+2s+3))
      RationalTF(Polynomial{2.0, 1.0}, Polynomial{0.0, 3.0, 4.0, 1.0}),  // (s+2)/(s(s+1)(s+3))
      RationalTF(Polynomial{2.0}, Polynomial{0.0, 2.0, 1.0}),            // 2/(s(s+2))
      RationalTF(Polynomial{1.0}, Polynomial{1.0, 1.0}),                 // 1/(s+1)
      RationalTF(Polynomial{1.0}, Polynomial{1.0, 1.0, 1.0}),            // 1/(s^2+s+1)
      RationalTF(Polynomial{0.5, 1.0}, Polynomial{0.0, 2.0, 3.0, 1.0}),  // (s+0.5)/(s(s+1)(s+2))
  };
  std::mt19937_64 rng(7);
  int passed = 0;
  const int count = 12;
  std::ostringstream d;
  for (int k = 0; k < count; ++k) {
    const int n = 3 + k % 4;
    graphnet::Digraph base = k % 3 == 0   ? graphnet::directed_ring(n, 1.0)
                             : k % 3 == 1 ? graphnet::bidirectional_ring(n, 1.0)
                                          : selftest::random_strong_digraph(n, rng);
    std::vector<netsim::AgentModel> agents;
    Vec alphas(n);
    std::vector<Vec> x0;
    for (int i = 0; i < n; ++i) {
      const auto& tf = pool[static_cast<std::size_t>((k + 3 * i) % pool.size())];
      alphas(i) = passivity::ifp_index(tf).alpha;
      auto lti = netsim::LtiSiso::from_tf(tf);
      Vec x = Vec::Zero(lti.state_dim());
      x(0) = std::cos(1.3 * i + k);
      x0.push_back(x);
      agents.emplace_back(std::move(lti));
    }
    // Scale weights so max_j alpha_j d_j^+ = 0.4.
    const Vec dplus = graphnet::degrees(base).plus;
    const double worst = alphas.cwiseProduct(dplus).maxCoeff();
    const double scale = worst > 0.0 ? 0.4 / worst : 1.0;
    const auto g = graphnet::Digraph::from_adjacency(base.adjacency() * scale);
    const auto verdict = certify::check_theorem1(g, alphas);
    // One horizon for the whole suite; the slowest consensus mode needs several hundred seconds.
    SimConfig c = config(1e-2, 1200.0, 10);
    c.initial_states = x0;
    const auto sim = netsim::simulate(netsim::Network(std::move(agents), netsim::PlainProtocol{g}), c);
    const bool ok = verdict.passes && sim.metrics.synchronized && sim.metrics.pairwise_sup_tail < 1e-3;
    if (ok) ++passed;
    else d << "network " << k << " certified=" << verdict.passes << " tail=" << sim.metrics.pairwise_sup_tail << "; ";
  }
  d << passed << "/" << count << " networks synchronized";
  return {passed == count && count >= 10, d.str()};
}

// 8. Certified platoon from a 2 m gap perturbation.
Outcome platoon() {
  certify::CaccGainSet gains{Eigen::Vector3d(2, 2, 2), Eigen::Vector3d(0.4, 0.5, 1.0), Eigen::Vector2d(0.5, 0.5),
                             Eigen::Vector3d(0.1, 0.1, 0.1)};
  auto spec = scenarios::PlatoonSpec::at_goal(gains, Vec::Constant(3, 10.0), 20.0, 0.0);
  spec.q_init.array() -= 2.0;
  const auto b = scenarios::build_platoon(spec);
  const auto cfg = config(1e-3, 200.0, 100);
  const auto run = scenarios::run_platoon(spec, cfg);
  const auto transformed = scenarios::run_platoon_transformed(spec, cfg);
  const Eigen::MatrixXd y = scenarios::transformed_outputs(spec, run);
  double dev = 0.0;
  for (int i = 0; i < 3; ++i) {
    dev = std::max(dev, (y.col(i) - transformed.y[static_cast<std::size_t>(i)].col(0)).cwiseAbs().maxCoeff());
  }
  const double spacing = run.terminal_spacing_error.cwiseAbs().maxCoeff();
  const double velocity = run.terminal_velocity_error.cwiseAbs().maxCoeff();
  std::ostringstream d;
  d << "certified=" << (b.theorem2.passes && b.theorem4.passes) << " spacing " << spacing << " m, velocity "
    << velocity << " m/s, transformed deviation " << dev;
  return {b.theorem2.passes && b.theorem4.passes && spacing < 1e-3 && velocity < 1e-3 && dev <= 1e-9, d.str()};
}

// 9. Ring of delayed integrators.
Outcome delayed_ring() {
  const Vec delays = (Vec(5) << 0.3, 0.5, 0.2, 0.4, 0.6).finished();
  const auto run = scenarios::run_traffic(scenarios::TrafficSpec::ring(true, 5, 0.4, delays, Vec::LinSpaced(5, 10, 20)),
                                          config(1e-3, 200.0, 100));
  std::ostringstream d;
  d << "certified=" << run.certified << " tail " << run.sim.metrics.pairwise_sup_tail;
  return {run.certified && run.sim.metrics.pairwise_sup_tail < 1e-3, d.str()};
}

// 10. Integrator order, Perron weights, Routh against companion eigenvalues.
Outcome numerics() {
  const auto net = scenarios::remark1_network(1.0, 2.0, 3, 0.2);
  auto terminal = [&](double dt) {
    SimConfig c;
    c.dt = dt;
    c.t_final = 4.0;
    c.initial_states = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 1)};
    netsim::Stepper s(net, c);
    for (long k = 0; k < c.steps(); ++k) s.step();
    return Vec(s.state());
  };
  const Vec ref = terminal(0.1 / 16.0);
  const double ratio = (terminal(0.1) - ref).norm() / (terminal(0.05) - ref).norm();
  const bool order_ok = ratio >= 8.0 && ratio <= 32.0;

  std::mt19937_64 rng(11);
  double perron_residual = 0.0, perron_min = 1.0;
  for (int k = 0; k < 100; ++k) {
    const auto g = selftest::random_strong_digraph(2 + k % 7, rng);
    const Vec p = graphnet::perron_weights(g);
    perron_residual = std::max(perron_residual, (p.transpose() * graphnet::laplacian(g)).cwiseAbs().maxCoeff());
    perron_min = std::min(perron_min, p.minCoeff());
  }

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> deg(1, 7);
  int routh_agree = 0;
  for (int k = 0; k < 500; ++k) {
    const int n = deg(rng);
    std::vector<double> c(static_cast<std::size_t>(n + 1));
    if (k % 2 == 0) {
      // Built from roots with real parts away from the axis.
      std::vector<double> acc{1.0};
      int left = n;
      while (left > 0) {
        const double re = (std::abs(u(rng)) + 0.05) * (u(rng) < 0.6 ? -1.0 : 1.0);
        std::vector<double> factor = left >= 2 && u(rng) > 0.0
                                         ? std::vector<double>{re * re + 4.0 * u(rng) * u(rng), -2.0 * re, 1.0}
                                         : std::vector<double>{-re, 1.0};
        left -= static_cast<int>(factor.size()) - 1;
        std::vector<double> next(acc.size() + factor.size() - 1, 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) {
          for (std::size_t j = 0; j < factor.size(); ++j) next[i + j] += acc[i] * factor[j];
        }
        acc = next;
      }
      c = acc;
    } else {
      for (auto& x : c) x = u(rng) + 0.3;
      c.back() = 1.0;
    }
    const Eigen::Index m = static_cast<Eigen::Index>(c.size()) - 1;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) companion(i, m - 1) = -c[static_cast<std::size_t>(i)] / c.back();
    const Eigen::VectorXcd roots = companion.eigenvalues();
    const bool hurwitz = roots.real().maxCoeff() < 0.0;
    if (passivity::routh_hurwitz(Polynomial(c)) == hurwitz) ++routh_agree;
  }

  std::ostringstream d;
  d << "rk4 ratio " << ratio << ", perron residual " << perron_residual << " min " << perron_min << ", routh "
    << routh_agree << "/500";
  return {order_ok && perron_residual < 1e-10 && perron_min > 0.0 && routh_agree == 500, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "chain delay threshold", chain_threshold},
      {2, "cubic ifp index", cubic_family},
      {3, "vehicle ifp index", vehicle_index},
      {4, "all-to-all boundary", remark1_grid},
      {5, "harmonic counterexample", harmonic},
      {6, "storage identities", identities},
      {7, "heterogeneous lti networks", lti_suite},
      {8, "cacc platoon", platoon},
      {9, "delayed ring", delayed_ring},
      {10, "numerics hygiene", numerics},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  bool all = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d %s: %s | %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
