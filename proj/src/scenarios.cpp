#include "ifpsync/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ifpsync/error.hpp"
#include "ifpsync/ode.hpp"

namespace ifpsync::scenarios {

namespace {

void require_size(const Vec& v, int n, const char* name) {
  if (v.size() != n)
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " has length " +
                                                  std::to_string(v.size()) + ", expected " +
                                                  std::to_string(n));
}

double tail_amplitude(const netsim::SimResult& sim, int agent) {
  const double t_end = sim.times.back();
  const double start = t_end - 0.1 * (t_end - sim.times.front());
  double amp = 0.0;
  for (std::size_t s = 0; s < sim.times.size(); ++s)
    if (sim.times[s] >= start) amp = std::max(amp, sim.y[agent].row(static_cast<Eigen::Index>(s)).norm());
  return amp;
}

}  // namespace

// --- traffic ------------------------------------------------------------------------

TrafficSpec TrafficSpec::classic_chain(int n, double sensitivity, double delay, Vec v_init,
                                       double v0) {
  TrafficSpec spec;
  spec.preset = TrafficTopology::classic_chain;
  spec.n = n;
  spec.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) spec.adjacency(i, i - 1) = sensitivity;
  spec.delays = Vec::Constant(n, delay);
  spec.v_init = std::move(v_init);
  spec.v0 = v0;
  spec.leader_sensitivity = sensitivity;
  return spec;
}

TrafficSpec TrafficSpec::ring(bool bidirectional, int n, double sensitivity, Vec delays,
                              Vec v_init) {
  TrafficSpec spec;
  spec.preset = bidirectional ? TrafficTopology::bidirectional_ring : TrafficTopology::unidirectional_ring;
  spec.n = n;
  spec.adjacency = bidirectional ? graphnet::bidirectional_ring(n, sensitivity).adjacency()
                                 : graphnet::directed_ring(n, sensitivity).adjacency();
  spec.delays = std::move(delays);
  spec.v_init = std::move(v_init);
  return spec;
}

TrafficSpec TrafficSpec::custom(Eigen::MatrixXd adjacency, Vec delays, Vec v_init) {
  TrafficSpec spec;
  spec.preset = TrafficTopology::custom;
  spec.n = static_cast<int>(adjacency.rows());
  spec.adjacency = std::move(adjacency);
  spec.delays = std::move(delays);
  spec.v_init = std::move(v_init);
  return spec;
}

TrafficBuild build_traffic(const TrafficSpec& spec) {
  if (spec.n < 1 || spec.adjacency.rows() != spec.n || spec.adjacency.cols() != spec.n)
    throw Error(ErrorCode::DimensionMismatch, "traffic adjacency must be n x n");
  require_size(spec.delays, spec.n, "delays");
  require_size(spec.v_init, spec.n, "v_init");

  const bool chain = spec.preset == TrafficTopology::classic_chain;
  const int nodes = chain ? spec.n + 1 : spec.n;

  // In the chain the leader is node 0: a vehicle with no inputs, so its
  // velocity stays at v0.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nodes, nodes);
  Vec delays = Vec::Zero(nodes);
  std::vector<Vec> init;
  std::vector<netsim::AgentModel> agents;
  if (chain) {
    a.bottomRightCorner(spec.n, spec.n) = spec.adjacency;
    a(1, 0) = spec.leader_sensitivity;
    delays.tail(spec.n) = spec.delays;
    agents.emplace_back(netsim::DelayedIntegrator{0.0, 1});
    init.push_back(Vec::Constant(1, spec.v0));
  } else {
    a = spec.adjacency;
    delays = spec.delays;
  }
  for (int i = 0; i < spec.n; ++i) {
    agents.emplace_back(netsim::DelayedIntegrator{spec.delays(i), 1});
    init.push_back(Vec::Constant(1, spec.v_init(i)));
  }
  auto g = graphnet::Digraph::from_adjacency(a);

  TrafficBuild build{netsim::Network(std::move(agents), netsim::PlainProtocol{g}),
                     certify::check_theorem1(g, delays), std::nullopt, false, std::move(init)};
  if (chain) {
    ChainCertificate cc;
    cc.slack = Vec(spec.n);
    for (int i = 0; i < spec.n; ++i) cc.slack(i) = 0.5 - spec.delays(i) * a.row(i + 1).sum();
    cc.passes = (cc.slack.array() > 0.0).all();
    build.chain = cc;
    build.certified = cc.passes;
  } else {
    build.certified = build.theorem1.passes;
  }
  return build;
}

TrafficRun run_traffic(const TrafficSpec& spec, netsim::SimConfig config) {
  const auto build = build_traffic(spec);
  if (config.initial_states.empty()) config.initial_states = build.initial_states;
  TrafficRun run;
  run.sim = netsim::simulate(build.network, config);
  run.certified = build.certified;

  const auto samples = static_cast<Eigen::Index>(run.sim.times.size());
  const int n = build.network.size();
  run.positions = Eigen::MatrixXd::Zero(samples, n);
  for (Eigen::Index s = 1; s < samples; ++s) {
    const double h = run.sim.times[s] - run.sim.times[s - 1];
    for (int i = 0; i < n; ++i)
      run.positions(s, i) = run.positions(s - 1, i) +
                            0.5 * h * (run.sim.y[i](s, 0) + run.sim.y[i](s - 1, 0));
  }
  return run;
}

// --- platoon ------------------------------------------------------------------------

PlatoonSpec PlatoonSpec::at_goal(certify::CaccGainSet gains, Vec s, double v0, double q0_init) {
  const int n = gains.size();
  PlatoonSpec spec;
  spec.gains = std::move(gains);
  spec.s = std::move(s);
  spec.v0 = v0;
  spec.q0_init = q0_init;
  spec.q_init.resize(n);
  double q = q0_init;
  for (int i = 0; i < n; ++i) {
    q -= spec.s(i);
    spec.q_init(i) = q;
  }
  spec.v_init = Vec::Constant(n, v0);
  spec.a_init = Vec::Zero(n);
  return spec;
}

void PlatoonSpec::validate() const {
  gains.validate();
  const int n = gains.size();
  require_size(s, n, "s");
  require_size(q_init, n, "q_init");
  require_size(v_init, n, "v_init");
  require_size(a_init, n, "a_init");
  if (!(s.array() > 0.0).all()) throw Error(ErrorCode::InvalidArgument, "desired gaps must be positive");
}

PlatoonBuild build_platoon(const PlatoonSpec& spec) {
  spec.validate();
  const auto& gains = spec.gains;
  const int n = gains.size();
  for (int i = 0; i < n; ++i)
    if (!(gains.mu(i) * gains.tau(i) < 0.5))
      throw Error(ErrorCode::MuTauViolation,
                  "vehicle " + std::to_string(i + 1) + ": mu tau = " +
                      std::to_string(gains.mu(i) * gains.tau(i)) + " >= 1/2");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) a(i, i - 1) = gains.eta(i);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = gains.nu(i);
  Vec b = Vec::Zero(n);
  b(0) = gains.eta(0);
  Vec alphas = gains.mu.cwiseProduct(gains.mu).cwiseInverse();
  auto g = graphnet::Digraph::from_adjacency(a);

  const Vec mu = gains.mu;
  const double v0 = spec.v0;
  const double q0 = spec.q0_init;
  netsim::ReferenceProtocol proto{
      g, b, [mu, v0](int i, double) { return Vec::Constant(1, mu(i) * v0); },
      [q0, v0](double t) { return Vec::Constant(1, q0 + v0 * t); }};

  std::vector<netsim::AgentModel> agents;
  std::vector<Vec> init;
  double offset = 0.0;
  for (int i = 0; i < n; ++i) {
    agents.emplace_back(netsim::Vehicle3rd{gains.tau(i), gains.mu(i)});
    offset += spec.s(i);
    Vec x(3);
    x << spec.q_init(i) + offset, spec.v_init(i), spec.a_init(i);
    init.push_back(x);
  }

  PlatoonBuild build{netsim::Network(std::move(agents), std::move(proto)),
                     alphas,
                     b,
                     certify::check_theorem2(g, alphas, b),
                     certify::check_theorem4(gains),
                     std::move(init)};
  return build;
}

PlatoonRun run_platoon(const PlatoonSpec& spec, const netsim::SimConfig& config) {
  spec.validate();
  if (!(config.dt > 0.0) || !(config.t_final > config.dt) || config.record_stride < 1)
    throw Error(ErrorCode::InvalidArgument, "invalid simulation config");
  const auto& gains = spec.gains;
  const int n = gains.size();

  auto rhs = [&](double t, const Vec& x) {
    Vec dx(3 * n);
    for (int i = 0; i < n; ++i) {
      const double q = x(3 * i), v = x(3 * i + 1), acc = x(3 * i + 2);
      const double q_prev = i == 0 ? spec.q0_init + spec.v0 * t : x(3 * (i - 1));
      double a_des = gains.mu(i) * (spec.v0 - v) + gains.eta(i) * (q_prev - q - spec.s(i));
      if (i + 1 < n) a_des += gains.nu(i) * (x(3 * (i + 1)) - q + spec.s(i + 1));
      dx(3 * i) = v;
      dx(3 * i + 1) = acc;
      dx(3 * i + 2) = (a_des - acc) / gains.tau(i);
    }
    return dx;
  };

  Vec x(3 * n);
  for (int i = 0; i < n; ++i) x.segment(3 * i, 3) << spec.q_init(i), spec.v_init(i), spec.a_init(i);

  const long steps = config.steps();
  const long samples = config.samples();
  PlatoonRun run;
  run.q.resize(samples, n);
  run.v.resize(samples, n);
  run.a.resize(samples, n);
  long recorded = 0;
  auto record = [&](double t) {
    for (int i = 0; i < n; ++i) {
      run.q(recorded, i) = x(3 * i);
      run.v(recorded, i) = x(3 * i + 1);
      run.a(recorded, i) = x(3 * i + 2);
    }
    run.times.push_back(t);
    ++recorded;
  };
  record(0.0);
  for (long k = 1; k <= steps; ++k) {
    x = rk4_step(rhs, static_cast<double>(k - 1) * config.dt, x, config.dt);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > config.blowup_threshold) {
      run.status = netsim::SimStatus::diverged;
      break;
    }
    if (k % config.record_stride == 0) record(static_cast<double>(k) * config.dt);
  }
  run.q.conservativeResize(recorded, n);
  run.v.conservativeResize(recorded, n);
  run.a.conservativeResize(recorded, n);

  run.spacing_errors.resize(recorded, n);
  run.velocity_errors.resize(recorded, n);
  for (long s = 0; s < recorded; ++s) {
    const double q0 = spec.q0_init + spec.v0 * run.times[static_cast<std::size_t>(s)];
    for (int i = 0; i < n; ++i) {
      const double prev = i == 0 ? q0 : run.q(s, i - 1);
      run.spacing_errors(s, i) = prev - run.q(s, i) - spec.s(i);
      run.velocity_errors(s, i) = run.v(s, i) - spec.v0;
    }
  }
  run.terminal_spacing_error = run.spacing_errors.row(recorded - 1).transpose();
  run.terminal_velocity_error = run.velocity_errors.row(recorded - 1).transpose();
  return run;
}

netsim::SimResult run_platoon_transformed(const PlatoonSpec& spec, netsim::SimConfig config) {
  const auto build = build_platoon(spec);
  if (config.initial_states.empty()) config.initial_states = build.initial_states;
  return netsim::simulate(build.network, config);
}

Eigen::MatrixXd transformed_outputs(const PlatoonSpec& spec, const PlatoonRun& run) {
  Eigen::MatrixXd y = run.q;
  double offset = 0.0;
  for (Eigen::Index i = 0; i < y.cols(); ++i) {
    offset += spec.s(i);
    y.col(i).array() += offset;
  }
  return y;
}

// --- counterexamples ------------------------------------------------------------------

passivity::RationalTF harmonic_transfer(double omega1, double k) {
  return {passivity::Polynomial{0.0, k}, passivity::Polynomial{omega1 * omega1, k, 1.0}};
}

HarmonicResult harmonic_counterexample(double omega1, double omega2, double k,
                                       const netsim::SimConfig& config) {
  if (!(k > 0.0) || omega1 == omega2)
    throw Error(ErrorCode::InvalidArgument, "need k > 0 and omega1 != omega2");
  HarmonicResult result;
  const passivity::Complex w = passivity::eval_freq(harmonic_transfer(omega1, k), omega2);
  result.amplitude_ratio = std::abs(w);

  auto oscillator = [](double omega) {
    return netsim::LtiSiso::from_tf(
        {passivity::Polynomial{0.0, 1.0}, passivity::Polynomial{omega * omega, 0.0, 1.0}});
  };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 1) = k;
  netsim::Network net({oscillator(omega1), oscillator(omega2)},
                      netsim::PlainProtocol{graphnet::Digraph::from_adjacency(a)});

  // xi_1 = Re[W(i w2) e^{i w2 t}], xi_2 = Re[e^{i w2 t}]; state is (xi, xi').
  const passivity::Complex iw{0.0, omega2};
  netsim::SimConfig cfg = config;
  Vec x1(2), x2(2);
  x1 << w.real(), (iw * w).real();
  x2 << 1.0, 0.0;
  cfg.initial_states = {x1, x2};
  result.sim = netsim::simulate(net, cfg);
  result.simulated_ratio = tail_amplitude(result.sim, 0) / tail_amplitude(result.sim, 1);
  return result;
}

netsim::Network remark1_network(double p, double q, int n_agents, double kappa) {
  if (!(p > 0.0) || !(q > 0.0) || !(kappa > 0.0) || n_agents < 2)
    throw Error(ErrorCode::InvalidArgument, "need p, q, kappa > 0 and N >= 2");
  const auto agent = netsim::LtiSiso::from_tf(
      {passivity::Polynomial{1.0}, passivity::Polynomial{0.0, q, p, 1.0}});
  std::vector<netsim::AgentModel> agents(static_cast<std::size_t>(n_agents), agent);
  return netsim::Network(std::move(agents), netsim::PlainProtocol{graphnet::all_to_all(n_agents, kappa)});
}

Remark1Result remark1_counterexample(double p, double q, int n_agents, double kappa,
                                     netsim::SimConfig config) {
  Remark1Result result;
  result.predicted = certify::all_to_all_bound(p, q, n_agents, kappa);
  result.predicted_spectral = certify::all_to_all_spectral_bound(p, q, n_agents, kappa);
  const auto net = remark1_network(p, q, n_agents, kappa);
  if (config.initial_states.empty()) {
    for (int i = 0; i < n_agents; ++i) config.initial_states.push_back(Vec::Unit(3, 0) * i);
  }
  result.sim = netsim::simulate(net, config);
  result.observed = result.sim.metrics.synchronized;
  return result;
}

}  // namespace ifpsync::scenarios
