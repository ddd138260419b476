#include "ifpsync/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ifpsync/error.hpp"
#include "ifpsync/ode.hpp"

namespace ifpsync::netsim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_rows(const graphnet::Digraph& g, const Eigen::MatrixXd& y) {
  if (y.rows() != g.size())
    throw Error(ErrorCode::DimensionMismatch, "got outputs for " + std::to_string(y.rows()) +
                                                  " agents, graph has " +
                                                  std::to_string(g.size()) + " nodes");
}

}  // namespace

// --- agents -----------------------------------------------------------------

LtiSiso LtiSiso::from_tf(passivity::RationalTF tf) {
  if (!tf.strictly_proper())
    throw Error(ErrorCode::ImproperTransferFunction,
                "simulated LTI agents must be strictly proper (no feedthrough)");
  const int n = tf.den().degree();
  const double lead = tf.den().leading();
  LtiSiso agent{tf, Eigen::MatrixXd::Zero(n, n), Vec::Zero(n), Eigen::RowVectorXd::Zero(n)};
  for (int i = 0; i + 1 < n; ++i) agent.a(i, i + 1) = 1.0;
  for (int k = 0; k < n; ++k) {
    agent.a(n - 1, k) = -tf.den()[k] / lead;
    agent.c(k) = tf.num()[k] / lead;
  }
  agent.b(n - 1) = 1.0;
  return agent;
}

int state_dim(const AgentModel& agent) {
  return std::visit(overloaded{[](const LtiSiso& a) { return a.state_dim(); },
                               [](const DelayedIntegrator& a) { return a.dim; },
                               [](const Vehicle3rd&) { return 3; },
                               [](const CustomAgent& a) { return a.state_dim; }},
                    agent);
}

int output_dim(const AgentModel& agent) {
  return std::visit(overloaded{[](const LtiSiso&) { return 1; },
                               [](const DelayedIntegrator& a) { return a.dim; },
                               [](const Vehicle3rd&) { return 1; },
                               [](const CustomAgent& a) { return a.dim; }},
                    agent);
}

double input_delay(const AgentModel& agent) {
  if (const auto* d = std::get_if<DelayedIntegrator>(&agent)) return d->delay;
  return 0.0;
}

Vec agent_output(const AgentModel& agent, const Vec& x) {
  return std::visit(overloaded{[&](const LtiSiso& a) -> Vec { return Vec::Constant(1, a.c.dot(x)); },
                               [&](const DelayedIntegrator&) -> Vec { return x; },
                               [&](const Vehicle3rd&) -> Vec { return x.head(1); },
                               [&](const CustomAgent& a) -> Vec { return a.h(x); }},
                    agent);
}

Vec agent_derivative(const AgentModel& agent, const Vec& x, const Vec& u) {
  return std::visit(
      overloaded{[&](const LtiSiso& a) -> Vec { return a.a * x + a.b * u(0); },
                 [&](const DelayedIntegrator&) -> Vec { return u; },
                 [&](const Vehicle3rd& v) -> Vec {
                   Vec dx(3);
                   dx << x(1), x(2), (u(0) - x(2) - v.mu * x(1)) / v.tau;
                   return dx;
                 },
                 [&](const CustomAgent& a) -> Vec { return a.f(x, u); }},
      agent);
}

// --- protocols ----------------------------------------------------------------

const graphnet::Digraph& protocol_graph(const Protocol& protocol) {
  return std::visit([](const auto& p) -> const graphnet::Digraph& { return p.g; }, protocol);
}

Eigen::MatrixXd couple_plain(const graphnet::Digraph& g, const Eigen::MatrixXd& y) {
  check_rows(g, y);
  const int n = g.size();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, y.cols());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (g.weight(j, k) != 0.0) u.row(j) += g.weight(j, k) * (y.row(k) - y.row(j));
  return u;
}

Eigen::MatrixXd couple_reference(const ReferenceProtocol& proto, const Eigen::MatrixXd& y,
                                 double t) {
  check_rows(proto.g, y);
  if (proto.b.size() != proto.g.size())
    throw Error(ErrorCode::DimensionMismatch, "b length does not match the graph");
  Eigen::MatrixXd u = couple_plain(proto.g, y);
  const bool tracks = (proto.b.array() != 0.0).any();
  const Vec target = tracks && proto.y_bar ? proto.y_bar(t) : Vec::Zero(y.cols());
  for (int i = 0; i < proto.g.size(); ++i) {
    if (proto.u_bar) {
      const Vec ff = proto.u_bar(i, t);
      if (ff.size() != y.cols())
        throw Error(ErrorCode::DimensionMismatch, "u_bar dimension does not match outputs");
      u.row(i) += ff.transpose();
    }
    if (proto.b(i) != 0.0) {
      if (target.size() != y.cols())
        throw Error(ErrorCode::DimensionMismatch, "y_bar dimension does not match outputs");
      u.row(i) += proto.b(i) * (target.transpose() - y.row(i));
    }
  }
  return u;
}

Eigen::MatrixXd apply_protocol(const Protocol& protocol, const Eigen::MatrixXd& y, double t) {
  return std::visit(overloaded{[&](const PlainProtocol& p) { return couple_plain(p.g, y); },
                               [&](const ReferenceProtocol& p) { return couple_reference(p, y, t); }},
                    protocol);
}

// --- network ------------------------------------------------------------------

Network::Network(std::vector<AgentModel> agents, Protocol protocol)
    : agents_(std::move(agents)), protocol_(std::move(protocol)) {
  if (agents_.empty()) throw Error(ErrorCode::InvalidArgument, "network has no agents");
  if (protocol_graph(protocol_).size() != size())
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(size()) + " agents but the graph has " +
                    std::to_string(protocol_graph(protocol_).size()) + " nodes");
  if (const auto* ref = std::get_if<ReferenceProtocol>(&protocol_); ref && ref->b.size() != size())
    throw Error(ErrorCode::DimensionMismatch, "b length does not match the agent count");
  dim_ = netsim::output_dim(agents_.front());
  offsets_.push_back(0);
  for (const auto& agent : agents_) {
    if (netsim::output_dim(agent) != dim_)
      throw Error(ErrorCode::DimensionMismatch, "agents have different output dimensions");
    if (input_delay(agent) < 0.0 || !std::isfinite(input_delay(agent)))
      throw Error(ErrorCode::InvalidArgument, "delays must be finite and >= 0");
    offsets_.push_back(offsets_.back() + state_dim(agent));
  }
}

double Network::max_delay() const {
  double m = 0.0;
  for (const auto& a : agents_) m = std::max(m, input_delay(a));
  return m;
}

double Network::min_positive_delay() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& a : agents_)
    if (input_delay(a) > 0.0) m = std::min(m, input_delay(a));
  return m;
}

Eigen::MatrixXd Network::outputs(const Vec& state) const {
  Eigen::MatrixXd y(size(), dim_);
  for (int i = 0; i < size(); ++i)
    y.row(i) = agent_output(agents_[i], state.segment(offsets_[i], state_dim(agents_[i]))).transpose();
  return y;
}

long SimConfig::steps() const { return static_cast<long>(std::floor(t_final / dt + 1e-9)); }

long SimConfig::samples() const { return steps() / record_stride + 1; }

// --- input history --------------------------------------------------------------

InputHistory::InputHistory(double dt, double delay, int dim, TimeFunction initial)
    : dt_(dt),
      dim_(dim),
      capacity_(static_cast<std::size_t>(std::ceil(delay / dt)) + 3),
      initial_(std::move(initial)) {}

void InputHistory::push(const Vec& u) {
  samples_.push_back(u);
  while (samples_.size() > capacity_) {
    samples_.pop_front();
    ++first_index_;
  }
}

const Vec& InputHistory::sample(long k) const {
  if (k < first_index_ || k > latest_index())
    throw Error(ErrorCode::HistoryUnderflow,
                "sample " + std::to_string(k) + " outside retained window [" +
                    std::to_string(first_index_) + ", " + std::to_string(latest_index()) + "]");
  return samples_[static_cast<std::size_t>(k - first_index_)];
}

Vec InputHistory::at(double t) const {
  if (t <= 0.0) return initial_ ? initial_(t) : Vec::Zero(dim_);
  const double x = t / dt_;
  long k = static_cast<long>(std::floor(x));
  double frac = x - static_cast<double>(k);
  if (frac > 1.0 - 1e-9) {
    ++k;
    frac = 0.0;
  } else if (frac < 1e-9) {
    frac = 0.0;
  }
  if (frac == 0.0) return sample(k);
  return (1.0 - frac) * sample(k) + frac * sample(k + 1);
}

// --- stepper ----------------------------------------------------------------------

Stepper::Stepper(const Network& network, const SimConfig& config)
    : network_(&network), dt_(config.dt) {
  if (!(config.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (network.min_positive_delay() < config.dt * (1.0 - 1e-9))
    throw Error(ErrorCode::InvalidArgument, "dt must not exceed the smallest positive delay");

  const int n = network.size();
  state_ = Vec::Zero(network.total_state_dim());
  if (!config.initial_states.empty()) {
    if (static_cast<int>(config.initial_states.size()) != n)
      throw Error(ErrorCode::DimensionMismatch, "need one initial state per agent");
    for (int i = 0; i < n; ++i) {
      const int d = state_dim(network.agents()[i]);
      if (config.initial_states[i].size() != d)
        throw Error(ErrorCode::DimensionMismatch,
                    "initial state of agent " + std::to_string(i) + " has size " +
                        std::to_string(config.initial_states[i].size()) + ", expected " +
                        std::to_string(d));
      state_.segment(network.offset(i), d) = config.initial_states[i];
    }
  }
  if (!config.initial_histories.empty() && static_cast<int>(config.initial_histories.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "need one initial history per agent");

  histories_.resize(n);
  for (int i = 0; i < n; ++i) {
    const double delay = input_delay(network.agents()[i]);
    if (delay > 0.0) {
      TimeFunction init = config.initial_histories.empty() ? TimeFunction{} : config.initial_histories[i];
      histories_[i].emplace(dt_, delay, network.output_dim(), std::move(init));
    }
  }
  current_inputs_ = apply_protocol(network.protocol(), outputs(), 0.0);
  for (int i = 0; i < n; ++i)
    if (histories_[i]) histories_[i]->push(current_inputs_.row(i).transpose());
}

Vec Stepper::derivative(double t, const Vec& x) const {
  const Network& net = *network_;
  const Eigen::MatrixXd u = apply_protocol(net.protocol(), net.outputs(x), t);
  Vec dx(x.size());
  for (int i = 0; i < net.size(); ++i) {
    const auto& agent = net.agents()[i];
    const int d = state_dim(agent);
    const Vec ui = histories_[i] ? histories_[i]->at(t - input_delay(agent)) : Vec(u.row(i).transpose());
    dx.segment(net.offset(i), d) = agent_derivative(agent, x.segment(net.offset(i), d), ui);
  }
  return dx;
}

void Stepper::step() {
  state_ = rk4_step([this](double t, const Vec& x) { return derivative(t, x); }, time(), state_, dt_);
  ++step_count_;
  current_inputs_ = apply_protocol(network_->protocol(), outputs(), time());
  for (int i = 0; i < network_->size(); ++i)
    if (histories_[i]) histories_[i]->push(current_inputs_.row(i).transpose());
}

// --- metrics ------------------------------------------------------------------------

SyncMetrics sync_metrics(const std::vector<double>& times, const std::vector<Eigen::MatrixXd>& y,
                         const std::optional<TimeFunction>& y_bar, double tol) {
  if (times.empty() || y.empty()) throw Error(ErrorCode::EmptyTrajectory, "no samples recorded");
  const int n = static_cast<int>(y.size());
  const auto samples = static_cast<Eigen::Index>(times.size());
  for (const auto& yi : y)
    if (yi.rows() != samples)
      throw Error(ErrorCode::DimensionMismatch, "trajectory length differs from the time axis");

  SyncMetrics m;
  m.l2_pairwise = Eigen::MatrixXd::Zero(n, n);
  const double t_end = times.back();
  const double tail_start = t_end - 0.1 * (t_end - times.front());

  Eigen::MatrixXd ref;
  if (y_bar) {
    ref.resize(samples, y.front().cols());
    for (Eigen::Index s = 0; s < samples; ++s) ref.row(s) = (*y_bar)(times[s]).transpose();
    m.l2_reference = Vec::Zero(n);
    m.reference_sup_tail = 0.0;
  }

  for (Eigen::Index s = 0; s < samples; ++s) {
    const bool in_tail = times[s] >= tail_start;
    const double w_left = s > 0 ? 0.5 * (times[s] - times[s - 1]) : 0.0;
    const double w_right = s + 1 < samples ? 0.5 * (times[s + 1] - times[s]) : 0.0;
    const double weight = w_left + w_right;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d2 = (y[i].row(s) - y[j].row(s)).squaredNorm();
        m.l2_pairwise(i, j) += weight * d2;
        if (in_tail) m.pairwise_sup_tail = std::max(m.pairwise_sup_tail, std::sqrt(d2));
      }
      if (y_bar) {
        const double r2 = (y[i].row(s) - ref.row(s)).squaredNorm();
        (*m.l2_reference)(i) += weight * r2;
        if (in_tail) *m.reference_sup_tail = std::max(*m.reference_sup_tail, std::sqrt(r2));
      }
    }
  }
  m.l2_pairwise.triangularView<Eigen::StrictlyLower>() =
      m.l2_pairwise.transpose().triangularView<Eigen::StrictlyLower>();
  m.synchronized = m.pairwise_sup_tail < tol;
  return m;
}

// --- simulate ----------------------------------------------------------------------

SimResult simulate(const Network& network, const SimConfig& config) {
  if (!(config.t_final > config.dt))
    throw Error(ErrorCode::InvalidArgument, "t_final must exceed dt");
  if (config.record_stride < 1) throw Error(ErrorCode::InvalidArgument, "record_stride must be >= 1");

  Stepper stepper(network, config);
  const int n = network.size();
  const int m = network.output_dim();
  const long steps = config.steps();
  const long samples = config.samples();

  SimResult result;
  result.times.reserve(static_cast<std::size_t>(samples));
  result.y.assign(n, Eigen::MatrixXd(samples, m));
  result.u.assign(n, Eigen::MatrixXd(samples, m));
  long recorded = 0;
  auto record = [&] {
    const Eigen::MatrixXd y = stepper.outputs();
    for (int i = 0; i < n; ++i) {
      result.y[i].row(recorded) = y.row(i);
      result.u[i].row(recorded) = stepper.inputs().row(i);
    }
    result.times.push_back(stepper.time());
    ++recorded;
  };

  record();
  for (long k = 1; k <= steps; ++k) {
    stepper.step();
    const Vec& x = stepper.state();
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > config.blowup_threshold) {
      result.status = SimStatus::diverged;
      result.diverged_at = stepper.time();
      break;
    }
    if (k % config.record_stride == 0) record();
  }
  for (auto& yi : result.y) yi.conservativeResize(recorded, m);
  for (auto& ui : result.u) ui.conservativeResize(recorded, m);

  std::optional<TimeFunction> y_bar;
  if (const auto* ref = std::get_if<ReferenceProtocol>(&network.protocol()); ref && ref->y_bar)
    y_bar = ref->y_bar;
  result.metrics = sync_metrics(result.times, result.y, y_bar, config.tol);
  if (result.status == SimStatus::diverged) result.metrics.synchronized = false;
  return result;
}

std::vector<SimResult> simulate_batch_serial(std::span<const SimJob> jobs) {
  std::vector<SimResult> out(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = simulate(jobs[i].network, jobs[i].config);
  return out;
}

std::vector<SimResult> simulate_batch(std::span<const SimJob> jobs) {
  std::vector<SimResult> out(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
  // Exceptions must not escape an OpenMP region; capture and rethrow the first.
  std::vector<std::exception_ptr> errors(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = simulate(jobs[i].network, jobs[i].config);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace ifpsync::netsim
