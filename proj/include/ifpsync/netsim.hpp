#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ifpsync/graphnet.hpp"
#include "ifpsync/passivity.hpp"

namespace ifpsync::netsim {

using Vec = Eigen::VectorXd;
using TimeFunction = std::function<Vec(double)>;

// --- agents -----------------------------------------------------------------

/// Strictly proper SISO agent in controllable canonical form.
struct LtiSiso {
  passivity::RationalTF tf;
  Eigen::MatrixXd a;
  Vec b;
  Eigen::RowVectorXd c;

  /// Throws ImproperTransferFunction unless deg num < deg den.
  static LtiSiso from_tf(passivity::RationalTF tf);
  int state_dim() const { return static_cast<int>(a.rows()); }
};

/// y' (t) = u(t - delay), y in R^dim.
struct DelayedIntegrator {
  double delay = 0.0;
  int dim = 1;
};

/// tau y''' + y'' + mu y' = u; state (y, y', y'').
struct Vehicle3rd {
  double tau = 0.1;
  double mu = 1.0;
};

/// Arbitrary x' = f(x, u), y = h(x) with dim-dimensional input and output.
struct CustomAgent {
  int state_dim = 1;
  int dim = 1;
  std::function<Vec(const Vec& x, const Vec& u)> f;
  std::function<Vec(const Vec& x)> h;
};

using AgentModel = std::variant<LtiSiso, DelayedIntegrator, Vehicle3rd, CustomAgent>;

int state_dim(const AgentModel& agent);
int output_dim(const AgentModel& agent);
double input_delay(const AgentModel& agent);
Vec agent_output(const AgentModel& agent, const Vec& x);
Vec agent_derivative(const AgentModel& agent, const Vec& x, const Vec& u);

// --- protocols ----------------------------------------------------------------

struct PlainProtocol {
  graphnet::Digraph g;
};

struct ReferenceProtocol {
  graphnet::Digraph g;
  Vec b;
  std::function<Vec(int agent, double t)> u_bar;
  TimeFunction y_bar;
};

using Protocol = std::variant<PlainProtocol, ReferenceProtocol>;

const graphnet::Digraph& protocol_graph(const Protocol& protocol);

/// u_j = sum_k a_jk (y_k - y_j). Rows of y are the agents' outputs.
Eigen::MatrixXd couple_plain(const graphnet::Digraph& g, const Eigen::MatrixXd& y);

/// u_i = u_bar_i(t) + b_i (y_bar(t) - y_i) + sum_j a_ij (y_j - y_i).
Eigen::MatrixXd couple_reference(const ReferenceProtocol& proto, const Eigen::MatrixXd& y,
                                 double t);

Eigen::MatrixXd apply_protocol(const Protocol& protocol, const Eigen::MatrixXd& y, double t);

// --- network and integration ------------------------------------------------

/// Agents plus protocol, validated for consistent sizes.
class Network {
 public:
  Network(std::vector<AgentModel> agents, Protocol protocol);

  int size() const { return static_cast<int>(agents_.size()); }
  int output_dim() const { return dim_; }
  int total_state_dim() const { return offsets_.back(); }
  int offset(int agent) const { return offsets_[agent]; }
  const std::vector<AgentModel>& agents() const { return agents_; }
  const Protocol& protocol() const { return protocol_; }
  double max_delay() const;
  double min_positive_delay() const;

  /// Outputs of all agents for the stacked state, one row per agent.
  Eigen::MatrixXd outputs(const Vec& state) const;

 private:
  std::vector<AgentModel> agents_;
  Protocol protocol_;
  std::vector<int> offsets_;
  int dim_ = 1;
};

struct SimConfig {
  double dt = 1e-3;
  double t_final = 10.0;
  /// One state vector per agent; empty means all zeros.
  std::vector<Vec> initial_states;
  /// Input history on [-delay, 0] per agent; empty entries mean zero.
  std::vector<TimeFunction> initial_histories;
  int record_stride = 1;
  double tol = 1e-3;
  double blowup_threshold = 1e12;

  /// Number of integration steps, floor(t_final / dt).
  long steps() const;
  /// Number of recorded samples, floor(steps / stride) + 1.
  long samples() const;
};

/// Samples of one agent's delayed input on the uniform grid k dt. Reads
/// before t = 0 come from the initial history; reads in between grid points
/// are linearly interpolated.
class InputHistory {
 public:
  InputHistory(double dt, double delay, int dim, TimeFunction initial);

  /// Appends u(k dt) for the next k.
  void push(const Vec& u);
  /// Throws HistoryUnderflow when t lies outside the retained window.
  Vec at(double t) const;
  long latest_index() const { return first_index_ + static_cast<long>(samples_.size()) - 1; }

 private:
  const Vec& sample(long k) const;

  double dt_;
  int dim_;
  std::size_t capacity_;
  TimeFunction initial_;
  std::deque<Vec> samples_;
  long first_index_ = 0;
};

/// Fixed-step RK4 integration of the closed loop. Delayed agents read their
/// inputs from per-agent histories at every stage time.
class Stepper {
 public:
  Stepper(const Network& network, const SimConfig& config);

  void step();

  double time() const { return static_cast<double>(step_count_) * dt_; }
  long step_count() const { return step_count_; }
  const Vec& state() const { return state_; }
  Eigen::MatrixXd outputs() const { return network_->outputs(state_); }
  /// Protocol output at the current time (undelayed).
  const Eigen::MatrixXd& inputs() const { return current_inputs_; }

 private:
  Vec derivative(double t, const Vec& x) const;

  const Network* network_;
  double dt_;
  long step_count_ = 0;
  Vec state_;
  Eigen::MatrixXd current_inputs_;
  std::vector<std::optional<InputHistory>> histories_;
};

struct SyncMetrics {
  /// max over the last 10% of the horizon of max_{i<j} |y_i - y_j|.
  double pairwise_sup_tail = 0.0;
  /// Trapezoidal integral of |y_i - y_j|^2; symmetric, zero diagonal.
  Eigen::MatrixXd l2_pairwise;
  /// Trapezoidal integral of |y_i - y_bar|^2, when a reference exists.
  std::optional<Vec> l2_reference;
  /// max over the last 10% of the horizon of max_i |y_i - y_bar|.
  std::optional<double> reference_sup_tail;
  bool synchronized = false;
};

enum class SimStatus { completed, diverged };

struct SimResult {
  std::vector<double> times;
  /// Per agent: one row per sample, one column per output dimension.
  std::vector<Eigen::MatrixXd> y;
  std::vector<Eigen::MatrixXd> u;
  SimStatus status = SimStatus::completed;
  double diverged_at = 0.0;
  SyncMetrics metrics;
};

/// Throws EmptyTrajectory for zero samples.
SyncMetrics sync_metrics(const std::vector<double>& times, const std::vector<Eigen::MatrixXd>& y,
                         const std::optional<TimeFunction>& y_bar, double tol);

/// Runs the network over [0, t_final]. Divergence (|state| > threshold or
/// non-finite) stops the run and is reported in the status, with the
/// trajectory recorded up to that point and synchronized = false.
SimResult simulate(const Network& network, const SimConfig& config);

struct SimJob {
  Network network;
  SimConfig config;
};

/// Independent runs; result i belongs to job i.
std::vector<SimResult> simulate_batch_serial(std::span<const SimJob> jobs);
/// OpenMP version of simulate_batch_serial with identical results.
std::vector<SimResult> simulate_batch(std::span<const SimJob> jobs);

}  // namespace ifpsync::netsim
