#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ifpsync/certify.hpp"
#include "ifpsync/netsim.hpp"

namespace ifpsync::scenarios {

using netsim::Vec;

// --- traffic flow with delayed drivers ----------------------------------------

enum class TrafficTopology { classic_chain, unidirectional_ring, bidirectional_ring, custom };

/// Velocity-matching drivers v_i' (t) = u_i(t - delay_i) with
/// u_i = sum_j a_ij (v_j - v_i). Sensitivities in 1/s, delays in s,
/// velocities in m/s.
struct TrafficSpec {
  TrafficTopology preset = TrafficTopology::custom;
  int n = 0;
  Eigen::MatrixXd adjacency;  // followers only; the chain leader is implicit
  Vec delays;
  Vec v_init;
  double v0 = 0.0;  // leader velocity, classic_chain only
  double leader_sensitivity = 0.0;  // vehicle 1's gain on the leader, classic_chain only

  /// n followers on a straight road; vehicle 1 follows a leader at constant v0.
  static TrafficSpec classic_chain(int n, double sensitivity, double delay, Vec v_init, double v0);
  static TrafficSpec ring(bool bidirectional, int n, double sensitivity, Vec delays, Vec v_init);
  static TrafficSpec custom(Eigen::MatrixXd adjacency, Vec delays, Vec v_init);
};

/// Classical straight-road bound 2 delay_i K < 1, written as the per-vehicle
/// slack 1/2 - delay_i K.
struct ChainCertificate {
  bool passes = false;
  Vec slack;
};

struct TrafficBuild {
  netsim::Network network;
  /// Weak-coupling verdict on the network graph. For the chain this graph
  /// contains the leader and is never strongly connected.
  certify::WeakCouplingVerdict theorem1;
  std::optional<ChainCertificate> chain;
  bool certified = false;
  std::vector<Vec> initial_states;
};

TrafficBuild build_traffic(const TrafficSpec& spec);

struct TrafficRun {
  netsim::SimResult sim;
  /// Positions integrated from the recorded velocities (trapezoid), one row
  /// per sample, starting from zero.
  Eigen::MatrixXd positions;
  bool certified = false;
};

/// Uses v_init unless the config provides states.
TrafficRun run_traffic(const TrafficSpec& spec, netsim::SimConfig config);

// --- CACC platoon -----------------------------------------------------------------

struct PlatoonSpec {
  certify::CaccGainSet gains;
  Vec s;          // desired gaps [m]
  double v0 = 20.0;
  Vec q_init;     // follower positions [m]
  Vec v_init;     // [m/s]
  Vec a_init;     // [m/s^2]
  double q0_init = 0.0;

  /// All followers at their goal positions, cruising at v0.
  static PlatoonSpec at_goal(certify::CaccGainSet gains, Vec s, double v0, double q0_init);
  void validate() const;
};

struct PlatoonBuild {
  /// Vehicle3rd agents with outputs y_i = q_i + s_1 + ... + s_i under the
  /// reference-tracking protocol.
  netsim::Network network;
  Vec alphas;  // 1 / mu_i^2
  Vec b;
  certify::WeakCouplingVerdict theorem2;
  certify::CaccVerdict theorem4;
  std::vector<Vec> initial_states;
};

/// Throws MuTauViolation when some mu_i tau_i >= 1/2.
PlatoonBuild build_platoon(const PlatoonSpec& spec);

struct PlatoonRun {
  std::vector<double> times;
  Eigen::MatrixXd q, v, a;           // samples x followers
  Eigen::MatrixXd spacing_errors;    // q_{i-1} - q_i - s_i
  Eigen::MatrixXd velocity_errors;   // v_i - v0
  Vec terminal_spacing_error;
  Vec terminal_velocity_error;
  netsim::SimStatus status = netsim::SimStatus::completed;
};

/// Simulates the vehicles and controllers in physical coordinates.
PlatoonRun run_platoon(const PlatoonSpec& spec, const netsim::SimConfig& config);

/// Same experiment through the transformed agents and protocol.
netsim::SimResult run_platoon_transformed(const PlatoonSpec& spec, netsim::SimConfig config);

/// y_i = q_i + s_1 + ... + s_i for every sample of a physical run.
Eigen::MatrixXd transformed_outputs(const PlatoonSpec& spec, const PlatoonRun& run);

// --- counterexamples ------------------------------------------------------------------

struct HarmonicResult {
  double amplitude_ratio = 0.0;  // |W(i omega2)|
  double simulated_ratio = 0.0;  // tail amplitude of y1 over that of y2
  netsim::SimResult sim;
};

/// Two oscillators with velocity outputs and the single arc 2 -> 1,
/// u1 = k (y2 - y1), u2 = 0, started on the periodic solution with c = 1.
HarmonicResult harmonic_counterexample(double omega1, double omega2, double k,
                                       const netsim::SimConfig& config);

/// Transfer function k s / (s^2 + k s + omega1^2) from xi_2 to xi_1.
passivity::RationalTF harmonic_transfer(double omega1, double k);

struct Remark1Result {
  bool predicted = false;           // certify::all_to_all_bound
  bool predicted_spectral = false;  // certify::all_to_all_spectral_bound
  bool observed = false;
  netsim::SimResult sim;
};

/// Identical agents y''' + p y'' + q y' = u under all-to-all coupling kappa.
/// Initial states default to zeta_i(0) = i with zero derivatives.
Remark1Result remark1_counterexample(double p, double q, int n_agents, double kappa,
                                     netsim::SimConfig config);

netsim::Network remark1_network(double p, double q, int n_agents, double kappa);

}  // namespace ifpsync::scenarios
