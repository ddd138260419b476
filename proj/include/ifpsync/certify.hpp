#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ifpsync/graphnet.hpp"

namespace ifpsync::certify {

enum class FailureReason { not_strongly_connected, coupling_too_strong, no_pinned_agent };

std::string_view to_string(FailureReason reason);

/// Outcome of the weak-coupling test. slack[j] > 0 for every node is the
/// coupling part of the condition; passes also requires strong
/// connectivity (and a pinned agent for the reference-tracking variant).
struct WeakCouplingVerdict {
  bool passes = false;
  Eigen::VectorXd slack;
  /// kappa_i = p_i * slack_i, present when the graph is strongly connected.
  std::optional<Eigen::VectorXd> kappa;
  std::vector<FailureReason> reasons;
  std::vector<int> offending;  // nodes with slack <= 0
  /// Reference-tracking variant only: smallest eigenvalue of the quadratic
  /// form that bounds the storage decrease (positive on certified instances).
  std::optional<double> form_min_eigenvalue;
};

/// alpha_j d_j^+ < 1/2 for all j, graph strongly connected.
WeakCouplingVerdict check_theorem1(const graphnet::Digraph& g, const Eigen::VectorXd& alphas);

/// alpha_j (d_j^+ + 2 b_j) < 1/2 for all j, sum b > 0, graph strongly connected.
WeakCouplingVerdict check_theorem2(const graphnet::Digraph& g, const Eigen::VectorXd& alphas,
                                   const Eigen::VectorXd& b);

/// Controller gains of a bidirectional CACC platoon with n followers.
struct CaccGainSet {
  Eigen::VectorXd mu;   // velocity gains
  Eigen::VectorXd eta;  // predecessor spacing gains
  Eigen::VectorXd nu;   // follower spacing gains, length n - 1
  Eigen::VectorXd tau;  // powertrain time constants [s]

  int size() const { return static_cast<int>(mu.size()); }
  /// Throws BadDimensions or InvalidArgument (non-positive gains, n < 2).
  void validate() const;
};

struct CaccVerdict {
  bool passes = false;
  std::vector<bool> per_vehicle;
  Eigen::VectorXd mu_tau;           // mu_i tau_i, must stay below 1/2
  Eigen::VectorXd spacing_margin;   // mu_i^2/2 minus the spacing-gain bound
};

CaccVerdict check_theorem4(const CaccGainSet& gains);

/// Routh test of s^3 + p s^2 + q s + kappa (N - 1), the all-to-all criterion
/// as stated for identical third-order agents.
bool all_to_all_bound(double p, double q, int n_agents, double kappa);

/// The same test using the nonzero Laplacian eigenvalue of the all-to-all
/// graph, N kappa, in place of kappa (N - 1).
bool all_to_all_spectral_bound(double p, double q, int n_agents, double kappa);

/// |sum_i p_i y_i.u_i + 1/2 sum_ij p_i a_ij |y_j - y_i|^2| with u from
/// diffusive coupling, divided by max(1, magnitude of the terms). Rows of y
/// are the agents' outputs. Throws NotStronglyConnected, DimensionMismatch.
double tech_identity_check(const graphnet::Digraph& g, const Eigen::MatrixXd& y);

/// -sum_ij kappa_i a_ij |y_j - y_i|^2 - sum_i p_i (y_i.u_i + alpha_i |u_i|^2),
/// divided by max(1, magnitude of the terms). Non-negative whenever
/// check_theorem1 passes. Throws CertificateFailed if it does not.
double tech_inequality_check(const graphnet::Digraph& g, const Eigen::VectorXd& alphas,
                             const Eigen::MatrixXd& y);

}  // namespace ifpsync::certify
