#include "ifpsync/certify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ifpsync/error.hpp"
#include "ifpsync/passivity.hpp"

namespace ifpsync::certify {

namespace {

void require_length(const Eigen::VectorXd& v, int n, const char* name) {
  if (v.size() != n)
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " has length " +
                                                  std::to_string(v.size()) + ", expected " +
                                                  std::to_string(n));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v(i) >= 0.0) || !std::isfinite(v(i)))
      throw Error(ErrorCode::InvalidArgument,
                  std::string(name) + "[" + std::to_string(i) + "] must be finite and >= 0");
}

WeakCouplingVerdict verdict_from_slack(const graphnet::Digraph& g, Eigen::VectorXd slack) {
  WeakCouplingVerdict v;
  v.slack = std::move(slack);
  for (Eigen::Index j = 0; j < v.slack.size(); ++j)
    if (!(v.slack(j) > 0.0)) v.offending.push_back(static_cast<int>(j));
  if (!v.offending.empty()) v.reasons.push_back(FailureReason::coupling_too_strong);
  if (graphnet::connectivity(g).strongly_connected) {
    v.kappa = graphnet::perron_weights(g).cwiseProduct(v.slack);
  } else {
    v.reasons.push_back(FailureReason::not_strongly_connected);
  }
  v.passes = v.reasons.empty();
  return v;
}

// Matrix of sum_ij c_i a_ij |y_j - y_i|^2 for scalar y.
Eigen::MatrixXd weighted_difference_form(const Eigen::MatrixXd& a, const Eigen::VectorXd& c) {
  const auto n = a.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = c(i) * a(i, j);
      if (w == 0.0) continue;
      m(i, i) += w;
      m(j, j) += w;
      m(i, j) -= w;
      m(j, i) -= w;
    }
  }
  return m;
}

Eigen::MatrixXd couple(const graphnet::Digraph& g, const Eigen::MatrixXd& y) {
  if (y.rows() != g.size())
    throw Error(ErrorCode::DimensionMismatch, "y has " + std::to_string(y.rows()) +
                                                  " rows for a graph of " +
                                                  std::to_string(g.size()) + " nodes");
  return -graphnet::laplacian(g) * y;
}

}  // namespace

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::not_strongly_connected: return "not_strongly_connected";
    case FailureReason::coupling_too_strong: return "coupling_too_strong";
    case FailureReason::no_pinned_agent: return "no_pinned_agent";
  }
  return "unknown";
}

WeakCouplingVerdict check_theorem1(const graphnet::Digraph& g, const Eigen::VectorXd& alphas) {
  require_length(alphas, g.size(), "alphas");
  const auto deg = graphnet::degrees(g);
  Eigen::VectorXd slack = 0.5 - alphas.cwiseProduct(deg.plus).array();
  return verdict_from_slack(g, std::move(slack));
}

WeakCouplingVerdict check_theorem2(const graphnet::Digraph& g, const Eigen::VectorXd& alphas,
                                   const Eigen::VectorXd& b) {
  require_length(alphas, g.size(), "alphas");
  require_length(b, g.size(), "b");
  const auto deg = graphnet::degrees(g);
  Eigen::VectorXd slack = 0.5 - alphas.cwiseProduct(deg.plus + 2.0 * b).array();
  auto v = verdict_from_slack(g, std::move(slack));
  if (!(b.sum() > 0.0)) {
    v.reasons.push_back(FailureReason::no_pinned_agent);
    v.passes = false;
  }

  // Storage-decrease form of the shifted network: kappa_hat-weighted
  // disagreement plus the pinning terms p_i gamma_i |y_i|^2.
  const bool shift_valid = ((2.0 * alphas.cwiseProduct(b)).array() < 1.0).all();
  if (v.kappa && shift_valid) {
    const Eigen::VectorXd p = graphnet::perron_weights(g);
    Eigen::VectorXd kappa_hat(g.size()), pin(g.size());
    for (int i = 0; i < g.size(); ++i) {
      const double shrink = 1.0 - 2.0 * alphas(i) * b(i);
      const double alpha_hat = alphas(i) / shrink;
      const double gamma = b(i) * (1.0 - alphas(i) * b(i)) / shrink;
      kappa_hat(i) = p(i) * (0.5 - deg.plus(i) * alpha_hat);
      pin(i) = p(i) * gamma;
    }
    Eigen::MatrixXd form = weighted_difference_form(g.adjacency(), kappa_hat);
    form.diagonal() += pin;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(form, Eigen::EigenvaluesOnly);
    v.form_min_eigenvalue = eig.eigenvalues()(0);
  }
  return v;
}

void CaccGainSet::validate() const {
  const auto n = mu.size();
  if (n < 2) throw Error(ErrorCode::BadDimensions, "platoon needs at least 2 followers");
  if (eta.size() != n || tau.size() != n)
    throw Error(ErrorCode::BadDimensions, "mu, eta and tau must have equal length");
  if (nu.size() != n - 1)
    throw Error(ErrorCode::BadDimensions,
                "nu has length " + std::to_string(nu.size()) + ", expected " + std::to_string(n - 1));
  auto positive = [](const Eigen::VectorXd& v) {
    return v.allFinite() && (v.array() > 0.0).all();
  };
  if (!positive(mu) || !positive(eta) || !positive(nu) || !positive(tau))
    throw Error(ErrorCode::InvalidArgument, "all platoon gains must be strictly positive");
}

CaccVerdict check_theorem4(const CaccGainSet& gains) {
  gains.validate();
  const int n = gains.size();
  CaccVerdict v;
  v.per_vehicle.resize(n);
  v.mu_tau = gains.mu.cwiseProduct(gains.tau);
  v.spacing_margin.resize(n);
  for (int i = 0; i < n; ++i) {
    double bound = 0.0;
    if (i == 0) {
      bound = 2.0 * gains.eta(0) + gains.nu(0);
    } else if (i == n - 1) {
      bound = gains.eta(i);
    } else {
      bound = gains.eta(i) + gains.nu(i);
    }
    v.spacing_margin(i) = 0.5 * gains.mu(i) * gains.mu(i) - bound;
    v.per_vehicle[i] = v.mu_tau(i) < 0.5 && v.spacing_margin(i) > 0.0;
  }
  v.passes = std::all_of(v.per_vehicle.begin(), v.per_vehicle.end(), [](bool b) { return b; });
  return v;
}

bool all_to_all_bound(double p, double q, int n_agents, double kappa) {
  if (!(p > 0.0) || !(q > 0.0) || !(kappa > 0.0) || n_agents < 2)
    throw Error(ErrorCode::InvalidArgument, "all-to-all bound needs p, q, kappa > 0 and N >= 2");
  return passivity::routh_hurwitz({kappa * (n_agents - 1), q, p, 1.0});
}

bool all_to_all_spectral_bound(double p, double q, int n_agents, double kappa) {
  if (!(p > 0.0) || !(q > 0.0) || !(kappa > 0.0) || n_agents < 2)
    throw Error(ErrorCode::InvalidArgument, "all-to-all bound needs p, q, kappa > 0 and N >= 2");
  return passivity::routh_hurwitz({kappa * n_agents, q, p, 1.0});
}

double tech_identity_check(const graphnet::Digraph& g, const Eigen::MatrixXd& y) {
  const Eigen::VectorXd p = graphnet::perron_weights(g);
  const Eigen::MatrixXd u = couple(g, y);
  double lhs = 0.0, lhs_scale = 0.0, rhs = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double term = p(i) * y.row(i).dot(u.row(i));
    lhs += term;
    lhs_scale += std::abs(term);
    for (int j = 0; j < g.size(); ++j)
      rhs -= 0.5 * p(i) * g.weight(i, j) * (y.row(j) - y.row(i)).squaredNorm();
  }
  return std::abs(lhs - rhs) / std::max({1.0, lhs_scale, std::abs(rhs)});
}

double tech_inequality_check(const graphnet::Digraph& g, const Eigen::VectorXd& alphas,
                             const Eigen::MatrixXd& y) {
  const auto verdict = check_theorem1(g, alphas);
  if (!verdict.passes)
    throw Error(ErrorCode::CertificateFailed, "weak-coupling condition does not hold");
  const Eigen::VectorXd p = graphnet::perron_weights(g);
  const Eigen::VectorXd& kappa = *verdict.kappa;
  const Eigen::MatrixXd u = couple(g, y);
  double lhs = 0.0, rhs = 0.0, scale = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double yu = p(i) * y.row(i).dot(u.row(i));
    const double uu = p(i) * alphas(i) * u.row(i).squaredNorm();
    lhs += yu + uu;
    scale += std::abs(yu) + uu;
    for (int j = 0; j < g.size(); ++j)
      rhs -= kappa(i) * g.weight(i, j) * (y.row(j) - y.row(i)).squaredNorm();
  }
  return (rhs - lhs) / std::max({1.0, scale, std::abs(rhs)});
}

}  // namespace ifpsync::certify
