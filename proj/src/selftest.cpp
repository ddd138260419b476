#include "ifpsync/selftest.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "ifpsync/certify.hpp"
#include "ifpsync/passivity.hpp"

namespace ifpsync::selftest {

graphnet::Digraph random_strong_digraph(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> weight(0.1, 2.0);
  std::bernoulli_distribution extra(0.4);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n && n > 1; ++k) {
    a(order[static_cast<std::size_t>((k + 1) % n)], order[static_cast<std::size_t>(k)]) = weight(rng);
  }
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (j != k && a(j, k) == 0.0 && extra(rng)) a(j, k) = weight(rng);
  return graphnet::Digraph::from_adjacency(std::move(a));
}

Eigen::VectorXd random_weak_alphas(const graphnet::Digraph& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::VectorXd d = graphnet::degrees(g).plus;
  Eigen::VectorXd alphas(g.size());
  for (int j = 0; j < g.size(); ++j) alphas(j) = unit(rng) * 0.99 / (2.0 * d(j));
  return alphas;
}

Report run(std::uint64_t seed, int graph_count, int shift_count) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nodes(2, 6), dims(1, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Report r;
  r.worst_inequality_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < graph_count; ++k) {
    const int n = nodes(rng), m = dims(rng);
    const auto g = random_strong_digraph(n, rng);
    const Eigen::VectorXd alphas = random_weak_alphas(g, rng);
    Eigen::MatrixXd y(n, m);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < m; ++d) y(i, d) = normal(rng);
    r.worst_identity_residual =
        std::max(r.worst_identity_residual, certify::tech_identity_check(g, y));
    r.worst_inequality_margin =
        std::min(r.worst_inequality_margin, certify::tech_inequality_check(g, alphas, y));
    ++r.graph_instances;
  }
  if (graph_count == 0) r.worst_inequality_margin = 0.0;

  for (int k = 0; k < shift_count; ++k) {
    const int m = dims(rng);
    const double alpha = 2.0 * unit(rng);
    const double b = (0.01 + 0.98 * unit(rng)) / (2.0 * std::max(alpha, 1e-3));
    std::vector<double> y(static_cast<std::size_t>(m)), u(static_cast<std::size_t>(m));
    for (int d = 0; d < m; ++d) {
      y[static_cast<std::size_t>(d)] = normal(rng);
      u[static_cast<std::size_t>(d)] = normal(rng);
    }
    r.worst_shift_residual =
        std::max(r.worst_shift_residual, passivity::ifp_shift_identity_check(alpha, b, y, u));
    ++r.shift_instances;
  }
  r.passes = r.worst_identity_residual < 1e-10 && r.worst_inequality_margin >= -1e-10 &&
             r.worst_shift_residual < 1e-12;
  return r;
}

}  // namespace ifpsync::selftest
