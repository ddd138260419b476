#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "ifpsync/graphnet.hpp"

// Randomized property suites over the certificate identities.
namespace ifpsync::selftest {

/// Strongly connected digraph on n nodes: a random-weight directed ring plus
/// extra arcs with probability 0.4, weights in [0.1, 2].
graphnet::Digraph random_strong_digraph(int n, std::mt19937_64& rng);

/// Indices alpha_j in [0, 0.99 / (2 d_j^+)), so the weak-coupling slack is positive.
Eigen::VectorXd random_weak_alphas(const graphnet::Digraph& g, std::mt19937_64& rng);

struct Report {
  int graph_instances = 0;
  int shift_instances = 0;
  double worst_identity_residual = 0.0;   // must stay below 1e-10
  double worst_inequality_margin = 0.0;   // must stay above -1e-10
  double worst_shift_residual = 0.0;      // must stay below 1e-12
  bool passes = false;
};

/// graph_count instances with n <= 6 nodes and m <= 3 output dimensions, and
/// shift_count instances of the loop-transformation identity.
Report run(std::uint64_t seed, int graph_count = 200, int shift_count = 100);

}  // namespace ifpsync::selftest
