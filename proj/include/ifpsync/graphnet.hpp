#pragma once

#include <Eigen/Dense>

namespace ifpsync::graphnet {

/// Arcs with weight at or below this value are treated as absent when
/// deciding connectivity.
inline constexpr double kArcThreshold = 1e-15;

/// Weighted directed graph without self-loops.
///
/// Row j of the adjacency matrix lists the arcs *into* node j: a(j, k) > 0
/// means node j listens to node k.
class Digraph {
 public:
  /// Validates and wraps the matrix. Throws NotSquare, NegativeWeight,
  /// SelfLoop or InvalidArgument (non-finite entry, empty matrix).
  static Digraph from_adjacency(Eigen::MatrixXd adjacency);

  int size() const { return static_cast<int>(adjacency_.rows()); }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  double weight(int j, int k) const { return adjacency_(j, k); }
  bool has_arc(int j, int k) const { return adjacency_(j, k) > kArcThreshold; }

 private:
  explicit Digraph(Eigen::MatrixXd adjacency) : adjacency_(std::move(adjacency)) {}

  Eigen::MatrixXd adjacency_;
};

struct Degrees {
  Eigen::VectorXd plus;   // row sums, d_j^+
  Eigen::VectorXd minus;  // column sums, d_j^-
};

struct ConnectivityReport {
  bool strongly_connected = false;
  bool quasi_strongly_connected = false;
  int scc_count = 0;
};

Degrees degrees(const Digraph& g);

ConnectivityReport connectivity(const Digraph& g);

/// L = diag(d^+) - A. Every row sums to zero.
Eigen::MatrixXd laplacian(const Digraph& g);

/// Positive left null vector of the Laplacian (p^T L = 0), normalized to
/// sum one. Throws NotStronglyConnected when the graph is not strongly
/// connected, since positivity is only guaranteed in that case.
Eigen::VectorXd perron_weights(const Digraph& g);

// Convenience constructors for the topologies used throughout the tests and
// scenarios. Weights are uniform.
Digraph all_to_all(int n, double weight);
Digraph directed_ring(int n, double weight);        // a(i, i-1) = weight
Digraph bidirectional_ring(int n, double weight);   // a(i, i-1) = a(i, i+1) = weight

}  // namespace ifpsync::graphnet
