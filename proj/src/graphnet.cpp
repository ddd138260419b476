#include "ifpsync/graphnet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "ifpsync/error.hpp"

namespace ifpsync::graphnet {

namespace {

// Successors of node k are the nodes j that listen to k (a(j, k) > 0).
std::vector<std::vector<int>> successor_lists(const Digraph& g) {
  const int n = g.size();
  std::vector<std::vector<int>> succ(n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      if (j != k && g.has_arc(j, k)) succ[k].push_back(j);
  return succ;
}

int count_sccs(const std::vector<std::vector<int>>& succ) {
  // Tarjan's algorithm.
  const int n = static_cast<int>(succ.size());
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int counter = 0;
  int components = 0;

  std::function<void(int)> visit = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w : succ[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      int w = -1;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
      } while (w != v);
      ++components;
    }
  };

  for (int v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  return components;
}

int reachable_count(const std::vector<std::vector<int>>& succ, int root) {
  std::vector<bool> seen(succ.size(), false);
  std::vector<int> frontier{root};
  seen[root] = true;
  int count = 1;
  while (!frontier.empty()) {
    const int v = frontier.back();
    frontier.pop_back();
    for (int w : succ[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        frontier.push_back(w);
      }
    }
  }
  return count;
}

}  // namespace

Digraph Digraph::from_adjacency(Eigen::MatrixXd adjacency) {
  if (adjacency.rows() != adjacency.cols())
    throw Error(ErrorCode::NotSquare, "adjacency is " + std::to_string(adjacency.rows()) + "x" +
                                          std::to_string(adjacency.cols()));
  if (adjacency.rows() == 0) throw Error(ErrorCode::InvalidArgument, "empty adjacency matrix");
  const auto n = adjacency.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double a = adjacency(j, k);
      if (!std::isfinite(a))
        throw Error(ErrorCode::InvalidArgument, "non-finite weight at (" + std::to_string(j) + "," +
                                                    std::to_string(k) + ")");
      if (a < 0.0)
        throw Error(ErrorCode::NegativeWeight, "a(" + std::to_string(j) + "," +
                                                   std::to_string(k) + ") = " + std::to_string(a));
    }
    if (adjacency(j, j) != 0.0)
      throw Error(ErrorCode::SelfLoop, "node " + std::to_string(j) + " has a self-loop");
  }
  return Digraph(std::move(adjacency));
}

Degrees degrees(const Digraph& g) {
  return {g.adjacency().rowwise().sum(), g.adjacency().colwise().sum().transpose()};
}

ConnectivityReport connectivity(const Digraph& g) {
  const auto succ = successor_lists(g);
  ConnectivityReport report;
  report.scc_count = count_sccs(succ);
  report.strongly_connected = report.scc_count == 1;
  for (int root = 0; root < g.size() && !report.quasi_strongly_connected; ++root)
    report.quasi_strongly_connected = reachable_count(succ, root) == g.size();
  return report;
}

Eigen::MatrixXd laplacian(const Digraph& g) {
  Eigen::MatrixXd lap = -g.adjacency();
  lap.diagonal() = g.adjacency().rowwise().sum();
  return lap;
}

Eigen::VectorXd perron_weights(const Digraph& g) {
  if (!connectivity(g).strongly_connected)
    throw Error(ErrorCode::NotStronglyConnected, "Perron weights need a strongly connected graph");
  const int n = g.size();
  if (n == 1) return Eigen::VectorXd::Ones(1);

  const Eigen::MatrixXd lt = laplacian(g).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(lt, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();  // descending
  const double smallest = sigma(n - 1);
  if (smallest > 1e-9 * sigma(0))
    throw Error(ErrorCode::InvalidArgument, "Laplacian has no numerical null vector");
  Eigen::VectorXd p = svd.matrixV().col(n - 1);
  p /= p.sum();
  return p;
}

Digraph all_to_all(int n, double weight) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, weight);
  a.diagonal().setZero();
  return Digraph::from_adjacency(std::move(a));
}

Digraph directed_ring(int n, double weight) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int prev = (i + n - 1) % n;
    if (prev != i) a(i, prev) = weight;
  }
  return Digraph::from_adjacency(std::move(a));
}

Digraph bidirectional_ring(int n, double weight) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int prev = (i + n - 1) % n;
    const int next = (i + 1) % n;
    if (prev != i) a(i, prev) = weight;
    if (next != i) a(i, next) = weight;
  }
  return Digraph::from_adjacency(std::move(a));
}

}  // namespace ifpsync::graphnet
