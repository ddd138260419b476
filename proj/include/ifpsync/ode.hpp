#pragma once

#include <Eigen/Dense>

namespace ifpsync {

/// One classical fourth-order Runge-Kutta step of x' = f(t, x).
template <typename Rhs>
Eigen::VectorXd rk4_step(Rhs&& f, double t, const Eigen::VectorXd& x, double dt) {
  const double half = 0.5 * dt;
  const Eigen::VectorXd k1 = f(t, x);
  const Eigen::VectorXd k2 = f(t + half, Eigen::VectorXd(x + half * k1));
  const Eigen::VectorXd k3 = f(t + half, Eigen::VectorXd(x + half * k2));
  const Eigen::VectorXd k4 = f(t + dt, Eigen::VectorXd(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace ifpsync
