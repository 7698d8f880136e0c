#pragma once

#include <vector>

#include <Eigen/Core>

#include "decrelax/common.hpp"

namespace decrelax {

// Discrete-time LTV plant partitioned into N subsystems:
//
//   x(t+1) = A(t) x(t) + B(t) u(t) + G(t) xi(t)
//   y(t)   = C(t) x(t) + H(t) xi(t),        t = 0 .. T-1,
//
// with fixed, known x(0). Rows/columns of the per-step matrices are grouped
// by subsystem in index order; the per-subsystem dimensions are constant
// over time. Immutable after construction by convention: nothing in the
// library mutates a system it is handed.
struct LtvSystem {
  int N = 0;  // subsystem count
  int T = 0;  // horizon (timesteps 0..T-1)
  std::vector<int> nx_sub, nu_sub, ny_sub;
  int n_xi = 0;  // disturbance dimension per step
  Eigen::VectorXd x0;
  std::vector<Eigen::MatrixXd> A, B, G, C, H;  // one entry per timestep

  int nx() const;
  int nu() const;
  int ny() const;

  // Start of subsystem i's block inside a per-step state/input/output vector.
  int x_offset(int i) const;
  int u_offset(int i) const;
  int y_offset(int i) const;

  // Throws DimensionError naming the offending timestep and matrix.
  void validate() const;
};

}  // namespace decrelax
