#pragma once

#include <vector>

#include <Eigen/Core>

#include "decrelax/common.hpp"
#include "decrelax/ltv_system.hpp"

namespace decrelax {

// Trajectory-level representation of the plant:
//
//   x = B u + G xi,   y = C x + H xi,   P = C G + H,
//
// with the trajectory conventions
//
//   x  = (x(0), ..., x(T))            length Nx  = nx (T+1)
//   u  = (u(0), ..., u(T-1))          length Nu  = nu T
//   xi = (1, xi(0), ..., xi(T-1))     length Nxi = 1 + n_xi T
//   y  = (1, y(0), ..., y(T-1))       length Ny  = 1 + ny T.
//
// The leading 1 in xi and y lets affine policies be written as linear maps;
// the first column of G carries the free response driven by x(0).
// Immutable after construction; safe to share across threads.
struct StackedSystem {
  int N = 0, T = 0;
  int nx = 0, nu = 0, ny = 0, n_xi = 0;  // per-step dims
  std::vector<int> nx_sub, nu_sub, ny_sub;
  int Nx = 0, Nu = 0, Ny = 0, Nxi = 0;  // trajectory dims

  Eigen::MatrixXd B, G, C, H, P, CB;

  // Index maps from (time, subsystem) to row/column start positions.
  int x_row(int t) const { return t * nx; }
  int x_row(int t, int i) const;
  int u_col(int t) const { return t * nu; }
  int u_col(int t, int i) const;
  int y_row(int t) const { return 1 + t * ny; }  // index 0 is the constant entry
  int y_row(int t, int i) const;
  int xi_col(int s) const { return 1 + s * n_xi; }  // col 0 multiplies the constant 1
};

// Builds the stacked matrices. Throws DimensionError (via LtvSystem::validate)
// naming the offending timestep and matrix.
StackedSystem stack_system(const LtvSystem& sys);

// A(t-1) ... A(s) for s < t, identity for s = t. Throws std::out_of_range
// unless 0 <= s <= t <= T.
Eigen::MatrixXd state_transition(const LtvSystem& sys, int s, int t);

// Blocks C(t) A_{s+1}^t B(s) for 0 <= s < t <= T-1 (the input-to-output
// response), shared by the Assumption-1 check and the precedence test.
// factor_scale(t,s) is the max-abs magnitude of the product factors, used to
// scale the nonzero threshold.
struct MarkovBlocks {
  int T = 0;
  // block(t, s): ny x nu, defined for s < t; indexed [t][s].
  std::vector<std::vector<Eigen::MatrixXd>> block;
  std::vector<std::vector<double>> factor_scale;
};

MarkovBlocks markov_blocks(const LtvSystem& sys);

// Nonzero test for a matrix block coming out of a product with factors of
// magnitude factor_scale: max-abs entry > tau_z * (1 + factor_scale).
bool block_is_nonzero(const Eigen::Ref<const Eigen::MatrixXd>& block, double factor_scale,
                      double tau_z = kDefaultTauZ);

// Entry i is true iff some input of subsystem i can causally affect its own
// measured output: exists 0 <= s < t <= T-1 with [C(t) A_{s+1}^t B(s)]_{ii}
// nonzero at tolerance tau_z.
std::vector<bool> check_assumption_1(const LtvSystem& sys, double tau_z = kDefaultTauZ);

}  // namespace decrelax
