#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "decrelax/bounds.hpp"
#include "decrelax/disturbance.hpp"
#include "decrelax/ltv_system.hpp"
#include "decrelax/stacking.hpp"

namespace decrelax {

// One closed-loop rollout of the per-timestep recursion under an affine
// output-feedback gain K (u(t) = K rows applied to the realized prefix
// (1, y(0..t))). Independent of the stacked matrices.
struct Trajectory {
  Eigen::VectorXd x;   // (x(0), ..., x(T))
  Eigen::VectorXd u;   // (u(0), ..., u(T-1))
  Eigen::VectorXd y;   // (1, y(0), ..., y(T-1))
  Eigen::VectorXd xi;  // (1, xi(0), ..., xi(T-1))
};

Trajectory rollout(const LtvSystem& sys, const Eigen::MatrixXd& K, const Eigen::VectorXd& xi);

struct SimulationResult {
  long samples = 0;
  double mean_cost = 0.0;
  double std_error = 0.0;     // sample std / sqrt(n)
  double max_violation = 0.0; // max over samples and rows of F_x x + F_u u + F_xi xi
  Eigen::VectorXd violation_frequency;  // per row, fraction of samples above tolerance
  double moment_residual = 0.0;         // max |empirical E[xi xi^T] - M|
  double violation_tolerance = 1e-9;
};

// Monte Carlo estimate of the closed-loop expected cost and constraint
// satisfaction under gain K. Deterministic given the seed; cost sums use
// compensated accumulation. Pass the same seed across policies for common
// random numbers. A non-null trace receives one CSV row per sample
// (sample, cost, max_violation) up to trace_rows.
SimulationResult simulate(const LtvSystem& sys, const Eigen::MatrixXd& K, const CostData& cost,
                          const ConstraintData& cons, const DisturbanceModel& dist, long n,
                          std::uint64_t seed, double violation_tol = 1e-9,
                          std::ostream* trace = nullptr, long trace_rows = 1000);

// Max over n samples of ||u_feedback - Q P xi||_inf, where u_feedback comes
// from the per-timestep rollout under K. Near zero when K = youla_to_feedback(Q).
double check_policy_equivalence(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K,
                                const LtvSystem& sys, const StackedSystem& stk,
                                const DisturbanceModel& dist, long n, std::uint64_t seed);

}  // namespace decrelax
