#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "decrelax/conic.hpp"
#include "decrelax/disturbance.hpp"
#include "decrelax/info_graph.hpp"
#include "decrelax/policy.hpp"
#include "decrelax/solver.hpp"
#include "decrelax/stacking.hpp"

namespace decrelax {

// Rows of the pathwise trajectory constraints F_x x + F_u u + F_xi xi <= 0
// (the nonnegative slack of the model is kept implicit). m = 0 is allowed.
struct ConstraintData {
  Eigen::MatrixXd F_x, F_u, F_xi;

  int rows() const { return static_cast<int>(F_x.rows()); }
  static ConstraintData empty(const StackedSystem& stk);
  void validate(const StackedSystem& stk) const;
};

// Trajectory-level cost E[x^T R_x x + u^T R_u u]. The factory symmetrizes,
// rejects matrices with eigenvalues below -1e-9 (relative), and clamps
// roundoff negatives to zero.
struct CostData {
  Eigen::MatrixXd R_x, R_u;

  static CostData validated(const Eigen::MatrixXd& R_x, const Eigen::MatrixXd& R_u);
  void check_dims(const StackedSystem& stk) const;
};

// Expected cost of the affine purified-output policy u = Q P xi:
// trace(P^T Q^T R Q P M + 2 G^T R_x B Q P M + G^T R_x G M), R = R_u + B^T R_x B.
double objective_value(const Eigen::MatrixXd& Q, const StackedSystem& stk, const CostData& cost,
                       const Eigen::MatrixXd& M);

// Lower-bound conic program. Variables: packed free entries of Q, then Z
// row-major. Equalities (F_u + F_x B) Q P + F_x G + F_xi + Z = 0 entrywise;
// cones W M z_i in K2 and e1^T M z_i >= 0 per constraint row. The pattern
// must come from a partially nested graph for the bound to be valid
// (enforced by the caller via relax_information).
ConicProgram build_lower_bound(const StackedSystem& stk, const ConstraintData& cons,
                               const CostData& cost, const DisturbanceModel& dist,
                               const SparsityPattern& pat);

// Robust affine-primal restriction: same objective, with each constraint row
// enforced for every xi in the support via conic duality. Variables: packed
// Q, then per-row duals lambda_i in K2 and scalars t_i <= 0, coupled by
// a_i(Q) + W^T lambda_i - t_i e1 = 0.
ConicProgram build_upper_bound(const StackedSystem& stk, const ConstraintData& cons,
                               const CostData& cost, const DisturbanceModel& dist,
                               const SparsityPattern& pat);

struct LowerBoundResult {
  double J_d = 0.0;
  Eigen::MatrixXd Q, Z;
  SolveResult solve;
  bool downgraded = false;  // inaccurate solve: J_d was shifted down by 10x residuals
};

struct UpperBoundResult {
  double J_up = 0.0;
  Eigen::MatrixXd Q, K;
  SolveResult solve;
  bool robust_infeasible = false;  // no affine policy satisfies the constraints robustly
};

LowerBoundResult lower_bound(const StackedSystem& stk, const ConstraintData& cons,
                             const CostData& cost, const DisturbanceModel& dist,
                             const SparsityPattern& pat, const SolverOptions& opt = {});

UpperBoundResult upper_bound(const StackedSystem& stk, const ConstraintData& cons,
                             const CostData& cost, const DisturbanceModel& dist,
                             const SparsityPattern& pat, const SolverOptions& opt = {});

struct CertifyOptions {
  bool run_lower = true;
  bool run_upper = true;
  SolverOptions solver;
  double tau_z = kDefaultTauZ;
  bool force = false;  // tolerate Assumption-1 failures (forced relaxation)
  std::optional<InfoGraph> upper_graph;  // PN subgraph of g for the upper bound
};

struct BoundReport {
  std::optional<double> J_d;
  std::optional<double> J_up;
  std::optional<double> gap_abs, gap_rel;
  std::optional<InfoGraph> relaxed_graph;
  bool original_pn = false;
  std::vector<bool> assumption1;
  bool forced = false;
  Eigen::MatrixXd Q_lower, Z;
  std::optional<LowerBoundResult> lower;
  std::optional<UpperBoundResult> upper;
  Eigen::MatrixXd Q_upper, K_upper;
  std::string upper_note;  // set when the upper bound was skipped or infeasible
};

// Full pipeline: assumption checks, information relaxation, lower bound on
// the relaxed graph, optional robust upper bound on the original graph
// (or opts.upper_graph), gap. Throws AssumptionError unless opts.force.
BoundReport certify(const LtvSystem& sys, const InfoGraph& g, const DisturbanceModel& dist,
                    const ConstraintData& cons, const CostData& cost,
                    const CertifyOptions& opts = {});

}  // namespace decrelax
