#pragma once

#include <string>

#include <Eigen/Core>

#include "decrelax/conic.hpp"

namespace decrelax {

enum class SolveStatus { Optimal, Infeasible, Unbounded, Inaccurate, Failed };

const char* status_name(SolveStatus s);

struct SolverOptions {
  double tol_abs = 1e-8;
  double tol_rel = 1e-8;
  int max_newton = 3000;  // total Newton steps across both phases
  double mu = 10.0;       // barrier parameter growth per outer stage
};

struct SolveResult {
  SolveStatus status = SolveStatus::Failed;
  Eigen::VectorXd primal;
  double objective = 0.0;      // always re-evaluated from the primal point
  double eq_residual = 0.0;    // max |A x - b|, recomputed from the IR
  double cone_margin = 0.0;    // min cone margin, recomputed from the IR
  double dual_residual = 0.0;  // stationarity residual from recovered duals
  double gap = 0.0;            // duality gap bound (barrier degree / t)
  int iterations = 0;          // Newton steps
  double wall_time_s = 0.0;
  std::string message;

  bool ok() const { return status == SolveStatus::Optimal; }
};

// Dense primal barrier interior-point solve. Programs without cones reduce
// to one exact KKT solve. With cones: phase 1 finds a strictly feasible
// point (or certifies infeasibility), then log-barrier path following runs
// until the duality-gap bound meets tolerance. Residuals in the result are
// recomputed independently from the IR, never taken from solver internals.
// Deterministic and single-threaded.
SolveResult solve(const ConicProgram& p, const SolverOptions& opt = {});

}  // namespace decrelax
