#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include <nlohmann/json_fwd.hpp>

#include "decrelax/common.hpp"

namespace decrelax {

enum class ConeType { Nonneg, Soc };

// Affine cone membership: D x + d in K, where K is the nonnegative orthant
// (rowwise) or the second-order cone with the first row as scalar part.
struct ConeBlock {
  ConeType type = ConeType::Nonneg;
  Eigen::MatrixXd D;
  Eigen::VectorXd d;
  int rows() const { return static_cast<int>(D.rows()); }
};

// Solver-agnostic program
//
//   minimize    x^T P x + q^T x + c
//   subject to  A x = b
//               D_j x + d_j in K_j       (nonneg or SOC blocks)
//
// P is validated symmetric PSD (eigenvalues >= -1e-9 relative, then the
// symmetric part with negatives clamped is stored). Immutable once built;
// concurrent solves on distinct programs are safe.
class ConicProgram {
 public:
  explicit ConicProgram(int n_vars);

  void set_objective(const Eigen::MatrixXd& P, const Eigen::VectorXd& q, double constant);
  void add_equality(const Eigen::RowVectorXd& row, double rhs);
  void add_equality_block(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs);
  void add_nonneg(const Eigen::MatrixXd& D, const Eigen::VectorXd& d);
  void add_soc(const Eigen::MatrixXd& D, const Eigen::VectorXd& d);

  int n_vars() const { return n_vars_; }
  int n_equalities() const { return static_cast<int>(A_.rows()); }
  const Eigen::MatrixXd& quadratic() const { return P_; }
  const Eigen::VectorXd& linear() const { return q_; }
  double constant() const { return c_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  const std::vector<ConeBlock>& cones() const { return cones_; }

  double objective_at(const Eigen::VectorXd& x) const;

  nlohmann::json to_json() const;

 private:
  void check_cols(const Eigen::MatrixXd& m, const char* who) const;

  int n_vars_;
  Eigen::MatrixXd P_;
  Eigen::VectorXd q_;
  double c_ = 0.0;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  std::vector<ConeBlock> cones_;
};

// Independent residual recomputation straight from the IR data.
struct ValidationReport {
  double eq_violation = 0.0;   // max |A x - b|
  double cone_margin = 0.0;    // min over blocks (min entry / SOC margin); >= 0 feasible
  double objective = 0.0;
};

ValidationReport validate(const ConicProgram& p, const Eigen::VectorXd& x);

// Documented fallback: replace the quadratic objective by a linear epigraph
// variable tau (appended last) with the SOC constraint
// (tau + 1, 2 F x, tau - 1) in K2 where F^T F = P. Programs with a zero
// quadratic are returned unchanged. Optimal values coincide; the original
// variables are the prefix of the transformed primal.
ConicProgram to_epigraph_form(const ConicProgram& p);

}  // namespace decrelax
