#include "decrelax/conic.hpp"

#include <sstream>

#include <Eigen/Eigenvalues>

#include <nlohmann/json.hpp>

namespace decrelax {

ConicProgram::ConicProgram(int n_vars) : n_vars_(n_vars) {
  if (n_vars < 1) throw DimensionError("ConicProgram: need at least one variable");
  P_ = Eigen::MatrixXd::Zero(n_vars, n_vars);
  q_ = Eigen::VectorXd::Zero(n_vars);
  A_.resize(0, n_vars);
  b_.resize(0);
}

void ConicProgram::check_cols(const Eigen::MatrixXd& m, const char* who) const {
  if (m.cols() != n_vars_) {
    std::ostringstream os;
    os << who << ": expected " << n_vars_ << " columns, got " << m.cols();
    throw DimensionError(os.str());
  }
}

void ConicProgram::set_objective(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                                 double constant) {
  if (P.rows() != n_vars_ || P.cols() != n_vars_ || q.size() != n_vars_) {
    throw DimensionError("ConicProgram::set_objective: dimension mismatch");
  }
  Eigen::MatrixXd sym = 0.5 * (P + P.transpose());
  if (sym.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const double scale = 1.0 + es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-9 * scale) {
      std::ostringstream os;
      os << "ConicProgram::set_objective: quadratic form is not PSD (min eigenvalue "
         << es.eigenvalues().minCoeff() << ")";
      throw NotPositiveDefiniteError(os.str());
    }
    // Clamp the roundoff-negative part so barrier Hessians stay PSD.
    if (es.eigenvalues().minCoeff() < 0.0) {
      sym = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
            es.eigenvectors().transpose();
      sym = 0.5 * (sym + sym.transpose());
    }
  }
  P_ = sym;
  q_ = q;
  c_ = constant;
}

void ConicProgram::add_equality(const Eigen::RowVectorXd& row, double rhs) {
  add_equality_block(row, Eigen::VectorXd::Constant(1, rhs));
}

void ConicProgram::add_equality_block(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs) {
  check_cols(rows, "ConicProgram::add_equality_block");
  if (rows.rows() != rhs.size()) {
    throw DimensionError("ConicProgram::add_equality_block: rhs length mismatch");
  }
  const Eigen::Index old = A_.rows();
  A_.conservativeResize(old + rows.rows(), Eigen::NoChange);
  A_.bottomRows(rows.rows()) = rows;
  b_.conservativeResize(old + rhs.size());
  b_.tail(rhs.size()) = rhs;
}

void ConicProgram::add_nonneg(const Eigen::MatrixXd& D, const Eigen::VectorXd& d) {
  check_cols(D, "ConicProgram::add_nonneg");
  if (D.rows() != d.size() || D.rows() < 1) {
    throw DimensionError("ConicProgram::add_nonneg: block must have >= 1 row, offsets matching");
  }
  cones_.push_back({ConeType::Nonneg, D, d});
}

void ConicProgram::add_soc(const Eigen::MatrixXd& D, const Eigen::VectorXd& d) {
  check_cols(D, "ConicProgram::add_soc");
  if (D.rows() != d.size() || D.rows() < 1) {
    throw DimensionError("ConicProgram::add_soc: block must have >= 1 row, offsets matching");
  }
  cones_.push_back({ConeType::Soc, D, d});
}

double ConicProgram::objective_at(const Eigen::VectorXd& x) const {
  if (x.size() != n_vars_) throw DimensionError("ConicProgram::objective_at: length mismatch");
  return x.dot(P_ * x) + q_.dot(x) + c_;
}

ValidationReport validate(const ConicProgram& p, const Eigen::VectorXd& x) {
  if (x.size() != p.n_vars()) throw DimensionError("validate: primal length mismatch");
  ValidationReport r;
  r.objective = p.objective_at(x);
  if (p.n_equalities() > 0) {
    r.eq_violation = (p.A() * x - p.b()).cwiseAbs().maxCoeff();
  }
  double margin = std::numeric_limits<double>::infinity();
  for (const ConeBlock& cb : p.cones()) {
    const Eigen::VectorXd res = cb.D * x + cb.d;
    if (cb.type == ConeType::Nonneg) {
      margin = std::min(margin, res.minCoeff());
    } else {
      const double tail = res.size() > 1 ? res.tail(res.size() - 1).norm() : 0.0;
      margin = std::min(margin, res[0] - tail);
    }
  }
  r.cone_margin = p.cones().empty() ? 0.0 : margin;
  return r;
}

ConicProgram to_epigraph_form(const ConicProgram& p) {
  const int n = p.n_vars();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.quadratic());
  const double max_eig = es.eigenvalues().size() > 0 ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
  if (max_eig <= 0.0) return p;  // objective already linear

  // F with F^T F = P from the nonnegligible eigenpairs.
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (es.eigenvalues()[i] > 1e-14 * max_eig) keep.push_back(i);
  }
  Eigen::MatrixXd F(static_cast<int>(keep.size()), n);
  for (size_t r = 0; r < keep.size(); ++r) {
    F.row(static_cast<int>(r)) =
        std::sqrt(es.eigenvalues()[keep[r]]) * es.eigenvectors().col(keep[r]).transpose();
  }

  ConicProgram out(n + 1);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n + 1);
  q.head(n) = p.linear();
  q[n] = 1.0;
  out.set_objective(Eigen::MatrixXd::Zero(n + 1, n + 1), q, p.constant());
  if (p.n_equalities() > 0) {
    Eigen::MatrixXd A(p.n_equalities(), n + 1);
    A.leftCols(n) = p.A();
    A.col(n).setZero();
    out.add_equality_block(A, p.b());
  }
  for (const ConeBlock& cb : p.cones()) {
    Eigen::MatrixXd D(cb.rows(), n + 1);
    D.leftCols(n) = cb.D;
    D.col(n).setZero();
    if (cb.type == ConeType::Nonneg) {
      out.add_nonneg(D, cb.d);
    } else {
      out.add_soc(D, cb.d);
    }
  }
  // x^T P x <= tau  <=>  (tau + 1, 2 F x, tau - 1) in K2.
  const int k = static_cast<int>(F.rows());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(k + 2, n + 1);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(k + 2);
  D(0, n) = 1.0;
  d[0] = 1.0;
  D.block(1, 0, k, n) = 2.0 * F;
  D(k + 1, n) = 1.0;
  d[k + 1] = -1.0;
  out.add_soc(D, d);
  return out;
}

nlohmann::json ConicProgram::to_json() const {
  nlohmann::json j;
  j["n_vars"] = n_vars_;
  j["objective"] = {{"quadratic", nlohmann::json::array()},
                    {"linear", std::vector<double>(q_.data(), q_.data() + q_.size())},
                    {"constant", c_}};
  for (int r = 0; r < P_.rows(); ++r) {
    j["objective"]["quadratic"].push_back(
        std::vector<double>(P_.row(r).data(), P_.row(r).data() + P_.cols()));
  }
  j["equalities"] = nlohmann::json::array();
  for (int r = 0; r < A_.rows(); ++r) {
    std::vector<double> row(A_.cols());
    for (int c = 0; c < A_.cols(); ++c) row[c] = A_(r, c);
    j["equalities"].push_back({{"row", row}, {"rhs", b_[r]}});
  }
  j["cones"] = nlohmann::json::array();
  for (const ConeBlock& cb : cones_) {
    nlohmann::json jc;
    jc["type"] = cb.type == ConeType::Nonneg ? "nonneg" : "soc";
    jc["rows"] = nlohmann::json::array();
    for (int r = 0; r < cb.D.rows(); ++r) {
      std::vector<double> row(cb.D.cols());
      for (int c = 0; c < cb.D.cols(); ++c) row[c] = cb.D(r, c);
      jc["rows"].push_back(row);
    }
    jc["offset"] = std::vector<double>(cb.d.data(), cb.d.data() + cb.d.size());
    j["cones"].push_back(jc);
  }
  return j;
}

}  // namespace decrelax
