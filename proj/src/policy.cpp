#include "decrelax/policy.hpp"

#include <sstream>

namespace decrelax {

Eigen::VectorXd SparsityPattern::pack(const Eigen::MatrixXd& Q) const {
  if (Q.rows() != Nu || Q.cols() != Ny) throw DimensionError("SparsityPattern::pack: Q shape mismatch");
  Eigen::VectorXd v(n_free());
  for (int a = 0; a < n_free(); ++a) v[a] = Q(free_entries[a].first, free_entries[a].second);
  return v;
}

Eigen::MatrixXd SparsityPattern::unpack(const Eigen::VectorXd& v) const {
  if (v.size() != n_free()) throw DimensionError("SparsityPattern::unpack: packed length mismatch");
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(Nu, Ny);
  for (int a = 0; a < n_free(); ++a) Q(free_entries[a].first, free_entries[a].second) = v[a];
  return Q;
}

double SparsityPattern::off_pattern_magnitude(const Eigen::MatrixXd& Q) const {
  if (Q.rows() != Nu || Q.cols() != Ny) throw DimensionError("off_pattern_magnitude: Q shape mismatch");
  double worst = 0.0;
  for (int r = 0; r < Nu; ++r)
    for (int c = 0; c < Ny; ++c)
      if (!is_free(r, c)) worst = std::max(worst, std::abs(Q(r, c)));
  return worst;
}

SparsityPattern sparsity_pattern(const LtvSystem& sys, const InfoGraph& g) {
  sys.validate();
  if (g.size() != sys.N) throw DimensionError("sparsity_pattern: graph size differs from sys.N");
  const int T = sys.T, nu = sys.nu(), ny = sys.ny();
  SparsityPattern p;
  p.Nu = nu * T;
  p.Ny = 1 + ny * T;
  p.mask.assign(static_cast<size_t>(p.Nu) * p.Ny, 0);
  p.index = Eigen::MatrixXi::Constant(p.Nu, p.Ny, -1);

  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < sys.N; ++i) {
      const int r0 = t * nu + sys.u_offset(i);
      for (int ri = 0; ri < sys.nu_sub[i]; ++ri) {
        const int r = r0 + ri;
        p.mask[static_cast<size_t>(r) * p.Ny + 0] = 1;  // affine offset
        for (int s = 0; s <= t; ++s) {
          for (int j = 0; j < sys.N; ++j) {
            if (!g.has_edge(j, i)) continue;
            const int c0 = 1 + s * ny + sys.y_offset(j);
            for (int cj = 0; cj < sys.ny_sub[j]; ++cj) {
              p.mask[static_cast<size_t>(r) * p.Ny + (c0 + cj)] = 1;
            }
          }
        }
      }
    }
  }
  for (int r = 0; r < p.Nu; ++r) {
    for (int c = 0; c < p.Ny; ++c) {
      if (p.mask[static_cast<size_t>(r) * p.Ny + c]) {
        p.index(r, c) = static_cast<int>(p.free_entries.size());
        p.free_entries.emplace_back(r, c);
      }
    }
  }
  return p;
}

namespace {

// Solves X S = R for X with S unit lower triangular (elementwise, which the
// time-block ordering guarantees for S = I +/- CB * gain).
Eigen::MatrixXd right_divide_unit_lower(const Eigen::MatrixXd& R, const Eigen::MatrixXd& S) {
  Eigen::MatrixXd St = S.transpose();
  Eigen::MatrixXd Xt = St.triangularView<Eigen::UnitUpper>().solve(R.transpose());
  return Xt.transpose();
}

void check_gain_shape(const Eigen::MatrixXd& gain, const StackedSystem& stk, const char* who) {
  if (gain.rows() != stk.Nu || gain.cols() != stk.Ny) {
    std::ostringstream os;
    os << who << ": gain is " << gain.rows() << "x" << gain.cols() << ", expected " << stk.Nu
       << "x" << stk.Ny;
    throw DimensionError(os.str());
  }
}

}  // namespace

Eigen::MatrixXd youla_to_feedback(const Eigen::MatrixXd& Q, const StackedSystem& stk) {
  check_gain_shape(Q, stk, "youla_to_feedback");
  const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(stk.Ny, stk.Ny) + stk.CB * Q;
  return right_divide_unit_lower(Q, S);
}

Eigen::MatrixXd feedback_to_youla(const Eigen::MatrixXd& K, const StackedSystem& stk) {
  check_gain_shape(K, stk, "feedback_to_youla");
  const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(stk.Ny, stk.Ny) - stk.CB * K;
  return right_divide_unit_lower(K, S);
}

}  // namespace decrelax
