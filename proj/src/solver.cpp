#include "decrelax/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace decrelax {

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::Inaccurate: return "inaccurate";
    case SolveStatus::Failed: return "failed";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Barrier subproblem data: minimize x^T P x + q^T x subject to A x = b and
// strict cone feasibility. P/q here may belong to a phase-1 surrogate, not
// the user's objective.
struct BarrierProblem {
  const Eigen::MatrixXd* P = nullptr;  // may be null for a zero quadratic
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<ConeBlock> cones;

  int n() const { return static_cast<int>(q.size()); }
  int p() const { return static_cast<int>(A.rows()); }

  double f(const Eigen::VectorXd& x) const {
    double v = q.dot(x);
    if (P) v += x.dot((*P) * x);
    return v;
  }
  Eigen::VectorXd grad_f(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = q;
    if (P) g += 2.0 * ((*P) * x);
    return g;
  }
};

double barrier_degree(const std::vector<ConeBlock>& cones) {
  double nu = 0.0;
  for (const ConeBlock& cb : cones) nu += cb.type == ConeType::Nonneg ? cb.rows() : 2.0;
  return nu;
}

double min_cone_margin(const std::vector<ConeBlock>& cones, const Eigen::VectorXd& x) {
  double m = kInf;
  for (const ConeBlock& cb : cones) {
    const Eigen::VectorXd r = cb.D * x + cb.d;
    if (cb.type == ConeType::Nonneg) {
      m = std::min(m, r.minCoeff());
    } else {
      const double tail = r.size() > 1 ? r.tail(r.size() - 1).norm() : 0.0;
      m = std::min(m, r[0] - tail);
    }
  }
  return m;
}

// +inf outside the strict interior.
double barrier_value(const std::vector<ConeBlock>& cones, const Eigen::VectorXd& x) {
  double phi = 0.0;
  for (const ConeBlock& cb : cones) {
    const Eigen::VectorXd r = cb.D * x + cb.d;
    if (cb.type == ConeType::Nonneg) {
      if (r.minCoeff() <= 0.0) return kInf;
      phi -= r.array().log().sum();
    } else {
      const double tail2 = r.size() > 1 ? r.tail(r.size() - 1).squaredNorm() : 0.0;
      const double u = r[0] * r[0] - tail2;
      if (r[0] <= 0.0 || u <= 0.0) return kInf;
      phi -= std::log(u);
    }
  }
  return phi;
}

void add_barrier_grad_hess(const std::vector<ConeBlock>& cones, const Eigen::VectorXd& x,
                           Eigen::VectorXd& g, Eigen::MatrixXd& H) {
  for (const ConeBlock& cb : cones) {
    const Eigen::VectorXd r = cb.D * x + cb.d;
    if (cb.type == ConeType::Nonneg) {
      const Eigen::ArrayXd w = 1.0 / r.array();
      g -= cb.D.transpose() * w.matrix();
      H.noalias() += cb.D.transpose() * (w * w).matrix().asDiagonal() * cb.D;
    } else {
      const int k = cb.rows();
      Eigen::VectorXd jr = r;  // J r with J = diag(1, -1, ..., -1)
      if (k > 1) jr.tail(k - 1) = -r.tail(k - 1);
      const double u = r.dot(jr);
      // grad = -(2/u) J r; hess = (4 (Jr)(Jr)^T - 2 u J) / u^2
      g -= cb.D.transpose() * ((2.0 / u) * jr);
      const Eigen::VectorXd v = cb.D.transpose() * jr;
      H.noalias() += (4.0 / (u * u)) * (v * v.transpose());
      const Eigen::MatrixXd d0 = cb.D.row(0);
      H.noalias() -= (2.0 / u) * (d0.transpose() * d0);
      if (k > 1) {
        const auto dt = cb.D.bottomRows(k - 1);
        H.noalias() += (2.0 / u) * (dt.transpose() * dt);
      }
    }
  }
}

// Largest step keeping every block strictly interior.
double max_feasible_step(const std::vector<ConeBlock>& cones, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& dx) {
  double amax = kInf;
  for (const ConeBlock& cb : cones) {
    const Eigen::VectorXd r = cb.D * x + cb.d;
    const Eigen::VectorXd s = cb.D * dx;
    if (cb.type == ConeType::Nonneg) {
      for (int i = 0; i < r.size(); ++i) {
        if (s[i] < 0.0) amax = std::min(amax, r[i] / (-s[i]));
      }
    } else {
      const int k = cb.rows();
      if (s[0] < 0.0) amax = std::min(amax, r[0] / (-s[0]));
      const double rt2 = k > 1 ? r.tail(k - 1).squaredNorm() : 0.0;
      const double st2 = k > 1 ? s.tail(k - 1).squaredNorm() : 0.0;
      const double rs = k > 1 ? r.tail(k - 1).dot(s.tail(k - 1)) : 0.0;
      const double qa = s[0] * s[0] - st2;
      const double qb = 2.0 * (r[0] * s[0] - rs);
      const double qc = r[0] * r[0] - rt2;  // > 0 strictly inside
      // smallest positive root of qa a^2 + qb a + qc = 0
      const double scale = std::max({std::abs(qa), std::abs(qb), std::abs(qc)});
      if (scale <= 0.0) continue;
      if (std::abs(qa) <= 1e-14 * scale) {
        if (qb < 0.0) amax = std::min(amax, qc / (-qb));
        continue;
      }
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc < 0.0) continue;  // only possible with qa > 0: never exits
      const double sq = std::sqrt(disc);
      const double qq = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
      double r1 = qq / qa;
      double r2 = std::abs(qq) > 0.0 ? qc / qq : kInf;
      if (r1 > r2) std::swap(r1, r2);
      if (r1 > 0.0) {
        amax = std::min(amax, r1);
      } else if (r2 > 0.0) {
        amax = std::min(amax, r2);
      }
    }
  }
  return amax;
}

struct KktSolution {
  Eigen::VectorXd dx, w;
  bool ok = false;
};

// Newton KKT system [H A^T; A 0] [dx; w] = [-g; -r_eq] with a tiny static
// ridge, refined against the unregularized matrix. The -r_eq block makes the
// step pull the iterate back onto the equality manifold (infeasible-start
// Newton), so regularization-induced drift cannot accumulate.
KktSolution solve_kkt(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& g, const Eigen::VectorXd& r_eq) {
  const int n = static_cast<int>(H.rows());
  const int p = static_cast<int>(A.rows());
  // Ridge relative to H only; the equality block must stay unperturbed or
  // every Newton step inherits an O(reg) constraint error.
  const double reg = 1e-14 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
  KktSolution out;
  if (p == 0) {
    Eigen::MatrixXd Hr = H;
    Hr.diagonal().array() += reg;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hr);
    if (ldlt.info() != Eigen::Success) return out;
    out.dx = ldlt.solve(-g);
    const Eigen::VectorXd resid = -g - H * out.dx;
    out.dx += ldlt.solve(resid);
    out.w.resize(0);
    out.ok = out.dx.allFinite();
    return out;
  }
  Eigen::MatrixXd K0 = Eigen::MatrixXd::Zero(n + p, n + p);
  K0.topLeftCorner(n, n) = H;
  K0.topRightCorner(n, p) = A.transpose();
  K0.bottomLeftCorner(p, n) = A;
  Eigen::MatrixXd K = K0;
  K.topLeftCorner(n, n).diagonal().array() += reg;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  Eigen::VectorXd rhs(n + p);
  rhs.head(n) = -g;
  rhs.tail(p) = -r_eq;
  const double rhs_scale = 1.0 + rhs.cwiseAbs().maxCoeff();
  Eigen::VectorXd sol = lu.solve(rhs);
  double best_res = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = sol;
  for (int round = 0; round < 5; ++round) {
    const Eigen::VectorXd resid = rhs - K0 * sol;
    const double rn = resid.cwiseAbs().maxCoeff();
    if (!std::isfinite(rn)) break;
    if (rn < best_res) {
      best_res = rn;
      best = sol;
    }
    if (rn <= 1e-13 * rhs_scale) break;
    sol += lu.solve(resid);
  }
  sol = best;
  if (!sol.allFinite() || best_res > 1e-7 * rhs_scale) {
    // singular or hopelessly conditioned: rank-revealing least-squares
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K0);
    sol = cod.solve(rhs);
    if (!sol.allFinite()) return out;
  }
  out.dx = sol.head(n);
  out.w = sol.tail(p);
  out.ok = true;
  return out;
}

struct CenterState {
  Eigen::VectorXd x;
  Eigen::VectorXd w;         // equality multipliers of the centering problem
  Eigen::VectorXd g;         // centering gradient at x
  int newton_steps = 0;
  bool converged = false;
  bool stalled = false;
};

// Damped Newton centering of t*f + phi at fixed t. Stops when the Newton
// decrement is negligible. early(x) can abort as soon as the caller is
// satisfied (used by phase 1).
template <typename EarlyFn>
void center(const BarrierProblem& bp, double t, CenterState& st, int max_inner, int& budget,
            EarlyFn early) {
  const int n = bp.n();
  st.converged = false;
  st.stalled = false;
  const double b_scale = 1.0 + (bp.b.size() ? bp.b.cwiseAbs().maxCoeff() : 0.0);
  for (int it = 0; it < max_inner && budget > 0; ++it) {
    Eigen::VectorXd g = t * bp.grad_f(st.x);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    if (bp.P) H = (2.0 * t) * (*bp.P);
    add_barrier_grad_hess(bp.cones, st.x, g, H);
    const Eigen::VectorXd r_eq =
        bp.p() > 0 ? Eigen::VectorXd(bp.A * st.x - bp.b) : Eigen::VectorXd();
    const double eq_err = bp.p() > 0 ? r_eq.cwiseAbs().maxCoeff() : 0.0;
    const KktSolution kkt = solve_kkt(H, bp.A, g, r_eq);
    if (!kkt.ok) {
      st.stalled = true;
      return;
    }
    st.g = g;
    st.w = kkt.w;
    double decrement2 = kkt.dx.dot(H * kkt.dx);
    if (decrement2 < 0.0) decrement2 = 0.0;
    const double f0 = t * bp.f(st.x) + barrier_value(bp.cones, st.x);
    // The decrement is affine-invariant, but its computed value bottoms out
    // at roundoff of the centering objective; stop at that floor.
    const double ctol = 1e-10 + 1e-13 * std::abs(f0);
    if (0.5 * decrement2 <= ctol && eq_err <= 1e-10 * b_scale) {
      st.converged = true;
      return;
    }
    --budget;
    ++st.newton_steps;
    const double amax = max_feasible_step(bp.cones, st.x, kkt.dx);
    double alpha = std::min(1.0, 0.99 * amax);
    // keep single steps at a sane scale; unbounded centering directions
    // otherwise fling the iterate to 1e11 and beyond
    const double dx_norm = kkt.dx.norm();
    if (dx_norm > 0.0) alpha = std::min(alpha, 1e2 * (1.0 + st.x.norm()) / dx_norm);
    const double slope = g.dot(kkt.dx);
    if (slope < 0.0) {
      while (alpha > 1e-13) {
        const Eigen::VectorXd xn = st.x + alpha * kkt.dx;
        const double fn = t * bp.f(xn) + barrier_value(bp.cones, xn);
        if (std::isfinite(fn) && fn <= f0 + 0.25 * alpha * slope) break;
        alpha *= 0.5;
      }
      if (alpha <= 1e-13) {
        // no verifiable decrease left at float precision: as centered as the
        // arithmetic allows
        st.converged = true;
        return;
      }
    } else {
      // Nonnegative slope with nothing left to correct means the gradient
      // sign is roundoff: the point is float-centered.
      if (eq_err <= 1e-10 * b_scale) {
        st.converged = true;
        return;
      }
      // pure feasibility-correction step (equality residual dominates): stay
      // in the cone interior and insist the equality error actually shrinks
      while (alpha > 1e-13) {
        const Eigen::VectorXd xn = st.x + alpha * kkt.dx;
        const double eq_n = (bp.A * xn - bp.b).cwiseAbs().maxCoeff();
        if (std::isfinite(barrier_value(bp.cones, xn)) && eq_n <= (1.0 - 0.25 * alpha) * eq_err) {
          break;
        }
        alpha *= 0.5;
      }
      if (alpha <= 1e-13) {
        // the equality error is at the accuracy floor of the KKT solves;
        // accept the point and let the validated residuals judge it
        st.converged = true;
        return;
      }
    }
    st.x += alpha * kkt.dx;
    if (early(st.x)) {
      st.converged = true;
      return;
    }
  }
  st.stalled = (budget <= 0);
}

struct PathResult {
  bool reached_gap = false;
  bool early_exit = false;
  bool stalled = false;
  double t_final = 0.0;
  CenterState st;
};

// Path following: center, tighten t by mu, repeat until gap_target(x) is
// met or early(x) fires.
template <typename GapTargetFn, typename EarlyFn>
PathResult path_follow(const BarrierProblem& bp, const Eigen::VectorXd& x0, double t0, double mu,
                       int& budget, GapTargetFn gap_target, EarlyFn early) {
  PathResult pr;
  pr.st.x = x0;
  const double nu = barrier_degree(bp.cones);
  double t = std::max(t0, 1e-10);
  for (int outer = 0; outer < 80 && budget > 0; ++outer) {
    center(bp, t, pr.st, 200, budget, early);
    if (early(pr.st.x)) {
      pr.early_exit = true;
      pr.t_final = t;
      return pr;
    }
    const double gap = nu / t;
    if (gap <= gap_target(pr.st.x)) {
      pr.reached_gap = true;
      pr.t_final = t;
      return pr;
    }
    if (pr.st.stalled) {
      pr.stalled = true;
      pr.t_final = t;
      return pr;
    }
    t *= mu;
  }
  pr.stalled = true;
  pr.t_final = t;
  return pr;
}

bool no_early(const Eigen::VectorXd&) { return false; }

// Least-norm solution of A x = b; reports the attained residual.
Eigen::VectorXd least_norm_solution(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                    double* residual) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  Eigen::VectorXd x = cod.solve(b);
  *residual = A.rows() > 0 ? (A * x - b).cwiseAbs().maxCoeff() : 0.0;
  return x;
}

SolveResult finish(const ConicProgram& p, const SolverOptions& opt, SolveStatus status,
                   const Eigen::VectorXd& x, double dual_res, double gap, int iters,
                   const std::string& msg) {
  SolveResult r;
  r.status = status;
  r.primal = x;
  const ValidationReport vr = validate(p, x);
  r.objective = vr.objective;
  r.eq_residual = vr.eq_violation;
  r.cone_margin = vr.cone_margin;
  r.dual_residual = dual_res;
  r.gap = gap;
  r.iterations = iters;
  r.message = msg;

  if (status == SolveStatus::Optimal) {
    const double eq_tol = opt.tol_abs + opt.tol_rel * (1.0 + (p.b().size() ? p.b().cwiseAbs().maxCoeff() : 0.0));
    const bool eq_ok = vr.eq_violation <= 10.0 * eq_tol;
    const bool cone_ok = vr.cone_margin >= -10.0 * opt.tol_abs;
    if (!eq_ok || !cone_ok) {
      r.status = SolveStatus::Inaccurate;
      r.message = "validated residuals exceed tolerance";
    }
  }
  return r;
}

// Equality-constrained QP: exact KKT solve, no barrier needed.
SolveResult solve_no_cones(const ConicProgram& prog, const SolverOptions& opt) {
  const int n = prog.n_vars();
  const int p = prog.n_equalities();
  const double stat_scale = 1.0 + prog.linear().cwiseAbs().maxCoeff();
  const double stat_tol = opt.tol_abs + opt.tol_rel * stat_scale;
  if (p > 0) {
    double feas_res = 0.0;
    least_norm_solution(prog.A(), prog.b(), &feas_res);
    const double feas_tol =
        opt.tol_abs + opt.tol_rel * (1.0 + prog.b().cwiseAbs().maxCoeff() +
                                     prog.A().cwiseAbs().maxCoeff());
    if (feas_res > feas_tol) {
      return finish(prog, opt, SolveStatus::Infeasible, Eigen::VectorXd::Zero(n), 0.0, 0.0, 0,
                    "equality constraints are inconsistent");
    }
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + p, n + p);
  K.topLeftCorner(n, n) = 2.0 * prog.quadratic();
  Eigen::VectorXd rhs(n + p);
  rhs.head(n) = -prog.linear();
  if (p > 0) {
    K.topRightCorner(n, p) = prog.A().transpose();
    K.bottomLeftCorner(p, n) = prog.A();
    rhs.tail(p) = prog.b();
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(K);
  const Eigen::VectorXd sol = cod.solve(rhs);
  const Eigen::VectorXd x = sol.head(n);
  const Eigen::VectorXd y = sol.tail(p);
  const Eigen::VectorXd stat = 2.0 * prog.quadratic() * x + prog.linear() +
                               (p > 0 ? Eigen::VectorXd(prog.A().transpose() * y)
                                      : Eigen::VectorXd(Eigen::VectorXd::Zero(n)));
  const double stat_res = stat.cwiseAbs().maxCoeff();
  if (stat_res > std::max(stat_tol, 1e-7 * stat_scale)) {
    // convex quadratic with no stationary point on the feasible affine set
    return finish(prog, opt, SolveStatus::Unbounded, x, stat_res, 0.0, 1,
                  "objective is unbounded below on the feasible set");
  }
  return finish(prog, opt, SolveStatus::Optimal, x, stat_res, 0.0, 1, "");
}

}  // namespace

SolveResult solve(const ConicProgram& prog, const SolverOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  SolveResult result;
  try {
    if (prog.cones().empty()) {
      result = solve_no_cones(prog, opt);
    } else {
      const int n = prog.n_vars();
      int budget = opt.max_newton;

      BarrierProblem bp;
      bp.P = &prog.quadratic();
      bp.q = prog.linear();
      bp.A = prog.A();
      bp.b = prog.b();
      bp.cones = prog.cones();

      double eq_res = 0.0;
      Eigen::VectorXd x0 = least_norm_solution(bp.A, bp.b, &eq_res);
      const double feas_tol =
          opt.tol_abs + opt.tol_rel * (1.0 + (bp.b.size() ? bp.b.cwiseAbs().maxCoeff() : 0.0) +
                                       (bp.A.size() ? bp.A.cwiseAbs().maxCoeff() : 0.0));
      if (eq_res > feas_tol) {
        return finish(prog, opt, SolveStatus::Infeasible, x0, 0.0, 0.0, 0,
                      "equality constraints are inconsistent");
      }

      int total_steps = 0;
      const double margin0 = min_cone_margin(bp.cones, x0);
      const double margin_scale = 1.0 + std::abs(margin0);
      if (!(margin0 > 1e-10 * margin_scale)) {
        // Phase 1: minimize the relaxation level s over (x, s) with every
        // cone slackened by s; strictly feasible start s0 = 1 - margin0.
        BarrierProblem ph;
        ph.q = Eigen::VectorXd::Zero(n + 1);
        ph.q[n] = 1.0;
        ph.A = Eigen::MatrixXd::Zero(bp.A.rows(), n + 1);
        if (bp.A.rows() > 0) ph.A.leftCols(n) = bp.A;
        ph.b = bp.b;
        for (const ConeBlock& cb : bp.cones) {
          ConeBlock ext = cb;
          ext.D = Eigen::MatrixXd::Zero(cb.rows(), n + 1);
          ext.D.leftCols(n) = cb.D;
          if (cb.type == ConeType::Nonneg) {
            ext.D.col(n).setOnes();
          } else {
            ext.D(0, n) = 1.0;
          }
          ph.cones.push_back(std::move(ext));
        }
        // The phase-1 objective ignores x, so its centering problem can be
        // unbounded along barrier-reward rays. A generous search box keeps it
        // compact; a certificate that leans on the box is downgraded.
        const double box = 1e6 * (1.0 + x0.cwiseAbs().maxCoeff());
        {
          ConeBlock boxcone;
          boxcone.type = ConeType::Nonneg;
          boxcone.D = Eigen::MatrixXd::Zero(2 * n, n + 1);
          boxcone.D.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
          boxcone.D.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
          boxcone.d = Eigen::VectorXd::Constant(2 * n, box);
          ph.cones.push_back(std::move(boxcone));
        }
        Eigen::VectorXd z0(n + 1);
        z0.head(n) = x0;
        z0[n] = 1.0 - margin0;
        const double nu1 = barrier_degree(ph.cones);
        const double eps_inf = 1e-9 * margin_scale;
        const double want_margin = 1e-9 * margin_scale;
        auto strictly_feasible = [&](const Eigen::VectorXd& z) {
          return min_cone_margin(bp.cones, z.head(n)) > want_margin;
        };
        CenterState st;
        st.x = z0;
        bool feasible = false, certified_infeasible = false, stalled = false;
        bool box_active = false;
        double t1 = nu1 / (1.0 + std::abs(z0[n]));
        for (int outer = 0; outer < 80 && budget > 0; ++outer) {
          center(ph, t1, st, 200, budget, strictly_feasible);
          total_steps += st.newton_steps;
          st.newton_steps = 0;
          if (strictly_feasible(st.x)) {
            feasible = true;
            break;
          }
          if (st.stalled) {
            stalled = true;
            break;
          }
          const double gap1 = nu1 / t1;
          // s* lies within gap1 of the centered s, so once the gap is small
          // the sign of s* is decided. Only a converged center qualifies, and
          // only if the search box is slack at it.
          if (st.converged && st.x[n] - gap1 > eps_inf) {
            box_active = st.x.head(n).cwiseAbs().maxCoeff() > 0.5 * box;
            certified_infeasible = !box_active;
            break;
          }
          if (gap1 <= 0.25 * eps_inf) break;  // undecided: boundary-feasible at best
          t1 *= opt.mu;
        }
        if (certified_infeasible) {
          return finish(prog, opt, SolveStatus::Infeasible, st.x.head(n), 0.0, 0.0, total_steps,
                        "no point satisfies the cone constraints");
        }
        if (box_active) {
          return finish(prog, opt, SolveStatus::Inaccurate, st.x.head(n), 0.0, 0.0, total_steps,
                        "phase 1 hit the search box; cannot certify feasibility either way");
        }
        if (!feasible) {
          return finish(prog, opt, SolveStatus::Inaccurate, st.x.head(n), 0.0, 0.0, total_steps,
                        stalled ? "phase 1 stalled before finding a strictly feasible point"
                                : "feasible set appears to have empty interior; cannot certify");
        }
        // Phase 1 ignores the objective, so its endpoint can sit absurdly far
        // out. Cone margins are concave along the segment back to the
        // least-norm start; bisect for the nearest point with a healthy margin.
        const Eigen::VectorXd x_feas = st.x.head(n);
        const double m_feas = min_cone_margin(bp.cones, x_feas);
        const double delta = 0.5 * std::min(m_feas, margin_scale);
        double hi = 1.0;
        double lo = 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (min_cone_margin(bp.cones, x0 + mid * (x_feas - x0)) >= delta) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        x0 += hi * (x_feas - x0);
      }

      // Phase 2: path following on the real objective.
      const double nu = barrier_degree(bp.cones);
      const double f0 = prog.objective_at(x0);
      const double t0 = nu / (0.25 * (1.0 + std::abs(f0)));
      auto gap_target = [&](const Eigen::VectorXd& x) {
        return opt.tol_abs + opt.tol_rel * (1.0 + std::abs(prog.objective_at(x)));
      };
      PathResult main = path_follow(bp, x0, t0, opt.mu, budget, gap_target, no_early);
      total_steps += main.st.newton_steps;

      const double gap = nu / std::max(main.t_final, 1e-300);
      double dual_res = 0.0;
      if (main.st.g.size() == n) {
        Eigen::VectorXd stat = main.st.g;
        if (bp.p() > 0 && main.st.w.size() == bp.p()) stat += bp.A.transpose() * main.st.w;
        dual_res = stat.cwiseAbs().maxCoeff() / std::max(main.t_final, 1e-300);
      }
      if (prog.objective_at(main.st.x) < -1e15 * (1.0 + std::abs(f0))) {
        return finish(prog, opt, SolveStatus::Unbounded, main.st.x, dual_res, gap, total_steps,
                      "objective diverges along the central path");
      }
      const SolveStatus status = main.reached_gap ? SolveStatus::Optimal : SolveStatus::Inaccurate;
      result = finish(prog, opt, status, main.st.x, dual_res, gap, total_steps,
                      main.reached_gap ? "" : "Newton budget exhausted before gap target");
    }
  } catch (const std::exception& e) {
    result.status = SolveStatus::Failed;
    result.primal = Eigen::VectorXd::Zero(prog.n_vars());
    result.message = std::string("solver exception: ") + e.what();
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace decrelax
