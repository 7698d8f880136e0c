#include "decrelax/bounds.hpp"

#include <sstream>

#include <Eigen/Eigenvalues>

namespace decrelax {

ConstraintData ConstraintData::empty(const StackedSystem& stk) {
  ConstraintData c;
  c.F_x.resize(0, stk.Nx);
  c.F_u.resize(0, stk.Nu);
  c.F_xi.resize(0, stk.Nxi);
  return c;
}

void ConstraintData::validate(const StackedSystem& stk) const {
  const int m = rows();
  if (F_u.rows() != m || F_xi.rows() != m) {
    throw DimensionError("ConstraintData: F_x, F_u, F_xi must have the same row count");
  }
  if (F_x.cols() != stk.Nx || F_u.cols() != stk.Nu || F_xi.cols() != stk.Nxi) {
    std::ostringstream os;
    os << "ConstraintData: column counts (" << F_x.cols() << ", " << F_u.cols() << ", "
       << F_xi.cols() << ") do not match trajectory dims (" << stk.Nx << ", " << stk.Nu << ", "
       << stk.Nxi << ")";
    throw DimensionError(os.str());
  }
}

namespace {

Eigen::MatrixXd psd_validated(const Eigen::MatrixXd& R, const char* name) {
  if (R.rows() != R.cols()) {
    throw DimensionError(std::string("CostData: ") + name + " must be square");
  }
  Eigen::MatrixXd sym = 0.5 * (R + R.transpose());
  const double scale = 1.0 + (sym.size() > 0 ? sym.cwiseAbs().maxCoeff() : 0.0);
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw DimensionError(std::string("CostData: ") + name + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.eigenvalues().minCoeff() < -1e-9 * scale) {
    std::ostringstream os;
    os << "CostData: " << name << " is not PSD (min eigenvalue " << es.eigenvalues().minCoeff()
       << ")";
    throw NotPositiveDefiniteError(os.str());
  }
  if (es.eigenvalues().minCoeff() < 0.0) {
    sym = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
          es.eigenvectors().transpose();
    sym = 0.5 * (sym + sym.transpose());
  }
  return sym;
}

}  // namespace

CostData CostData::validated(const Eigen::MatrixXd& R_x, const Eigen::MatrixXd& R_u) {
  CostData c;
  c.R_x = psd_validated(R_x, "R_x");
  c.R_u = psd_validated(R_u, "R_u");
  return c;
}

void CostData::check_dims(const StackedSystem& stk) const {
  if (R_x.rows() != stk.Nx || R_u.rows() != stk.Nu) {
    std::ostringstream os;
    os << "CostData: R_x is " << R_x.rows() << "^2 and R_u is " << R_u.rows()
       << "^2; expected " << stk.Nx << "^2 and " << stk.Nu << "^2";
    throw DimensionError(os.str());
  }
}

double objective_value(const Eigen::MatrixXd& Q, const StackedSystem& stk, const CostData& cost,
                       const Eigen::MatrixXd& M) {
  cost.check_dims(stk);
  if (Q.rows() != stk.Nu || Q.cols() != stk.Ny || M.rows() != stk.Nxi || M.cols() != stk.Nxi) {
    throw DimensionError("objective_value: dimension mismatch");
  }
  const Eigen::MatrixXd R = cost.R_u + stk.B.transpose() * cost.R_x * stk.B;
  const Eigen::MatrixXd S = Q * stk.P;  // Nu x Nxi
  const double quad = (R * S * M).cwiseProduct(S).sum();
  const double cross = 2.0 * (cost.R_x * stk.B * S * M).cwiseProduct(stk.G).sum();
  const double open_loop = (cost.R_x * stk.G * M).cwiseProduct(stk.G).sum();
  return quad + cross + open_loop;
}

namespace {

// Shared objective assembly over the packed Q coordinates:
//   P0[a,b] = R_{r_a r_b} * (P M P^T)_{c_a c_b},  q0[a] = 2 (P M G^T R_x B)_{c_a r_a},
//   c0 = trace(G^T R_x G M).
void packed_objective(const StackedSystem& stk, const CostData& cost, const DisturbanceModel& dist,
                      const SparsityPattern& pat, Eigen::MatrixXd& P0, Eigen::VectorXd& q0,
                      double& c0) {
  const Eigen::MatrixXd& M = dist.moment_matrix();
  const Eigen::MatrixXd R = cost.R_u + stk.B.transpose() * cost.R_x * stk.B;
  const Eigen::MatrixXd Npm = stk.P * M * stk.P.transpose();
  const Eigen::MatrixXd Lmat = stk.P * M * stk.G.transpose() * cost.R_x * stk.B;
  const int nf = pat.n_free();
  P0.resize(nf, nf);
  q0.resize(nf);
  for (int a = 0; a < nf; ++a) {
    const auto [ra, ca] = pat.free_entries[a];
    q0[a] = 2.0 * Lmat(ca, ra);
    for (int b = 0; b < nf; ++b) {
      const auto [rb, cb] = pat.free_entries[b];
      P0(a, b) = R(ra, rb) * Npm(ca, cb);
    }
  }
  P0 = 0.5 * (P0 + P0.transpose());
  c0 = (cost.R_x * stk.G * M).cwiseProduct(stk.G).sum();
}

void check_bound_inputs(const StackedSystem& stk, const ConstraintData& cons, const CostData& cost,
                        const DisturbanceModel& dist, const SparsityPattern& pat) {
  cons.validate(stk);
  cost.check_dims(stk);
  if (dist.dim() != stk.Nxi) {
    std::ostringstream os;
    os << "bound builder: disturbance dimension " << dist.dim() << " does not match N_xi "
       << stk.Nxi;
    throw DimensionError(os.str());
  }
  if (pat.Nu != stk.Nu || pat.Ny != stk.Ny) {
    throw DimensionError("bound builder: sparsity pattern does not match stacked dimensions");
  }
}

}  // namespace

ConicProgram build_lower_bound(const StackedSystem& stk, const ConstraintData& cons,
                               const CostData& cost, const DisturbanceModel& dist,
                               const SparsityPattern& pat) {
  check_bound_inputs(stk, cons, cost, dist, pat);
  const int m = cons.rows();
  const int nf = pat.n_free();
  const int nxi = stk.Nxi;
  const int n_vars = nf + m * nxi;

  ConicProgram prog(n_vars);
  Eigen::MatrixXd P0;
  Eigen::VectorXd q0;
  double c0 = 0.0;
  packed_objective(stk, cost, dist, pat, P0, q0, c0);
  {
    Eigen::MatrixXd Pfull = Eigen::MatrixXd::Zero(n_vars, n_vars);
    Pfull.topLeftCorner(nf, nf) = P0;
    Eigen::VectorXd qfull = Eigen::VectorXd::Zero(n_vars);
    qfull.head(nf) = q0;
    prog.set_objective(Pfull, qfull, c0);
  }
  if (m == 0) return prog;

  const Eigen::MatrixXd& M = dist.moment_matrix();
  const Eigen::MatrixXd& W = dist.support_matrix();
  const Eigen::MatrixXd E = cons.F_u + cons.F_x * stk.B;       // m x Nu
  const Eigen::MatrixXd rhs_fixed = cons.F_x * stk.G + cons.F_xi;  // m x Nxi

  // (E Q P)_{ij} + Z_{ij} = -rhs_fixed_{ij}
  Eigen::MatrixXd Arows = Eigen::MatrixXd::Zero(m * nxi, n_vars);
  Eigen::VectorXd rhs(m * nxi);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < nxi; ++j) {
      const int row = i * nxi + j;
      for (int a = 0; a < nf; ++a) {
        const auto [ra, ca] = pat.free_entries[a];
        const double coef = E(i, ra) * stk.P(ca, j);
        if (coef != 0.0) Arows(row, a) = coef;
      }
      Arows(row, nf + i * nxi + j) = 1.0;
      rhs[row] = -rhs_fixed(i, j);
    }
  }
  prog.add_equality_block(Arows, rhs);

  const Eigen::MatrixXd WM = W * M;
  Eigen::MatrixXd nn = Eigen::MatrixXd::Zero(m, n_vars);
  for (int i = 0; i < m; ++i) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nxi, n_vars);
    D.block(0, nf + i * nxi, nxi, nxi) = WM;
    prog.add_soc(D, Eigen::VectorXd::Zero(nxi));
    nn.block(i, nf + i * nxi, 1, nxi) = M.row(0);  // e1^T M z_i, M symmetric
  }
  prog.add_nonneg(nn, Eigen::VectorXd::Zero(m));
  return prog;
}

ConicProgram build_upper_bound(const StackedSystem& stk, const ConstraintData& cons,
                               const CostData& cost, const DisturbanceModel& dist,
                               const SparsityPattern& pat) {
  check_bound_inputs(stk, cons, cost, dist, pat);
  const int m = cons.rows();
  const int nf = pat.n_free();
  const int nxi = stk.Nxi;
  // layout: packed Q | lambda_1 .. lambda_m (each Nxi) | t_1 .. t_m
  const int n_vars = nf + m * nxi + m;

  ConicProgram prog(n_vars);
  Eigen::MatrixXd P0;
  Eigen::VectorXd q0;
  double c0 = 0.0;
  packed_objective(stk, cost, dist, pat, P0, q0, c0);
  {
    Eigen::MatrixXd Pfull = Eigen::MatrixXd::Zero(n_vars, n_vars);
    Pfull.topLeftCorner(nf, nf) = P0;
    Eigen::VectorXd qfull = Eigen::VectorXd::Zero(n_vars);
    qfull.head(nf) = q0;
    prog.set_objective(Pfull, qfull, c0);
  }
  if (m == 0) return prog;

  const Eigen::MatrixXd& W = dist.support_matrix();
  const Eigen::MatrixXd E = cons.F_u + cons.F_x * stk.B;
  const Eigen::MatrixXd rhs_fixed = cons.F_x * stk.G + cons.F_xi;

  // a_i(Q) + W^T lambda_i - t_i e1 = 0, lambda_i in K2, t_i <= 0 enforces
  // a_i(Q)^T xi <= 0 on the whole support.
  Eigen::MatrixXd Arows = Eigen::MatrixXd::Zero(m * nxi, n_vars);
  Eigen::VectorXd rhs(m * nxi);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < nxi; ++j) {
      const int row = i * nxi + j;
      for (int a = 0; a < nf; ++a) {
        const auto [ra, ca] = pat.free_entries[a];
        const double coef = E(i, ra) * stk.P(ca, j);
        if (coef != 0.0) Arows(row, a) = coef;
      }
      for (int l = 0; l < nxi; ++l) Arows(row, nf + i * nxi + l) = W(l, j);
      if (j == 0) Arows(row, nf + m * nxi + i) = -1.0;
      rhs[row] = -rhs_fixed(i, j);
    }
  }
  prog.add_equality_block(Arows, rhs);

  Eigen::MatrixXd nn = Eigen::MatrixXd::Zero(m, n_vars);
  for (int i = 0; i < m; ++i) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nxi, n_vars);
    D.block(0, nf + i * nxi, nxi, nxi).setIdentity();
    prog.add_soc(D, Eigen::VectorXd::Zero(nxi));
    nn(i, nf + m * nxi + i) = -1.0;  // t_i <= 0
  }
  prog.add_nonneg(nn, Eigen::VectorXd::Zero(m));
  return prog;
}

LowerBoundResult lower_bound(const StackedSystem& stk, const ConstraintData& cons,
                             const CostData& cost, const DisturbanceModel& dist,
                             const SparsityPattern& pat, const SolverOptions& opt) {
  const ConicProgram prog = build_lower_bound(stk, cons, cost, dist, pat);
  LowerBoundResult out;
  out.solve = solve(prog, opt);
  const int nf = pat.n_free();
  const int m = cons.rows();
  out.Q = pat.unpack(out.solve.primal.head(nf));
  out.Z.resize(m, stk.Nxi);
  for (int i = 0; i < m; ++i) {
    out.Z.row(i) = out.solve.primal.segment(nf + i * stk.Nxi, stk.Nxi).transpose();
  }
  out.J_d = out.solve.objective;
  if (out.solve.status == SolveStatus::Inaccurate) {
    // Never over-claim a lower bound: shift down by 10x the residual size.
    const double resid = out.solve.eq_residual + std::max(0.0, -out.solve.cone_margin) +
                         std::abs(out.solve.gap);
    out.J_d -= 10.0 * resid;
    out.downgraded = true;
  }
  return out;
}

UpperBoundResult upper_bound(const StackedSystem& stk, const ConstraintData& cons,
                             const CostData& cost, const DisturbanceModel& dist,
                             const SparsityPattern& pat, const SolverOptions& opt) {
  const ConicProgram prog = build_upper_bound(stk, cons, cost, dist, pat);
  UpperBoundResult out;
  out.solve = solve(prog, opt);
  if (out.solve.status == SolveStatus::Infeasible) {
    out.robust_infeasible = true;
    return out;
  }
  const int nf = pat.n_free();
  out.Q = pat.unpack(out.solve.primal.head(nf));
  out.K = youla_to_feedback(out.Q, stk);
  out.J_up = out.solve.objective;
  return out;
}

BoundReport certify(const LtvSystem& sys, const InfoGraph& g, const DisturbanceModel& dist,
                    const ConstraintData& cons, const CostData& cost,
                    const CertifyOptions& opts) {
  BoundReport rep;
  rep.forced = opts.force;
  const StackedSystem stk = stack_system(sys);

  rep.assumption1 = check_assumption_1(sys, opts.tau_z);
  const bool a1_ok = std::all_of(rep.assumption1.begin(), rep.assumption1.end(),
                                 [](bool b) { return b; });
  if (!a1_ok && !opts.force) {
    std::ostringstream os;
    os << "certify[assumptions]: Assumption 1 fails for subsystem(s)";
    for (size_t i = 0; i < rep.assumption1.size(); ++i)
      if (!rep.assumption1[i]) os << " " << (i + 1);
    throw AssumptionError(os.str());
  }

  InfoGraph relaxed = a1_ok ? relax_information(sys, g, opts.tau_z)
                            : relax_information_forced(sys, g, opts.tau_z);
  rep.relaxed_graph = relaxed;
  rep.original_pn = (relaxed == g);

  if (opts.run_lower) {
    const SparsityPattern pat = sparsity_pattern(sys, relaxed);
    rep.lower = lower_bound(stk, cons, cost, dist, pat, opts.solver);
    rep.J_d = rep.lower->J_d;
    rep.Q_lower = rep.lower->Q;
    rep.Z = rep.lower->Z;
  }

  if (opts.run_upper) {
    std::optional<SparsityPattern> up_pat;
    if (opts.upper_graph) {
      if (!opts.upper_graph->subgraph_of(g)) {
        throw AssumptionError("certify[upper]: upper_graph must be a subgraph of the information graph");
      }
      if (a1_ok && !is_partially_nested(sys, *opts.upper_graph, opts.tau_z)) {
        throw AssumptionError("certify[upper]: upper_graph must be partially nested");
      }
      up_pat = sparsity_pattern(sys, *opts.upper_graph);
    } else if (rep.original_pn) {
      up_pat = sparsity_pattern(sys, g);
    } else {
      rep.upper_note =
          "upper bound skipped: information graph is not partially nested and no PN "
          "upper_graph was supplied";
    }
    if (up_pat) {
      rep.upper = upper_bound(stk, cons, cost, dist, *up_pat, opts.solver);
      if (rep.upper->robust_infeasible) {
        rep.upper_note = "no affine upper bound: robust constraints are infeasible";
      } else {
        rep.J_up = rep.upper->J_up;
        rep.Q_upper = rep.upper->Q;
        rep.K_upper = rep.upper->K;
      }
    }
  }

  if (rep.J_d && rep.J_up) {
    rep.gap_abs = *rep.J_up - *rep.J_d;
    rep.gap_rel = *rep.gap_abs / std::max(1.0, std::abs(*rep.J_d));
  }
  return rep;
}

}  // namespace decrelax
