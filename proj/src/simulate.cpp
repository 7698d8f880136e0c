#include "decrelax/simulate.hpp"

#include <cmath>
#include <ostream>

namespace decrelax {

namespace {

// Kahan compensated accumulator.
struct Kahan {
  double sum = 0.0, carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

Trajectory rollout(const LtvSystem& sys, const Eigen::MatrixXd& K, const Eigen::VectorXd& xi) {
  const int T = sys.T, nx = sys.nx(), nu = sys.nu(), ny = sys.ny();
  const int Ny = 1 + ny * T;
  if (K.rows() != nu * T || K.cols() != Ny) throw DimensionError("rollout: K shape mismatch");
  if (xi.size() != 1 + sys.n_xi * T) throw DimensionError("rollout: xi length mismatch");

  Trajectory tr;
  tr.xi = xi;
  tr.x.resize(nx * (T + 1));
  tr.u.resize(nu * T);
  tr.y.resize(Ny);
  tr.y[0] = 1.0;

  Eigen::VectorXd x = sys.x0;
  for (int t = 0; t < T; ++t) {
    tr.x.segment(t * nx, nx) = x;
    const auto xi_t = xi.segment(1 + t * sys.n_xi, sys.n_xi);
    const Eigen::VectorXd y_t = sys.C[t] * x + sys.H[t] * xi_t;
    tr.y.segment(1 + t * ny, ny) = y_t;
    // u(t) from the realized prefix (1, y(0..t)); later columns of a causal
    // K are zero by construction.
    const int seen = 1 + (t + 1) * ny;
    const Eigen::VectorXd u_t = K.block(t * nu, 0, nu, seen) * tr.y.head(seen);
    tr.u.segment(t * nu, nu) = u_t;
    x = sys.A[t] * x + sys.B[t] * u_t + sys.G[t] * xi_t;
  }
  tr.x.segment(T * nx, nx) = x;
  return tr;
}

SimulationResult simulate(const LtvSystem& sys, const Eigen::MatrixXd& K, const CostData& cost,
                          const ConstraintData& cons, const DisturbanceModel& dist, long n,
                          std::uint64_t seed, double violation_tol, std::ostream* trace,
                          long trace_rows) {
  sys.validate();
  if (n < 1) throw DimensionError("simulate: n must be >= 1");
  const int m = cons.rows();
  const int nxi_traj = dist.dim();

  const Eigen::MatrixXd xis = dist.sample(n, seed);
  Kahan cost_sum, cost_sq_sum;
  double max_violation = m > 0 ? -std::numeric_limits<double>::infinity() : 0.0;
  Eigen::VectorXd viol_count = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd outer_sum = Eigen::MatrixXd::Zero(nxi_traj, nxi_traj);

  if (trace) *trace << "sample,cost,max_violation\n";
  for (long k = 0; k < n; ++k) {
    const Eigen::VectorXd xi = xis.row(k).transpose();
    const Trajectory tr = rollout(sys, K, xi);
    const double c = tr.x.dot(cost.R_x * tr.x) + tr.u.dot(cost.R_u * tr.u);
    cost_sum.add(c);
    cost_sq_sum.add(c * c);
    double sample_viol = 0.0;
    if (m > 0) {
      const Eigen::VectorXd viol = cons.F_x * tr.x + cons.F_u * tr.u + cons.F_xi * xi;
      sample_viol = viol.maxCoeff();
      max_violation = std::max(max_violation, sample_viol);
      for (int i = 0; i < m; ++i)
        if (viol[i] > violation_tol) viol_count[i] += 1.0;
    }
    if (trace && k < trace_rows) *trace << k << "," << c << "," << sample_viol << "\n";
    outer_sum.noalias() += xi * xi.transpose();
  }

  SimulationResult r;
  r.samples = n;
  r.violation_tolerance = violation_tol;
  r.mean_cost = cost_sum.sum / static_cast<double>(n);
  if (n > 1) {
    const double var =
        std::max(0.0, (cost_sq_sum.sum - static_cast<double>(n) * r.mean_cost * r.mean_cost) /
                          static_cast<double>(n - 1));
    r.std_error = std::sqrt(var / static_cast<double>(n));
  }
  r.max_violation = max_violation;
  r.violation_frequency = viol_count / static_cast<double>(n);
  r.moment_residual =
      (outer_sum / static_cast<double>(n) - dist.moment_matrix()).cwiseAbs().maxCoeff();
  return r;
}

double check_policy_equivalence(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& K,
                                const LtvSystem& sys, const StackedSystem& stk,
                                const DisturbanceModel& dist, long n, std::uint64_t seed) {
  if (Q.rows() != stk.Nu || Q.cols() != stk.Ny) {
    throw DimensionError("check_policy_equivalence: Q shape mismatch");
  }
  const Eigen::MatrixXd QP = Q * stk.P;
  const Eigen::MatrixXd xis = dist.sample(n, seed);
  double worst = 0.0;
  for (long k = 0; k < n; ++k) {
    const Eigen::VectorXd xi = xis.row(k).transpose();
    const Trajectory tr = rollout(sys, K, xi);
    worst = std::max(worst, (tr.u - QP * xi).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace decrelax
