#include <doctest.h>

#include "decrelax/simulate.hpp"
#include "support/test_support.hpp"

using namespace decrelax;
using namespace testsupport;

namespace {

LtvSystem scalar_sys() {
  LtvSystem sys;
  sys.N = 1;
  sys.T = 1;
  sys.nx_sub = {1};
  sys.nu_sub = {1};
  sys.ny_sub = {1};
  sys.n_xi = 1;
  sys.x0 = Eigen::VectorXd::Zero(1);
  sys.A = {Eigen::MatrixXd::Ones(1, 1)};
  sys.B = {Eigen::MatrixXd::Ones(1, 1)};
  sys.G = {Eigen::MatrixXd::Ones(1, 1)};
  sys.C = {Eigen::MatrixXd::Ones(1, 1)};
  sys.H = {Eigen::MatrixXd::Ones(1, 1)};
  return sys;
}

CostData scalar_cost() {
  Eigen::MatrixXd rx = Eigen::MatrixXd::Zero(2, 2);
  rx(1, 1) = 1.0;
  return CostData::validated(rx, Eigen::MatrixXd::Ones(1, 1));
}

}  // namespace

TEST_CASE("open-loop scalar cost matches the trace formula") {
  const LtvSystem sys = scalar_sys();
  const StackedSystem stk = stack_system(sys);
  const auto dist = DisturbanceModel::uniform_ellipsoid(1, 1, Eigen::VectorXd::Zero(1),
                                                        Eigen::MatrixXd::Identity(1, 1));
  const CostData cost = scalar_cost();
  const Eigen::MatrixXd K = Eigen::MatrixXd::Zero(stk.Nu, stk.Ny);
  const SimulationResult sim =
      simulate(sys, K, cost, ConstraintData::empty(stk), dist, 100000, 11);
  // E[xi^2] = 1/3 is the open-loop expected cost
  CHECK(std::abs(sim.mean_cost - 1.0 / 3.0) <= 3.0 * sim.std_error);
  CHECK(sim.moment_residual <= 0.02);
}

TEST_CASE("vanishing noise collapses to the deterministic rollout") {
  const LtvSystem sys = scalar_sys();
  const StackedSystem stk = stack_system(sys);
  Eigen::VectorXd c(1);
  c << 0.4;
  Eigen::MatrixXd L(1, 1);
  L << 1e-4;  // small enough to pin the rollout, large enough to keep M PD
  const auto dist = DisturbanceModel::uniform_ellipsoid(1, 1, c, L);
  const CostData cost = scalar_cost();
  const Eigen::MatrixXd K = Eigen::MatrixXd::Zero(stk.Nu, stk.Ny);
  const SimulationResult sim = simulate(sys, K, cost, ConstraintData::empty(stk), dist, 200, 3);
  // x(1) = xi(0) ~= 0.4 deterministically, cost ~= 0.16
  CHECK(std::abs(sim.mean_cost - 0.16) <= 1e-3);
  CHECK(sim.std_error <= 1e-4);
}

TEST_CASE("closed loop under youla_to_feedback matches objective_value") {
  Rng rng(14);
  SystemSpec spec;
  spec.N = 2;
  spec.T = 3;
  const LtvSystem sys = random_system(rng, spec);
  const StackedSystem stk = stack_system(sys);
  const DisturbanceModel dist = unit_ball_disturbance(sys);
  const CostData cost = random_cost(rng, stk);
  const SparsityPattern pat = sparsity_pattern(sys, InfoGraph::complete(2));
  Eigen::VectorXd v(pat.n_free());
  for (int i = 0; i < v.size(); ++i) v[i] = 0.3 * (2.0 * rng.uniform01() - 1.0);
  const Eigen::MatrixXd Q = pat.unpack(v);
  const Eigen::MatrixXd K = youla_to_feedback(Q, stk);
  const double predicted = objective_value(Q, stk, cost, dist.moment_matrix());
  const SimulationResult sim =
      simulate(sys, K, cost, ConstraintData::empty(stk), dist, 100000, 999);
  CHECK(std::abs(sim.mean_cost - predicted) <= 3.0 * sim.std_error);
}

TEST_CASE("determinism and common random numbers") {
  const LtvSystem sys = scalar_sys();
  const StackedSystem stk = stack_system(sys);
  const auto dist = DisturbanceModel::uniform_ellipsoid(1, 1, Eigen::VectorXd::Zero(1),
                                                        Eigen::MatrixXd::Identity(1, 1));
  const CostData cost = scalar_cost();
  const Eigen::MatrixXd K = Eigen::MatrixXd::Zero(stk.Nu, stk.Ny);
  const SimulationResult a = simulate(sys, K, cost, ConstraintData::empty(stk), dist, 5000, 77);
  const SimulationResult b = simulate(sys, K, cost, ConstraintData::empty(stk), dist, 5000, 77);
  CHECK(a.mean_cost == b.mean_cost);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("constraint violation accounting") {
  const LtvSystem sys = scalar_sys();
  const StackedSystem stk = stack_system(sys);
  const auto dist = DisturbanceModel::uniform_ellipsoid(1, 1, Eigen::VectorXd::Zero(1),
                                                        Eigen::MatrixXd::Identity(1, 1));
  const CostData cost = scalar_cost();
  // constraint xi(0) <= 0 fails on half the samples under the zero policy
  ConstraintData cons = ConstraintData::empty(stk);
  cons.F_x = Eigen::MatrixXd::Zero(1, stk.Nx);
  cons.F_u = Eigen::MatrixXd::Zero(1, stk.Nu);
  cons.F_xi = Eigen::MatrixXd::Zero(1, stk.Nxi);
  cons.F_xi(0, 1) = 1.0;
  const Eigen::MatrixXd K = Eigen::MatrixXd::Zero(stk.Nu, stk.Ny);
  const SimulationResult sim = simulate(sys, K, cost, cons, dist, 20000, 5);
  CHECK(sim.max_violation > 0.9);
  CHECK(sim.violation_frequency[0] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("policy equivalence between feedback and youla forms") {
  Rng rng(25);
  SystemSpec spec;
  spec.N = 2;
  spec.T = 3;
  const LtvSystem sys = random_system(rng, spec);
  const StackedSystem stk = stack_system(sys);
  const DisturbanceModel dist = unit_ball_disturbance(sys);
  const SparsityPattern pat = sparsity_pattern(sys, InfoGraph::complete(2));

  SUBCASE("zero policy: exact") {
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(stk.Nu, stk.Ny);
    CHECK(check_policy_equivalence(Q, Q, sys, stk, dist, 100, 4) == 0.0);
  }
  SUBCASE("random causal policies: within 1e-9") {
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd v(pat.n_free());
      for (int i = 0; i < v.size(); ++i) v[i] = 2.0 * rng.uniform01() - 1.0;
      const Eigen::MatrixXd Q = pat.unpack(v);
      const Eigen::MatrixXd K = youla_to_feedback(Q, stk);
      CHECK(check_policy_equivalence(Q, K, sys, stk, dist, 1000, 50 + trial) <= 1e-9);
    }
  }
}

TEST_CASE("purified output identity along sample paths") {
  Rng rng(33);
  SystemSpec spec;
  spec.N = 2;
  spec.T = 4;
  const LtvSystem sys = random_system(rng, spec);
  const StackedSystem stk = stack_system(sys);
  const DisturbanceModel dist = unit_ball_disturbance(sys);
  const SparsityPattern pat = sparsity_pattern(sys, InfoGraph::complete(2));
  Eigen::VectorXd v(pat.n_free());
  for (int i = 0; i < v.size(); ++i) v[i] = 2.0 * rng.uniform01() - 1.0;
  const Eigen::MatrixXd K = youla_to_feedback(pat.unpack(v), stk);
  const Eigen::MatrixXd xis = dist.sample(200, 8);
  for (int k = 0; k < xis.rows(); ++k) {
    const Eigen::VectorXd xi = xis.row(k).transpose();
    const Trajectory tr = rollout(sys, K, xi);
    const Eigen::VectorXd eta = tr.y - stk.CB * tr.u;
    const double scale = 1.0 + tr.y.cwiseAbs().maxCoeff();
    CHECK((eta - stk.P * xi).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("empirical second moments of eta match P M P^T") {
  Rng rng(44);
  SystemSpec spec;
  spec.N = 2;
  spec.T = 2;
  const LtvSystem sys = random_system(rng, spec);
  const StackedSystem stk = stack_system(sys);
  const DisturbanceModel dist = unit_ball_disturbance(sys);
  const long n = 100000;
  const Eigen::MatrixXd xis = dist.sample(n, 123);
  const Eigen::MatrixXd etas = xis * stk.P.transpose();
  const Eigen::MatrixXd emp = etas.transpose() * etas / double(n);
  const Eigen::MatrixXd want = stk.P * dist.moment_matrix() * stk.P.transpose();
  CHECK((emp - want).cwiseAbs().maxCoeff() <=
        3.0 * (1.0 + want.cwiseAbs().maxCoeff()) / std::sqrt(double(n)));
}
