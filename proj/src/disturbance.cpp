#include "decrelax/disturbance.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "decrelax/rng.hpp"

namespace decrelax {

std::string DisturbanceModel::family_name() const {
  switch (family_) {
    case Family::UniformEllipsoid: return "uniform_ellipsoid";
    case Family::TruncatedGaussian: return "truncated_gaussian";
    case Family::UserMoments: return "user_moments";
  }
  return "?";
}

void DisturbanceModel::init_support(int n_xi, int T, const Eigen::VectorXd& c,
                                    const Eigen::MatrixXd& L) {
  if (n_xi < 1 || T < 1) throw DimensionError("DisturbanceModel: n_xi and T must be >= 1");
  n_xi_ = n_xi;
  T_ = T;
  d_ = n_xi * T;
  if (c.size() != d_) {
    std::ostringstream os;
    os << "DisturbanceModel: center has length " << c.size() << ", expected " << d_;
    throw DimensionError(os.str());
  }
  if (L.rows() != d_ || L.cols() != d_) {
    std::ostringstream os;
    os << "DisturbanceModel: shape matrix is " << L.rows() << "x" << L.cols() << ", expected "
       << d_ << "x" << d_;
    throw DimensionError(os.str());
  }
  c_ = c;
  L_ = L;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw SingularMatrixError(
        "DisturbanceModel: shape matrix L is singular; only full-dimensional ellipsoidal "
        "supports are accepted");
  }
  L_inv_ = lu.inverse();

  // W maps xi = (1, zeta) to (1, L^{-1}(zeta - c)), so W xi in K2 iff zeta is
  // in the support ellipsoid.
  W_ = Eigen::MatrixXd::Zero(d_ + 1, d_ + 1);
  W_(0, 0) = 1.0;
  W_.block(1, 0, d_, 1) = -L_inv_ * c_;
  W_.block(1, 1, d_, d_) = L_inv_;
}

void DisturbanceModel::check_moment_pd() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M_);
  const double min_eig = es.eigenvalues().minCoeff();
  const double tau_pd = 1e-10 * M_.trace() / static_cast<double>(dim());
  if (!(min_eig > tau_pd)) {
    std::ostringstream os;
    os << "DisturbanceModel: moment matrix is not positive definite (min eigenvalue " << min_eig
       << ", threshold " << tau_pd << ")";
    throw NotPositiveDefiniteError(os.str());
  }
}

DisturbanceModel DisturbanceModel::uniform_ellipsoid(int n_xi, int T, const Eigen::VectorXd& c,
                                                     const Eigen::MatrixXd& L) {
  DisturbanceModel m;
  m.family_ = Family::UniformEllipsoid;
  m.init_support(n_xi, T, c, L);
  // Uniform on {c + Lv : ||v|| <= 1}: E[zeta] = c, Cov = L L^T / (d + 2).
  const int d = m.d_;
  Eigen::MatrixXd second = c * c.transpose() + (L * L.transpose()) / static_cast<double>(d + 2);
  m.M_ = Eigen::MatrixXd(d + 1, d + 1);
  m.M_(0, 0) = 1.0;
  m.M_.block(0, 1, 1, d) = c.transpose();
  m.M_.block(1, 0, d, 1) = c;
  m.M_.block(1, 1, d, d) = 0.5 * (second + second.transpose());
  m.check_moment_pd();
  return m;
}

DisturbanceModel DisturbanceModel::truncated_gaussian(int n_xi, int T, const Eigen::VectorXd& c,
                                                      const Eigen::MatrixXd& L,
                                                      const Eigen::MatrixXd& sigma_g,
                                                      long mc_samples, std::uint64_t mc_seed) {
  DisturbanceModel m;
  m.family_ = Family::TruncatedGaussian;
  m.init_support(n_xi, T, c, L);
  const int d = m.d_;
  if (sigma_g.rows() != d || sigma_g.cols() != d) {
    throw DimensionError("DisturbanceModel: Sigma_g dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (sigma_g + sigma_g.transpose()));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("DisturbanceModel: Sigma_g must be positive definite");
  }
  m.sigma_chol_ = llt.matrixL();
  if (mc_samples < 2) throw DimensionError("DisturbanceModel: mc_samples must be >= 2");
  m.mc_samples_ = mc_samples;
  m.mc_seed_ = mc_seed;

  // Estimated moments; per-entry standard errors decide the noise flag.
  const Eigen::MatrixXd rows = m.sample_rows(mc_samples, mc_seed);
  const long n = mc_samples;
  Eigen::MatrixXd mean_outer = Eigen::MatrixXd::Zero(d + 1, d + 1);
  Eigen::MatrixXd mean_outer_sq = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (long k = 0; k < n; ++k) {
    const Eigen::MatrixXd outer = rows.row(k).transpose() * rows.row(k);
    mean_outer += outer;
    mean_outer_sq += outer.cwiseProduct(outer);
  }
  mean_outer /= static_cast<double>(n);
  mean_outer_sq /= static_cast<double>(n);
  m.M_ = 0.5 * (mean_outer + mean_outer.transpose());
  const Eigen::MatrixXd var = (mean_outer_sq - mean_outer.cwiseProduct(mean_outer)).cwiseMax(0.0);
  const double max_se = (var / static_cast<double>(n)).cwiseSqrt().maxCoeff();
  m.moment_noisy_ = max_se > 1e-3 * m.M_.norm();
  m.check_moment_pd();
  return m;
}

DisturbanceModel DisturbanceModel::user_moments(int n_xi, int T, const Eigen::VectorXd& c,
                                                const Eigen::MatrixXd& L,
                                                const Eigen::MatrixXd& M) {
  DisturbanceModel m;
  m.family_ = Family::UserMoments;
  m.init_support(n_xi, T, c, L);
  const int nxi = m.dim();
  if (M.rows() != nxi || M.cols() != nxi) {
    std::ostringstream os;
    os << "DisturbanceModel: M is " << M.rows() << "x" << M.cols() << ", expected " << nxi << "x"
       << nxi;
    throw DimensionError(os.str());
  }
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + M.cwiseAbs().maxCoeff())) {
    throw DimensionError("DisturbanceModel: M must be symmetric");
  }
  if (std::abs(M(0, 0) - 1.0) > 1e-9) {
    throw DimensionError("DisturbanceModel: M(0,0) must equal 1 (leading coordinate of xi is 1)");
  }
  m.M_ = 0.5 * (M + M.transpose());
  m.check_moment_pd();
  return m;
}

Eigen::MatrixXd DisturbanceModel::sample_rows(long n, std::uint64_t seed) const {
  const int d = d_;
  Eigen::MatrixXd out(n, d + 1);
  out.col(0).setOnes();
  Rng rng(seed);
  if (family_ == Family::TruncatedGaussian) {
    long proposals = 0;
    for (long k = 0; k < n; ++k) {
      for (;;) {
        ++proposals;
        const Eigen::VectorXd zeta = c_ + sigma_chol_ * rng.normal_vector(d);
        if ((L_inv_ * (zeta - c_)).norm() <= 1.0) {
          out.row(k).tail(d) = zeta.transpose();
          break;
        }
        if (proposals >= 10000 &&
            static_cast<double>(k + 1) / static_cast<double>(proposals) < 1e-4) {
          throw RejectionRateError(
              "DisturbanceModel: truncated-Gaussian acceptance rate below 1e-4; the support "
              "ellipsoid is too improbable under Sigma_g");
        }
      }
    }
  } else {
    // Uniform on the ellipsoid: Gaussian direction, radius U^(1/d).
    for (long k = 0; k < n; ++k) {
      Eigen::VectorXd dir;
      double norm = 0.0;
      do {
        dir = rng.normal_vector(d);
        norm = dir.norm();
      } while (norm == 0.0);
      const double radius = std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
      out.row(k).tail(d) = (c_ + L_ * (dir * (radius / norm))).transpose();
    }
  }
  return out;
}

Eigen::MatrixXd DisturbanceModel::sample(long n, std::uint64_t seed) const {
  if (n < 1) throw DimensionError("DisturbanceModel::sample: n must be >= 1");
  if (family_ == Family::UserMoments) {
    throw Error(
        "DisturbanceModel::sample: the user-supplied-moments family has no generative model; "
        "use uniform_ellipsoid or truncated_gaussian for Monte Carlo work");
  }
  return sample_rows(n, seed);
}

double DisturbanceModel::support_margin(const Eigen::VectorXd& xi) const {
  if (xi.size() != dim()) throw DimensionError("support_margin: xi has wrong length");
  return 1.0 - (L_inv_ * (xi.tail(d_) - c_)).norm();
}

}  // namespace decrelax
