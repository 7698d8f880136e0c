#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "decrelax/common.hpp"

namespace decrelax {

// Elliptically contoured disturbance trajectory xi = (1, xi(0..T-1)) with
// ellipsoidal support { (1, c + L v) : ||v|| <= 1 }, L invertible. Holds the
// support matrix W (W xi in K2 iff the trailing part lies in the ellipsoid)
// and the second-moment matrix M = E[xi xi^T], which must be positive
// definite. Immutable; sampling takes an explicit seed.
class DisturbanceModel {
 public:
  enum class Family { UniformEllipsoid, TruncatedGaussian, UserMoments };

  static DisturbanceModel uniform_ellipsoid(int n_xi, int T, const Eigen::VectorXd& c,
                                            const Eigen::MatrixXd& L);
  // Pre-truncation N(c, Sigma_g) conditioned on the support ellipsoid. The
  // moment matrix is a Monte Carlo estimate; mc_samples and mc_seed are
  // recorded for reproducibility.
  static DisturbanceModel truncated_gaussian(int n_xi, int T, const Eigen::VectorXd& c,
                                             const Eigen::MatrixXd& L,
                                             const Eigen::MatrixXd& sigma_g,
                                             long mc_samples = 200000,
                                             std::uint64_t mc_seed = 961748941);
  // Caller-supplied lifted moment matrix (validated only; no sampler).
  static DisturbanceModel user_moments(int n_xi, int T, const Eigen::VectorXd& c,
                                       const Eigen::MatrixXd& L, const Eigen::MatrixXd& M);

  Family family() const { return family_; }
  std::string family_name() const;
  int per_step_dim() const { return n_xi_; }
  int horizon() const { return T_; }
  int support_dim() const { return d_; }      // n_xi * T
  int dim() const { return d_ + 1; }          // N_xi, with the leading constant

  const Eigen::MatrixXd& support_matrix() const { return W_; }
  const Eigen::MatrixXd& moment_matrix() const { return M_; }
  const Eigen::VectorXd& center() const { return c_; }
  const Eigen::MatrixXd& shape() const { return L_; }

  // n rows, each an i.i.d. draw of xi (first entry 1). Deterministic given
  // the seed. Throws for the user-moments family (no generative model) and
  // RejectionRateError if truncated-Gaussian acceptance falls below 1e-4.
  Eigen::MatrixXd sample(long n, std::uint64_t seed) const;

  // 1 - ||L^{-1}(zeta - c)|| for xi = (1, zeta); >= 0 iff xi is in support.
  double support_margin(const Eigen::VectorXd& xi) const;

  bool moment_estimate_noisy() const { return moment_noisy_; }
  long mc_samples() const { return mc_samples_; }
  std::uint64_t mc_seed() const { return mc_seed_; }

 private:
  DisturbanceModel() = default;
  void init_support(int n_xi, int T, const Eigen::VectorXd& c, const Eigen::MatrixXd& L);
  void check_moment_pd() const;
  Eigen::MatrixXd sample_rows(long n, std::uint64_t seed) const;

  Family family_ = Family::UniformEllipsoid;
  int n_xi_ = 0, T_ = 0, d_ = 0;
  Eigen::VectorXd c_;
  Eigen::MatrixXd L_, L_inv_, sigma_chol_;
  Eigen::MatrixXd W_, M_;
  long mc_samples_ = 0;
  std::uint64_t mc_seed_ = 0;
  bool moment_noisy_ = false;
};

}  // namespace decrelax
