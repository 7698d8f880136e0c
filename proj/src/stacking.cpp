#include "decrelax/stacking.hpp"

#include <sstream>
#include <stdexcept>

namespace decrelax {

int StackedSystem::x_row(int t, int i) const {
  int off = 0;
  for (int k = 0; k < i; ++k) off += nx_sub[k];
  return x_row(t) + off;
}

int StackedSystem::u_col(int t, int i) const {
  int off = 0;
  for (int k = 0; k < i; ++k) off += nu_sub[k];
  return u_col(t) + off;
}

int StackedSystem::y_row(int t, int i) const {
  int off = 0;
  for (int k = 0; k < i; ++k) off += ny_sub[k];
  return y_row(t) + off;
}

StackedSystem stack_system(const LtvSystem& sys) {
  sys.validate();
  StackedSystem s;
  s.N = sys.N;
  s.T = sys.T;
  s.nx = sys.nx();
  s.nu = sys.nu();
  s.ny = sys.ny();
  s.n_xi = sys.n_xi;
  s.nx_sub = sys.nx_sub;
  s.nu_sub = sys.nu_sub;
  s.ny_sub = sys.ny_sub;
  const int T = sys.T;
  s.Nx = s.nx * (T + 1);
  s.Nu = s.nu * T;
  s.Ny = 1 + s.ny * T;
  s.Nxi = 1 + s.n_xi * T;

  s.B = Eigen::MatrixXd::Zero(s.Nx, s.Nu);
  s.G = Eigen::MatrixXd::Zero(s.Nx, s.Nxi);
  s.C = Eigen::MatrixXd::Zero(s.Ny, s.Nx);
  s.H = Eigen::MatrixXd::Zero(s.Ny, s.Nxi);

  // B block (t, col s) = A_{s+1}^t B(s) for s < t, via the running product
  // R_{s+1} = B(s), R_{t+1} = A(t) R_t. Same recurrence for G with G(s).
  for (int col = 0; col < T; ++col) {
    Eigen::MatrixXd rb = sys.B[col];
    Eigen::MatrixXd rg = sys.G[col];
    for (int t = col + 1; t <= T; ++t) {
      s.B.block(s.x_row(t), s.u_col(col), s.nx, s.nu) = rb;
      s.G.block(s.x_row(t), s.xi_col(col), s.nx, s.n_xi) = rg;
      if (t < T) {
        rb = sys.A[t] * rb;
        rg = sys.A[t] * rg;
      }
    }
  }
  // First column of G carries the free response A_0^t x(0).
  Eigen::VectorXd free_resp = sys.x0;
  for (int t = 0; t <= T; ++t) {
    s.G.block(s.x_row(t), 0, s.nx, 1) = free_resp;
    if (t < T) free_resp = sys.A[t] * free_resp;
  }

  // y(t) = C(t) x(t) + H(t) xi(t); row 0 of C is zero and H(0,0) = 1 so the
  // leading output entry is the constant 1.
  s.H(0, 0) = 1.0;
  for (int t = 0; t < T; ++t) {
    s.C.block(s.y_row(t), s.x_row(t), s.ny, s.nx) = sys.C[t];
    s.H.block(s.y_row(t), s.xi_col(t), s.ny, s.n_xi) = sys.H[t];
  }

  s.P = s.C * s.G + s.H;
  s.CB = s.C * s.B;
  return s;
}

Eigen::MatrixXd state_transition(const LtvSystem& sys, int s, int t) {
  if (s < 0 || t < s || t > sys.T) {
    std::ostringstream os;
    os << "state_transition: need 0 <= s <= t <= T, got s=" << s << " t=" << t << " T=" << sys.T;
    throw std::out_of_range(os.str());
  }
  const int n = sys.nx();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (int r = s; r < t; ++r) m = sys.A[r] * m;
  return m;
}

MarkovBlocks markov_blocks(const LtvSystem& sys) {
  sys.validate();
  const int T = sys.T;
  MarkovBlocks mb;
  mb.T = T;
  mb.block.assign(T, {});
  mb.factor_scale.assign(T, {});
  for (int t = 0; t < T; ++t) {
    mb.block[t].resize(t);
    mb.factor_scale[t].resize(t);
  }
  for (int s = 0; s + 1 < T; ++s) {
    // chain = A_{s+1}^t B(s), advanced one step per t.
    Eigen::MatrixXd chain = sys.B[s];
    for (int t = s + 1; t < T; ++t) {
      mb.block[t][s] = sys.C[t] * chain;
      const double cs = sys.C[t].cwiseAbs().maxCoeff();
      const double bs = chain.size() > 0 ? chain.cwiseAbs().maxCoeff() : 0.0;
      mb.factor_scale[t][s] = std::max(cs, bs);
      if (t + 1 < T) chain = sys.A[t] * chain;
    }
  }
  return mb;
}

bool block_is_nonzero(const Eigen::Ref<const Eigen::MatrixXd>& block, double factor_scale,
                      double tau_z) {
  if (block.size() == 0) return false;
  return block.cwiseAbs().maxCoeff() > tau_z * (1.0 + factor_scale);
}

std::vector<bool> check_assumption_1(const LtvSystem& sys, double tau_z) {
  const MarkovBlocks mb = markov_blocks(sys);
  std::vector<bool> ok(sys.N, false);
  for (int i = 0; i < sys.N; ++i) {
    const int ro = sys.y_offset(i), co = sys.u_offset(i);
    for (int t = 0; t < sys.T && !ok[i]; ++t) {
      for (int s = 0; s < t && !ok[i]; ++s) {
        if (block_is_nonzero(mb.block[t][s].block(ro, co, sys.ny_sub[i], sys.nu_sub[i]),
                             mb.factor_scale[t][s], tau_z)) {
          ok[i] = true;
        }
      }
    }
  }
  return ok;
}

}  // namespace decrelax
