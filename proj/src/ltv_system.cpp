#include "decrelax/ltv_system.hpp"

#include <numeric>
#include <sstream>

namespace decrelax {

namespace {

int sum(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); }

int prefix(const std::vector<int>& v, int i) {
  return std::accumulate(v.begin(), v.begin() + i, 0);
}

void require_shape(const Eigen::MatrixXd& m, int rows, int cols, const char* name, int t) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << "LtvSystem: " << name << "(" << t << ") has shape " << m.rows() << "x" << m.cols()
       << ", expected " << rows << "x" << cols;
    throw DimensionError(os.str());
  }
}

}  // namespace

int LtvSystem::nx() const { return sum(nx_sub); }
int LtvSystem::nu() const { return sum(nu_sub); }
int LtvSystem::ny() const { return sum(ny_sub); }

int LtvSystem::x_offset(int i) const { return prefix(nx_sub, i); }
int LtvSystem::u_offset(int i) const { return prefix(nu_sub, i); }
int LtvSystem::y_offset(int i) const { return prefix(ny_sub, i); }

void LtvSystem::validate() const {
  if (N < 1) throw DimensionError("LtvSystem: N must be >= 1");
  if (T < 1) throw DimensionError("LtvSystem: T must be >= 1");
  if (n_xi < 1) throw DimensionError("LtvSystem: n_xi must be >= 1");
  if (static_cast<int>(nx_sub.size()) != N || static_cast<int>(nu_sub.size()) != N ||
      static_cast<int>(ny_sub.size()) != N) {
    throw DimensionError("LtvSystem: per-subsystem dimension lists must have length N");
  }
  for (int i = 0; i < N; ++i) {
    if (nx_sub[i] < 1 || nu_sub[i] < 1 || ny_sub[i] < 1) {
      std::ostringstream os;
      os << "LtvSystem: subsystem " << (i + 1) << " has a dimension < 1";
      throw DimensionError(os.str());
    }
  }
  if (static_cast<int>(A.size()) != T || static_cast<int>(B.size()) != T ||
      static_cast<int>(G.size()) != T || static_cast<int>(C.size()) != T ||
      static_cast<int>(H.size()) != T) {
    throw DimensionError("LtvSystem: A,B,G,C,H must each have T entries");
  }
  const int n_x = nx(), n_u = nu(), n_y = ny();
  if (x0.size() != n_x) {
    std::ostringstream os;
    os << "LtvSystem: x0 has length " << x0.size() << ", expected " << n_x;
    throw DimensionError(os.str());
  }
  for (int t = 0; t < T; ++t) {
    require_shape(A[t], n_x, n_x, "A", t);
    require_shape(B[t], n_x, n_u, "B", t);
    require_shape(G[t], n_x, n_xi, "G", t);
    require_shape(C[t], n_y, n_x, "C", t);
    require_shape(H[t], n_y, n_xi, "H", t);
  }
}

}  // namespace decrelax
