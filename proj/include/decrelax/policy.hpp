#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "decrelax/info_graph.hpp"
#include "decrelax/ltv_system.hpp"
#include "decrelax/stacking.hpp"

namespace decrelax {

// Free-entry mask for causal affine controllers respecting an information
// graph. Entry (row of u_i(t), column of y_j(s)) is free iff (j, i) is an
// edge and s <= t; column 0 (the constant output entry) is free in every row
// and encodes the affine offset. Any matrix respecting the mask is block
// lower triangular in time.
struct SparsityPattern {
  int Nu = 0, Ny = 0;
  std::vector<uint8_t> mask;                      // row-major Nu x Ny
  std::vector<std::pair<int, int>> free_entries;  // (row, col), row-major order
  Eigen::MatrixXi index;                          // packed position, -1 if frozen

  int n_free() const { return static_cast<int>(free_entries.size()); }
  bool is_free(int r, int c) const { return mask[static_cast<size_t>(r) * Ny + c] != 0; }

  Eigen::VectorXd pack(const Eigen::MatrixXd& Q) const;
  Eigen::MatrixXd unpack(const Eigen::VectorXd& v) const;

  // Max |Q| over frozen entries; 0 for a mask-respecting Q.
  double off_pattern_magnitude(const Eigen::MatrixXd& Q) const;
};

SparsityPattern sparsity_pattern(const LtvSystem& sys, const InfoGraph& g);

// Output-feedback gain from a Youla parameter: K = Q (I + CB Q)^{-1}.
// I + CB Q is unit lower triangular for causal Q, so the inverse is a
// triangular substitution.
Eigen::MatrixXd youla_to_feedback(const Eigen::MatrixXd& Q, const StackedSystem& stk);

// Inverse map: Q = K (I - CB K)^{-1}.
Eigen::MatrixXd feedback_to_youla(const Eigen::MatrixXd& K, const StackedSystem& stk);

}  // namespace decrelax
