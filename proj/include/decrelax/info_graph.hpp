#pragma once

#include <string>
#include <utility>
#include <vector>

#include "decrelax/common.hpp"
#include "decrelax/ltv_system.hpp"

namespace decrelax {

// Directed graph on the subsystem set. Edge (i, j) grants controller j
// access to subsystem i's outputs at all times. Self-loops are mandatory
// (each controller sees its own output); the constructor rejects graphs
// without them. Nodes are 0-based in this API and 1-based in files.
class InfoGraph {
 public:
  InfoGraph(int n, const std::vector<std::pair<int, int>>& edges);

  static InfoGraph self_loops(int n);
  static InfoGraph complete(int n);

  int size() const { return n_; }
  bool has_edge(int i, int j) const { return adj_[idx(i, j)] != 0; }

  // Canonically sorted edge list, so equality is syntactic.
  std::vector<std::pair<int, int>> edges() const;
  int edge_count() const;

  bool subgraph_of(const InfoGraph& other) const;
  bool operator==(const InfoGraph& other) const { return n_ == other.n_ && adj_ == other.adj_; }
  bool operator!=(const InfoGraph& other) const { return !(*this == other); }

 private:
  friend InfoGraph transitive_closure(const InfoGraph&);
  friend class GraphBuilder;
  explicit InfoGraph(int n) : n_(n), adj_(static_cast<size_t>(n) * n, 0) {}
  int idx(int i, int j) const { return i * n_ + j; }
  void check_node(int i) const;
  void require_self_loops() const;

  int n_;
  std::vector<uint8_t> adj_;
};

// Edge (j, i) present iff subsystem j is a precedent to subsystem i under g:
// exists 0 <= s < t <= T-1 and k with (k, i) in g such that the (k, j) block
// of C(t) A_{s+1}^t B(s) is nonzero at tolerance tau_z. Throws
// AssumptionError if a self-loop would be absent (Assumption 1 fails).
InfoGraph precedence_graph(const LtvSystem& sys, const InfoGraph& g,
                           double tau_z = kDefaultTauZ);

// Warshall's algorithm; (i, j) in the result iff a directed path i -> j
// exists in g. Idempotent.
InfoGraph transitive_closure(const InfoGraph& g);

// Fixed-point test: g is partially nested iff it equals the transitive
// closure of its own precedence graph.
bool is_partially_nested(const LtvSystem& sys, const InfoGraph& g, double tau_z = kDefaultTauZ);

// The optimal partially nested expansion of g: transitive closure of the
// precedence graph. Postconditions (supergraph of g, partial nestedness)
// are asserted; failure indicates tau_z instability and throws Error with
// diagnostics.
InfoGraph relax_information(const LtvSystem& sys, const InfoGraph& g,
                            double tau_z = kDefaultTauZ);

// Like relax_information but tolerant of Assumption-1 failures: closes
// (precedence edges ∪ g) transitively instead of erroring. Equals
// relax_information whenever Assumption 1 holds. Used by the CLI's --force.
InfoGraph relax_information_forced(const LtvSystem& sys, const InfoGraph& g,
                                   double tau_z = kDefaultTauZ);

// GraphViz DOT rendering (1-based node labels).
std::string to_dot(const InfoGraph& g, const std::string& name = "info_graph");

}  // namespace decrelax
