#include "decrelax/problem_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "decrelax/stacking.hpp"

namespace decrelax {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw SchemaError("problem file: " + where + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, std::string("missing \"") + key + "\"");
  return j.at(key);
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int int_at(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

// Dimension lists may be a scalar (replicated N times) or a length-N array.
std::vector<int> dims_at(const json& j, int n, const std::string& where) {
  std::vector<int> out;
  if (j.is_number_integer()) {
    out.assign(n, j.get<int>());
  } else if (j.is_array()) {
    if (static_cast<int>(j.size()) != n) fail(where, "expected length-N array");
    for (const auto& v : j) out.push_back(int_at(v, where));
  } else {
    fail(where, "expected an integer or an array of integers");
  }
  return out;
}

Eigen::VectorXd vector_at(const json& j, int len, const std::string& where) {
  if (j.is_number()) return Eigen::VectorXd::Constant(len, j.get<double>());
  if (!j.is_array() || static_cast<int>(j.size()) != len) {
    std::ostringstream os;
    os << "expected a scalar or an array of length " << len;
    fail(where, os.str());
  }
  Eigen::VectorXd v(len);
  for (int i = 0; i < len; ++i) v[i] = number_at(j.at(i), where);
  return v;
}

bool is_explicit_matrix(const json& j) {
  return j.is_array() && !j.empty() && j.at(0).is_array() &&
         (j.at(0).empty() || j.at(0).at(0).is_number());
}

// Matrix forms: explicit [[..],[..]]; {"identity": s}; {"diag": [..]};
// {"zero": true}; bare number s (s * I, square shapes only).
Eigen::MatrixXd matrix_at(const json& j, int rows, int cols, const std::string& where) {
  if (j.is_number()) {
    if (rows != cols) fail(where, "scalar shorthand requires a square matrix");
    return j.get<double>() * Eigen::MatrixXd::Identity(rows, cols);
  }
  if (j.is_object()) {
    if (j.contains("identity")) {
      if (rows != cols) fail(where, "identity shorthand requires a square matrix");
      const json& s = j.at("identity");
      const double scale = s.is_boolean() ? 1.0 : number_at(s, where);
      return scale * Eigen::MatrixXd::Identity(rows, cols);
    }
    if (j.contains("diag")) {
      if (rows != cols) fail(where, "diag shorthand requires a square matrix");
      const Eigen::VectorXd d = vector_at(j.at("diag"), rows, where + ".diag");
      return d.asDiagonal();
    }
    if (j.contains("zero")) return Eigen::MatrixXd::Zero(rows, cols);
    fail(where, "unknown matrix shorthand (use identity/diag/zero or an explicit array)");
  }
  if (!is_explicit_matrix(j)) fail(where, "expected a matrix");
  if (static_cast<int>(j.size()) != rows) {
    std::ostringstream os;
    os << "expected " << rows << " rows, got " << j.size();
    fail(where, os.str());
  }
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      std::ostringstream os;
      os << "row " << r << ": expected " << cols << " entries";
      fail(where, os.str());
    }
    for (int c = 0; c < cols; ++c) m(r, c) = number_at(row.at(c), where);
  }
  return m;
}

// Per-timestep matrix list: single spec replicated, or a length-T array of specs.
std::vector<Eigen::MatrixXd> time_matrices_at(const json& j, int T, int rows, int cols,
                                              const std::string& where) {
  const bool per_step_list = j.is_array() && !is_explicit_matrix(j);
  std::vector<Eigen::MatrixXd> out;
  if (per_step_list) {
    if (static_cast<int>(j.size()) != T) {
      std::ostringstream os;
      os << "expected " << T << " per-timestep matrices";
      fail(where, os.str());
    }
    for (int t = 0; t < T; ++t) {
      out.push_back(matrix_at(j.at(t), rows, cols, where + "[" + std::to_string(t) + "]"));
    }
  } else {
    out.assign(T, matrix_at(j, rows, cols, where));
  }
  return out;
}

// Cost matrices additionally accept a per-step diagonal tiled over the horizon.
Eigen::MatrixXd cost_matrix_at(const json& j, int full, int per_step, int reps,
                               const std::string& where) {
  if (j.is_object() && j.contains("diag") && j.at("diag").is_array() &&
      static_cast<int>(j.at("diag").size()) == per_step && per_step != full) {
    const Eigen::VectorXd d = vector_at(j.at("diag"), per_step, where + ".diag");
    Eigen::VectorXd tiled(full);
    for (int r = 0; r < reps; ++r) tiled.segment(r * per_step, per_step) = d;
    return tiled.asDiagonal();
  }
  return matrix_at(j, full, full, where);
}

InfoGraph graph_at(const json& j, int n, const std::string& where) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "complete") return InfoGraph::complete(n);
    if (s == "self_loops") return InfoGraph::self_loops(n);
    fail(where, "unknown graph shorthand \"" + s + "\" (use complete or self_loops)");
  }
  const json& edges = member(j, "edges", where);
  if (!edges.is_array()) fail(where + ".edges", "expected an array of [i, j] pairs");
  std::vector<std::pair<int, int>> e;
  for (const auto& pair : edges) {
    if (!pair.is_array() || pair.size() != 2) fail(where + ".edges", "each edge must be [i, j]");
    const int i = int_at(pair.at(0), where + ".edges");
    const int j1 = int_at(pair.at(1), where + ".edges");
    if (i < 1 || i > n || j1 < 1 || j1 > n) fail(where + ".edges", "node index out of range (1-based)");
    e.emplace_back(i - 1, j1 - 1);  // files are 1-based
  }
  return InfoGraph(n, e);
}

struct BoxRows {
  std::vector<Eigen::RowVectorXd> fx, fu, fxi;
};

void add_box_rows(BoxRows& rows, const json& spec, int per_step, int steps, int step_stride,
                  int coord_offset, bool is_state, bool upper, int Nx, int Nu, int Nxi,
                  const std::string& where) {
  const Eigen::VectorXd bound = vector_at(spec, per_step, where);
  for (int t = 0; t < steps; ++t) {
    for (int k = 0; k < per_step; ++k) {
      Eigen::RowVectorXd fx = Eigen::RowVectorXd::Zero(Nx);
      Eigen::RowVectorXd fu = Eigen::RowVectorXd::Zero(Nu);
      Eigen::RowVectorXd fxi = Eigen::RowVectorXd::Zero(Nxi);
      const int col = coord_offset + t * step_stride + k;
      const double sign = upper ? 1.0 : -1.0;
      if (is_state) {
        fx[col] = sign;
      } else {
        fu[col] = sign;
      }
      fxi[0] = -sign * bound[k];
      rows.fx.push_back(fx);
      rows.fu.push_back(fu);
      rows.fxi.push_back(fxi);
    }
  }
}

}  // namespace

Problem parse_problem(const json& j) {
  if (!j.is_object()) throw SchemaError("problem file: top level must be an object");

  // --- system ---
  const json& jsys = member(j, "system", "$");
  LtvSystem sys;
  sys.N = int_at(member(jsys, "N", "system"), "system.N");
  sys.T = int_at(member(jsys, "T", "system"), "system.T");
  if (sys.N < 1 || sys.T < 1) fail("system", "N and T must be >= 1");
  sys.nx_sub = dims_at(member(jsys, "n_x", "system"), sys.N, "system.n_x");
  sys.nu_sub = dims_at(member(jsys, "n_u", "system"), sys.N, "system.n_u");
  sys.ny_sub = dims_at(member(jsys, "n_y", "system"), sys.N, "system.n_y");
  sys.n_xi = int_at(member(jsys, "n_xi", "system"), "system.n_xi");
  const int nx = sys.nx(), nu = sys.nu(), ny = sys.ny();
  sys.x0 = vector_at(member(jsys, "x0", "system"), nx, "system.x0");
  sys.A = time_matrices_at(member(jsys, "A", "system"), sys.T, nx, nx, "system.A");
  sys.B = time_matrices_at(member(jsys, "B", "system"), sys.T, nx, nu, "system.B");
  sys.G = time_matrices_at(member(jsys, "G", "system"), sys.T, nx, sys.n_xi, "system.G");
  sys.C = time_matrices_at(member(jsys, "C", "system"), sys.T, ny, nx, "system.C");
  sys.H = time_matrices_at(member(jsys, "H", "system"), sys.T, ny, sys.n_xi, "system.H");
  sys.validate();
  const StackedSystem stk = stack_system(sys);

  // --- graph ---
  InfoGraph graph = graph_at(member(j, "graph", "$"), sys.N, "graph");

  // --- disturbance ---
  const json& jd = member(j, "disturbance", "$");
  const int d = sys.n_xi * sys.T;
  const std::string family =
      member(jd, "family", "disturbance").is_string()
          ? jd.at("family").get<std::string>()
          : (fail("disturbance.family", "expected a string"), "");
  const Eigen::VectorXd c = jd.contains("c") ? vector_at(jd.at("c"), d, "disturbance.c")
                                             : Eigen::VectorXd::Zero(d);
  const Eigen::MatrixXd L = jd.contains("L")
                                ? matrix_at(jd.at("L"), d, d, "disturbance.L")
                                : Eigen::MatrixXd::Identity(d, d);
  std::optional<DisturbanceModel> dist;
  if (family == "uniform_ellipsoid") {
    dist = DisturbanceModel::uniform_ellipsoid(sys.n_xi, sys.T, c, L);
  } else if (family == "truncated_gaussian") {
    const Eigen::MatrixXd sg =
        matrix_at(member(jd, "Sigma_g", "disturbance"), d, d, "disturbance.Sigma_g");
    long mc_samples = 200000;
    std::uint64_t mc_seed = 961748941;
    if (jd.contains("mc_samples")) mc_samples = jd.at("mc_samples").get<long>();
    if (jd.contains("mc_seed")) mc_seed = jd.at("mc_seed").get<std::uint64_t>();
    dist = DisturbanceModel::truncated_gaussian(sys.n_xi, sys.T, c, L, sg, mc_samples, mc_seed);
  } else if (family == "user_moments") {
    const Eigen::MatrixXd M =
        matrix_at(member(jd, "M", "disturbance"), d + 1, d + 1, "disturbance.M");
    dist = DisturbanceModel::user_moments(sys.n_xi, sys.T, c, L, M);
  } else {
    fail("disturbance.family", "unknown family \"" + family + "\"");
  }

  // --- constraints (optional) ---
  ConstraintData cons = ConstraintData::empty(stk);
  if (j.contains("constraints") && !j.at("constraints").is_null()) {
    const json& jc = j.at("constraints");
    BoxRows rows;
    if (jc.contains("F_x") || jc.contains("F_u") || jc.contains("F_xi")) {
      const json& jfx = member(jc, "F_x", "constraints");
      if (!is_explicit_matrix(jfx)) fail("constraints.F_x", "expected an explicit matrix");
      const int m = static_cast<int>(jfx.size());
      const Eigen::MatrixXd fx = matrix_at(jfx, m, stk.Nx, "constraints.F_x");
      const Eigen::MatrixXd fu =
          matrix_at(member(jc, "F_u", "constraints"), m, stk.Nu, "constraints.F_u");
      const Eigen::MatrixXd fxi =
          matrix_at(member(jc, "F_xi", "constraints"), m, stk.Nxi, "constraints.F_xi");
      for (int i = 0; i < m; ++i) {
        rows.fx.push_back(fx.row(i));
        rows.fu.push_back(fu.row(i));
        rows.fxi.push_back(fxi.row(i));
      }
    }
    if (jc.contains("u_upper"))
      add_box_rows(rows, jc.at("u_upper"), nu, sys.T, nu, 0, false, true, stk.Nx, stk.Nu, stk.Nxi,
                   "constraints.u_upper");
    if (jc.contains("u_lower"))
      add_box_rows(rows, jc.at("u_lower"), nu, sys.T, nu, 0, false, false, stk.Nx, stk.Nu,
                   stk.Nxi, "constraints.u_lower");
    if (jc.contains("x_upper"))
      add_box_rows(rows, jc.at("x_upper"), nx, sys.T + 1, nx, 0, true, true, stk.Nx, stk.Nu,
                   stk.Nxi, "constraints.x_upper");
    if (jc.contains("x_lower"))
      add_box_rows(rows, jc.at("x_lower"), nx, sys.T + 1, nx, 0, true, false, stk.Nx, stk.Nu,
                   stk.Nxi, "constraints.x_lower");
    const int m = static_cast<int>(rows.fx.size());
    cons.F_x.resize(m, stk.Nx);
    cons.F_u.resize(m, stk.Nu);
    cons.F_xi.resize(m, stk.Nxi);
    for (int i = 0; i < m; ++i) {
      cons.F_x.row(i) = rows.fx[i];
      cons.F_u.row(i) = rows.fu[i];
      cons.F_xi.row(i) = rows.fxi[i];
    }
    cons.validate(stk);
  }

  // --- cost ---
  const json& jcost = member(j, "cost", "$");
  const Eigen::MatrixXd rx =
      cost_matrix_at(member(jcost, "R_x", "cost"), stk.Nx, nx, sys.T + 1, "cost.R_x");
  const Eigen::MatrixXd ru =
      cost_matrix_at(member(jcost, "R_u", "cost"), stk.Nu, nu, sys.T, "cost.R_u");
  CostData cost = CostData::validated(rx, ru);

  // --- options ---
  ProblemOptions options;
  if (j.contains("options") && !j.at("options").is_null()) {
    const json& jo = j.at("options");
    if (jo.contains("tol")) options.tol = number_at(jo.at("tol"), "options.tol");
    if (jo.contains("seed")) options.seed = jo.at("seed").get<std::uint64_t>();
    if (jo.contains("samples")) options.samples = jo.at("samples").get<long>();
    if (jo.contains("tau_z")) options.tau_z = number_at(jo.at("tau_z"), "options.tau_z");
    if (jo.contains("upper_graph"))
      options.upper_graph = graph_at(jo.at("upper_graph"), sys.N, "options.upper_graph");
    if (options.tol <= 0 || options.samples < 1 || options.tau_z < 0)
      fail("options", "tol/samples/tau_z out of range");
  }

  return Problem{std::move(sys), std::move(graph), std::move(*dist), std::move(cons),
                 std::move(cost), std::move(options)};
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("JSON parse error in ") + path + ": " + e.what());
  }
  return parse_problem(j);
}

}  // namespace decrelax
