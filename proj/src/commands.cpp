#include "decrelax/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "decrelax/problem_io.hpp"
#include "decrelax/sha256.hpp"
#include "decrelax/simulate.hpp"

namespace decrelax {

namespace {

using ordered_json = nlohmann::ordered_json;

// Reports carry floats at 12 significant digits; rounding through text keeps
// the serialized form stable across runs.
double round12(double v) {
  if (!std::isfinite(v)) return v;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(round12(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(round12(v[i]));
  return out;
}

ordered_json graph_json(const InfoGraph& g) {
  ordered_json edges = ordered_json::array();
  for (const auto& [i, j] : g.edges()) edges.push_back({i + 1, j + 1});
  return edges;
}

ordered_json solve_stats_json(const SolveResult& s) {
  ordered_json j;
  j["status"] = status_name(s.status);
  j["iterations"] = s.iterations;
  j["objective"] = round12(s.objective);
  j["eq_residual"] = round12(s.eq_residual);
  j["cone_margin"] = round12(s.cone_margin);
  j["dual_residual"] = round12(s.dual_residual);
  j["gap"] = round12(s.gap);
  if (!s.message.empty()) j["message"] = s.message;
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> mask_rows(const SparsityPattern& pat) {
  std::vector<std::string> rows;
  rows.reserve(pat.Nu);
  for (int r = 0; r < pat.Nu; ++r) {
    std::string s(pat.Ny, '0');
    for (int c = 0; c < pat.Ny; ++c)
      if (pat.is_free(r, c)) s[c] = '1';
    rows.push_back(std::move(s));
  }
  return rows;
}

int classify_error_exit(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return 2;
  if (dynamic_cast<const AssumptionError*>(&e)) return 3;
  if (dynamic_cast<const NotPositiveDefiniteError*>(&e)) return 3;
  return 2;
}

struct PipelineSettings {
  CertifyOptions certify;
  std::uint64_t seed = 0;
  long samples = 0;
};

PipelineSettings settings_from(const Problem& prob, const BoundFlags& flags) {
  PipelineSettings s;
  const bool any = flags.lower || flags.upper;
  s.certify.run_lower = !any || flags.lower || flags.gap;
  s.certify.run_upper = !any || flags.upper || flags.gap;
  s.certify.force = flags.force;
  s.certify.tau_z = prob.options.tau_z;
  s.certify.upper_graph = prob.options.upper_graph;
  double tol = flags.tol.value_or(prob.options.tol);
  if (const char* env = std::getenv("DECRELAX_SOLVER_TOL")) {
    if (!flags.tol) {
      const double v = std::strtod(env, nullptr);
      if (v > 0) tol = v;
    }
  }
  s.certify.solver.tol_abs = tol;
  s.certify.solver.tol_rel = tol;
  s.seed = flags.seed.value_or(prob.options.seed);
  s.samples = flags.samples.value_or(prob.options.samples);
  if (flags.simulate_n > 0) s.samples = flags.simulate_n;
  return s;
}

ordered_json simulation_json(const SimulationResult& sim, std::uint64_t seed) {
  ordered_json j;
  j["samples"] = sim.samples;
  j["seed"] = seed;
  j["mean_cost"] = round12(sim.mean_cost);
  j["std_error"] = round12(sim.std_error);
  j["max_violation"] = round12(sim.max_violation);
  j["violation_tolerance"] = round12(sim.violation_tolerance);
  j["violation_frequency"] = vector_json(sim.violation_frequency);
  j["moment_residual"] = round12(sim.moment_residual);
  return j;
}

struct BoundRun {
  ordered_json report;
  int exit_code = 0;
  std::optional<double> J_d, J_up, gap_rel;
  bool pn = false;
  int edges_added = 0;
  double t_lower = 0.0, t_upper = 0.0;
};

BoundRun run_bound_pipeline(const std::string& path, const Problem& prob,
                            const BoundFlags& flags) {
  const PipelineSettings st = settings_from(prob, flags);
  BoundRun run;

  const BoundReport rep = certify(prob.sys, prob.graph, prob.dist, prob.cons, prob.cost,
                                  st.certify);
  const StackedSystem stk = stack_system(prob.sys);

  ordered_json& j = run.report;
  j["tool"] = "decrelax";
  j["version"] = "0.1.0";
  {
    ordered_json in;
    in["file"] = path;
    in["sha256"] = sha256_hex(read_file(path));
    in["N"] = prob.sys.N;
    in["T"] = prob.sys.T;
    in["m"] = prob.cons.rows();
    in["graph"] = graph_json(prob.graph);
    in["disturbance_family"] = prob.dist.family_name();
    if (prob.dist.family() == DisturbanceModel::Family::TruncatedGaussian) {
      in["moment_mc_samples"] = prob.dist.mc_samples();
      in["moment_mc_seed"] = prob.dist.mc_seed();
      in["moment_estimate_noisy"] = prob.dist.moment_estimate_noisy();
    }
    in["seed"] = st.seed;
    in["samples"] = st.samples;
    in["solver_tol"] = round12(st.certify.solver.tol_abs);
    in["tau_z"] = round12(st.certify.tau_z);
    j["input"] = std::move(in);
  }
  {
    ordered_json a;
    a["assumption1"] = rep.assumption1;
    a["assumption1_ok"] =
        std::all_of(rep.assumption1.begin(), rep.assumption1.end(), [](bool b) { return b; });
    a["assumption3_self_loops"] = true;  // the graph constructor enforces this
    a["moment_matrix_pd"] = true;        // the disturbance factory enforces this
    a["partially_nested"] = rep.original_pn;
    a["forced"] = rep.forced;
    j["assumptions"] = std::move(a);
  }
  if (rep.relaxed_graph) {
    ordered_json r;
    r["relaxed_graph"] = graph_json(*rep.relaxed_graph);
    run.edges_added = rep.relaxed_graph->edge_count() - prob.graph.edge_count();
    r["edges_added"] = run.edges_added;
    j["relaxation"] = std::move(r);
    run.pn = rep.original_pn;
  }
  if (rep.lower) {
    ordered_json l = solve_stats_json(rep.lower->solve);
    l["J_d"] = round12(rep.lower->J_d);
    l["downgraded"] = rep.lower->downgraded;
    j["lower_bound"] = std::move(l);
    run.J_d = rep.lower->J_d;
    run.t_lower = rep.lower->solve.wall_time_s;
    if (rep.lower->solve.status != SolveStatus::Optimal) run.exit_code = 4;
  }
  if (rep.upper) {
    ordered_json u = solve_stats_json(rep.upper->solve);
    if (!rep.upper->robust_infeasible) {
      u["J_up"] = round12(rep.upper->J_up);
      run.J_up = rep.upper->J_up;
    }
    if (!rep.upper_note.empty()) u["note"] = rep.upper_note;
    j["upper_bound"] = std::move(u);
    run.t_upper = rep.upper->solve.wall_time_s;
    if (rep.upper->robust_infeasible) {
      run.exit_code = 5;  // takes precedence: "no affine upper bound" is the finding
    } else if (rep.upper->solve.status != SolveStatus::Optimal && run.exit_code == 0) {
      run.exit_code = 4;
    }
  } else if (!rep.upper_note.empty()) {
    j["upper_bound"] = ordered_json{{"note", rep.upper_note}};
  }
  if (rep.gap_abs) {
    j["gap"] = ordered_json{{"abs", round12(*rep.gap_abs)}, {"rel", round12(*rep.gap_rel)}};
    run.gap_rel = *rep.gap_rel;
  }
  {
    ordered_json pol;
    if (rep.relaxed_graph) {
      pol["mask_rows"] = mask_rows(sparsity_pattern(prob.sys, *rep.relaxed_graph));
    }
    if (rep.lower) {
      pol["Q_lower"] = matrix_json(rep.Q_lower);
      pol["Z"] = matrix_json(rep.Z);
    }
    if (rep.upper && !rep.upper->robust_infeasible) {
      pol["Q_upper"] = matrix_json(rep.Q_upper);
      pol["K_upper"] = matrix_json(rep.K_upper);
    }
    j["policy"] = std::move(pol);
  }

  if (flags.simulate_n > 0 && rep.upper && !rep.upper->robust_infeasible) {
    const SimulationResult sim = simulate(prob.sys, rep.K_upper, prob.cost, prob.cons, prob.dist,
                                          st.samples, st.seed);
    ordered_json js = simulation_json(sim, st.seed);
    js["predicted_cost"] =
        round12(objective_value(rep.Q_upper, stk, prob.cost, prob.dist.moment_matrix()));
    j["simulation"] = std::move(js);
  }
  return run;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

const char* kCsvHeader =
    "file,N,T,m,partially_nested,edges_added,J_d,J_up,gap_rel,t_lower_s,t_upper_s,error";

std::string csv_row(const std::string& file, const Problem* prob, const BoundRun* run,
                    const std::string& error) {
  std::ostringstream os;
  os << csv_escape(file) << ",";
  if (prob) os << prob->sys.N << "," << prob->sys.T << "," << prob->cons.rows() << ",";
  else os << ",,,";
  if (run) {
    os << (run->pn ? "true" : "false") << "," << run->edges_added << ",";
    if (run->J_d) os << round12(*run->J_d);
    os << ",";
    if (run->J_up) os << round12(*run->J_up);
    os << ",";
    if (run->gap_rel) os << round12(*run->gap_rel);
    os << "," << round12(run->t_lower) << "," << round12(run->t_upper) << ",";
  } else {
    os << ",,,,,,,";
  }
  os << csv_escape(error);
  return os.str();
}

// Minimal glob: '*' and '?' only.
bool wildcard_match(const std::string& pattern, const std::string& text) {
  size_t p = 0, t = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace

CmdResult cmd_check(const std::string& path, const std::string& dot_path) {
  CmdResult res;
  std::ostringstream out;
  try {
    const Problem prob = load_problem(path);
    out << "decrelax check: " << path << "\n";
    const std::vector<bool> a1 = check_assumption_1(prob.sys, prob.options.tau_z);
    bool a1_ok = true;
    out << "assumption 1 (causal input-to-output):";
    for (size_t i = 0; i < a1.size(); ++i) {
      out << " subsystem " << (i + 1) << ": " << (a1[i] ? "PASS" : "FAIL") << ";";
      a1_ok = a1_ok && a1[i];
    }
    out << "\n";
    out << "assumption 2 (disturbance model): PASS (" << prob.dist.family_name()
        << ", moment matrix PD)";
    if (prob.dist.family() == DisturbanceModel::Family::TruncatedGaussian) {
      out << " [moments estimated from " << prob.dist.mc_samples() << " samples, seed "
          << prob.dist.mc_seed() << "]";
      if (prob.dist.moment_estimate_noisy()) {
        out << " WARNING: Monte Carlo standard error exceeds 1e-3 * ||M||";
      }
    }
    out << "\n";
    out << "assumption 3 (self-loops): PASS\n";
    if (a1_ok) {
      const bool pn = is_partially_nested(prob.sys, prob.graph, prob.options.tau_z);
      out << "partially nested: " << (pn ? "YES" : "NO") << "\n";
      if (!pn) {
        const InfoGraph relaxed = relax_information(prob.sys, prob.graph, prob.options.tau_z);
        out << "relaxed graph edges:";
        for (const auto& [i, j] : relaxed.edges()) out << " (" << (i + 1) << "," << (j + 1) << ")";
        out << "   [" << (relaxed.edge_count() - prob.graph.edge_count()) << " added]\n";
        if (!dot_path.empty()) {
          std::ofstream dot(dot_path);
          dot << to_dot(relaxed, "relaxed_graph");
        }
      } else if (!dot_path.empty()) {
        std::ofstream dot(dot_path);
        dot << to_dot(prob.graph, "info_graph");
      }
    } else {
      out << "partially nested: UNDECIDED (Assumption 1 fails; precedence test is undefined)\n";
    }
    res.out = out.str();
    res.exit_code = a1_ok ? 0 : 3;
    if (!a1_ok) res.err = "assumption failure: Assumption 1 does not hold for every subsystem\n";
  } catch (const std::exception& e) {
    res.exit_code = classify_error_exit(e);
    res.err = std::string(e.what()) + "\n";
    res.out = out.str();
  }
  return res;
}

CmdResult cmd_bound(const std::string& path, const BoundFlags& flags) {
  CmdResult res;
  try {
    const Problem prob = load_problem(path);
    if (!flags.force) {
      const std::vector<bool> a1 = check_assumption_1(prob.sys, prob.options.tau_z);
      if (!std::all_of(a1.begin(), a1.end(), [](bool b) { return b; })) {
        res.exit_code = 3;
        res.err = "assumption failure: Assumption 1 does not hold (use --force to override)\n";
        return res;
      }
    }
    BoundRun run = run_bound_pipeline(path, prob, flags);
    if (flags.format == "csv") {
      res.out = std::string(kCsvHeader) + "\n" + csv_row(path, &prob, &run, "") + "\n";
    } else {
      res.out = run.report.dump(2) + "\n";
    }
    res.exit_code = run.exit_code;
    std::ostringstream err;
    err << "timing: lower " << run.t_lower << " s, upper " << run.t_upper << " s\n";
    res.err = err.str();
  } catch (const std::exception& e) {
    res.exit_code = classify_error_exit(e);
    res.err = std::string(e.what()) + "\n";
  }
  return res;
}

CmdResult cmd_sweep(const std::string& dir, const std::string& pattern, const BoundFlags& flags) {
  CmdResult res;
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    res.exit_code = 2;
    res.err = "sweep: not a directory: " + dir + "\n";
    return res;
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (wildcard_match(pattern, name)) files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());

  std::ostringstream out;
  out << kCsvHeader << "\n";
  int warnings = 0;
  for (const std::string& f : files) {
    try {
      const Problem prob = load_problem(f);
      BoundFlags per = flags;
      per.simulate_n = 0;
      BoundRun run = run_bound_pipeline(f, prob, per);
      out << csv_row(f, &prob, &run, "") << "\n";
      if (run.exit_code != 0) ++warnings;
    } catch (const std::exception& e) {
      out << csv_row(f, nullptr, nullptr, e.what()) << "\n";
      ++warnings;
    }
  }
  res.out = out.str();
  if (warnings > 0) res.err = "sweep: " + std::to_string(warnings) + " file(s) with warnings\n";
  return res;
}

CmdResult cmd_simulate(const std::string& path, const BoundFlags& flags) {
  CmdResult res;
  try {
    const Problem prob = load_problem(path);
    PipelineSettings st = settings_from(prob, flags);
    st.certify.run_lower = false;
    st.certify.run_upper = true;
    const BoundReport rep = certify(prob.sys, prob.graph, prob.dist, prob.cons, prob.cost,
                                    st.certify);
    if (!rep.upper || rep.upper->robust_infeasible) {
      res.exit_code = 5;
      res.err = (rep.upper_note.empty() ? std::string("no affine upper-bound policy available")
                                        : rep.upper_note) +
                "\n";
      return res;
    }
    if (rep.upper->solve.status != SolveStatus::Optimal) {
      res.exit_code = 4;
      res.err = std::string("upper-bound solve status: ") + status_name(rep.upper->solve.status) +
                "\n";
      return res;
    }
    const StackedSystem stk = stack_system(prob.sys);
    std::ofstream trace_file;
    std::ostream* trace = nullptr;
    if (!flags.trace_path.empty()) {
      trace_file.open(flags.trace_path);
      if (!trace_file) throw SchemaError("cannot write trace file: " + flags.trace_path);
      trace = &trace_file;
    }
    const SimulationResult sim = simulate(prob.sys, rep.K_upper, prob.cost, prob.cons, prob.dist,
                                          st.samples, st.seed, 1e-9, trace, flags.trace_rows);
    ordered_json j;
    j["tool"] = "decrelax";
    j["file"] = path;
    j["policy"] = "upper_bound";
    j["predicted_cost"] =
        round12(objective_value(rep.Q_upper, stk, prob.cost, prob.dist.moment_matrix()));
    j["simulation"] = simulation_json(sim, st.seed);
    res.out = j.dump(2) + "\n";
  } catch (const std::exception& e) {
    res.exit_code = classify_error_exit(e);
    res.err = std::string(e.what()) + "\n";
  }
  return res;
}

CmdResult cmd_dump_ir(const std::string& path, const std::string& which, const BoundFlags& flags) {
  CmdResult res;
  try {
    const Problem prob = load_problem(path);
    const PipelineSettings st = settings_from(prob, flags);
    const StackedSystem stk = stack_system(prob.sys);
    std::optional<ConicProgram> prog;
    if (which == "lower") {
      const std::vector<bool> a1 = check_assumption_1(prob.sys, st.certify.tau_z);
      const bool a1_ok = std::all_of(a1.begin(), a1.end(), [](bool b) { return b; });
      if (!a1_ok && !flags.force) {
        throw AssumptionError("dump-ir: Assumption 1 fails (use --force to override)");
      }
      const InfoGraph relaxed = a1_ok ? relax_information(prob.sys, prob.graph, st.certify.tau_z)
                                      : relax_information_forced(prob.sys, prob.graph,
                                                                 st.certify.tau_z);
      prog = build_lower_bound(stk, prob.cons, prob.cost, prob.dist,
                               sparsity_pattern(prob.sys, relaxed));
    } else if (which == "upper") {
      std::optional<InfoGraph> up;
      if (prob.options.upper_graph) {
        up = prob.options.upper_graph;
      } else if (is_partially_nested(prob.sys, prob.graph, st.certify.tau_z)) {
        up = prob.graph;
      } else {
        throw AssumptionError(
            "dump-ir: information graph is not PN and no upper_graph was supplied");
      }
      prog = build_upper_bound(stk, prob.cons, prob.cost, prob.dist,
                               sparsity_pattern(prob.sys, *up));
    } else {
      throw SchemaError("dump-ir: --which must be lower or upper");
    }
    res.out = prog->to_json().dump(2) + "\n";
  } catch (const std::exception& e) {
    res.exit_code = classify_error_exit(e);
    res.err = std::string(e.what()) + "\n";
  }
  return res;
}

}  // namespace decrelax
