// decrelax: certified lower bounds (and affine upper bounds) for constrained
// decentralized control problems. Subcommands: check | bound | sweep |
// simulate | dump-ir. See README.md for the problem-file schema.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "decrelax/commands.hpp"

namespace {

int emit(const decrelax::CmdResult& res, const std::string& out_path) {
  if (!res.out.empty()) {
    if (out_path.empty()) {
      std::cout << res.out;
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) {
        std::cerr << "cannot write to " << out_path << "\n";
        return 2;
      }
      f << res.out;
    }
  }
  if (!res.err.empty()) std::cerr << res.err;
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified bounds for constrained decentralized control"};
  app.require_subcommand(1);

  std::string file, out_path, dot_path;
  decrelax::BoundFlags flags;
  double tol = 0.0;
  std::uint64_t seed = 0;
  long samples = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "write stdout payload to this path");
    auto* topt = cmd->add_option("--tol", tol, "solver tolerance override");
    topt->envname("DECRELAX_SOLVER_TOL");
    cmd->add_option("--seed", seed, "Monte Carlo seed override");
    cmd->add_option("--samples", samples, "Monte Carlo sample count override");
    cmd->add_flag("--force", flags.force, "proceed despite assumption-check failures");
  };

  CLI::App* check = app.add_subcommand("check", "validate assumptions and the PN verdict");
  check->add_option("file", file, "problem file (JSON)")->required();
  check->add_option("--dot", dot_path, "write the (relaxed) information graph as DOT");

  CLI::App* bound = app.add_subcommand("bound", "run the bound pipeline and emit a report");
  bound->add_option("file", file, "problem file (JSON)")->required();
  bound->add_flag("--lower", flags.lower, "compute the lower bound");
  bound->add_flag("--upper", flags.upper, "compute the affine upper bound");
  bound->add_flag("--gap", flags.gap, "compute both bounds and the gap");
  bound->add_option("--simulate", flags.simulate_n,
                    "validate the upper-bound policy on this many Monte Carlo samples");
  bound->add_option("--format", flags.format, "report format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  add_common(bound);

  CLI::App* sweep = app.add_subcommand("sweep", "batch bound runs over a directory (CSV)");
  std::string dir, pattern = "*.json";
  sweep->add_option("dir", dir, "directory of problem files")->required();
  sweep->add_option("pattern", pattern, "filename wildcard (default *.json)");
  add_common(sweep);

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo validation of the upper policy");
  sim->add_option("file", file, "problem file (JSON)")->required();
  sim->add_option("--trace", flags.trace_path, "write a per-sample CSV trace to this path");
  sim->add_option("--trace-rows", flags.trace_rows, "cap on trace rows (default 1000)");
  add_common(sim);

  CLI::App* dump = app.add_subcommand("dump-ir", "dump the conic program IR as JSON");
  dump->add_option("file", file, "problem file (JSON)")->required();
  std::string which = "lower";
  dump->add_option("--which", which, "lower|upper")->check(CLI::IsMember({"lower", "upper"}));
  add_common(dump);

  CLI11_PARSE(app, argc, argv);

  if (tol > 0) flags.tol = tol;
  if (seed != 0) flags.seed = seed;
  if (samples > 0) flags.samples = samples;

  if (check->parsed()) return emit(decrelax::cmd_check(file, dot_path), out_path);
  if (bound->parsed()) return emit(decrelax::cmd_bound(file, flags), out_path);
  if (sweep->parsed()) return emit(decrelax::cmd_sweep(dir, pattern, flags), out_path);
  if (sim->parsed()) return emit(decrelax::cmd_simulate(file, flags), out_path);
  if (dump->parsed()) return emit(decrelax::cmd_dump_ir(file, which, flags), out_path);
  return 1;
}
