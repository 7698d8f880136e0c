#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace decrelax {

// Library-level entry points for the CLI subcommands: each returns the exit
// code, stdout payload, and stderr diagnostics, so tests can drive them
// in-process. Exit codes: 0 ok, 2 schema error, 3 assumption failure,
// 4 solver non-optimal, 5 robust-infeasible upper bound.
struct CmdResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

struct BoundFlags {
  bool lower = false;  // neither flag set means "run both"
  bool upper = false;
  bool gap = false;
  long simulate_n = 0;
  bool force = false;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<long> samples;
  std::string format = "json";  // json | csv
  std::string trace_path;       // simulate: per-sample CSV dump
  long trace_rows = 1000;
};

CmdResult cmd_check(const std::string& path, const std::string& dot_path = "");
CmdResult cmd_bound(const std::string& path, const BoundFlags& flags = {});
CmdResult cmd_sweep(const std::string& dir, const std::string& pattern,
                    const BoundFlags& flags = {});
CmdResult cmd_simulate(const std::string& path, const BoundFlags& flags = {});
CmdResult cmd_dump_ir(const std::string& path, const std::string& which = "lower",
                      const BoundFlags& flags = {});

}  // namespace decrelax
