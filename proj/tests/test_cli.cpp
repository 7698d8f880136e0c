#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "decrelax/commands.hpp"
#include "decrelax/problem_io.hpp"

using namespace decrelax;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "decrelax_cli_test";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const json& j) const {
    const fs::path p = path / name;
    std::ofstream f(p);
    f << j.dump(2);
    return p.string();
  }
  std::string write_raw(const std::string& name, const std::string& text) const {
    const fs::path p = path / name;
    std::ofstream f(p);
    f << text;
    return p.string();
  }
};

// Scalar chain pair, coupled 1 -> 2, self-loop information graph.
json chain_problem(int T, bool constrained = false) {
  json j;
  j["system"] = {{"N", 2},
             {"T", T},
             {"n_x", 1},
             {"n_u", 1},
             {"n_y", 1},
             {"n_xi", 2},
             {"x0", 0},
             {"A", json::array({json::array({1.0, 0.0}), json::array({1.0, 1.0})})},
             {"B", {{"identity", true}}},
             {"G", {{"identity", 0.5}}},
             {"C", {{"identity", true}}},
             {"H", {{"identity", true}}}};
  j["graph"] = "self_loops";
  j["disturbance"] = {{"family", "uniform_ellipsoid"}};
  if (constrained) j["constraints"] = {{"u_upper", 0.8}, {"u_lower", -0.8}};
  j["cost"] = {{"R_x", 1.0}, {"R_u", 0.5}};
  j["options"] = {{"seed", 7}, {"samples", 2000}};
  return j;
}

// The analytic scalar instance (T = 1, so Assumption 1 cannot hold).
json scalar_problem() {
  json j;
  j["system"] = {{"N", 1},      {"T", 1},   {"n_x", 1}, {"n_u", 1}, {"n_y", 1},
             {"n_xi", 1},   {"x0", 0},  {"A", 1.0}, {"B", 1.0}, {"G", 1.0},
             {"C", 1.0},    {"H", 1.0}};
  j["graph"] = "complete";
  j["disturbance"] = {{"family", "uniform_ellipsoid"}};
  j["cost"] = {{"R_x", {{"diag", json::array({0.0, 1.0})}}}, {"R_u", 1.0}};
  return j;
}

}  // namespace

TEST_CASE("problem parsing expands shorthands") {
  TempDir tmp;
  const std::string path = tmp.write("p.json", chain_problem(3));
  const Problem prob = load_problem(path);
  CHECK(prob.sys.N == 2);
  CHECK(prob.sys.T == 3);
  CHECK(prob.sys.A[0](1, 0) == 1.0);
  CHECK(prob.sys.G[0](0, 0) == 0.5);
  CHECK(prob.cons.rows() == 0);
  CHECK(prob.cost.R_u(0, 0) == 0.5);
  CHECK(prob.options.seed == 7);

  const Problem withcons = load_problem(tmp.write("pc.json", chain_problem(3, true)));
  // u_upper and u_lower each contribute n_u * T rows
  CHECK(withcons.cons.rows() == 2 * 2 * 3);
}

TEST_CASE("cmd_check verdicts and exit codes") {
  TempDir tmp;
  SUBCASE("coupled pair: assumptions pass, not PN, relaxation preview") {
    const CmdResult res = cmd_check(tmp.write("p.json", chain_problem(3)));
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("assumption 1") != std::string::npos);
    CHECK(res.out.find("partially nested: NO") != std::string::npos);
    CHECK(res.out.find("(1,2)") != std::string::npos);
  }
  SUBCASE("complete graph on the same plant is PN") {
    json j = chain_problem(3);
    j["graph"] = "complete";
    const CmdResult res = cmd_check(tmp.write("p.json", j));
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("partially nested: YES") != std::string::npos);
  }
  SUBCASE("missing self-loop: exit 3 naming Assumption 3") {
    json j = chain_problem(3);
    j["graph"] = {{"edges", json::array({json::array({1, 1})})}};
    const CmdResult res = cmd_check(tmp.write("p.json", j));
    CHECK(res.exit_code == 3);
    CHECK(res.err.find("Assumption 3") != std::string::npos);
  }
  SUBCASE("assumption-1 failure: exit 3") {
    json j = scalar_problem();
    const CmdResult res = cmd_check(tmp.write("p.json", j));
    CHECK(res.exit_code == 3);
    CHECK(res.out.find("FAIL") != std::string::npos);
  }
  SUBCASE("schema garbage: exit 2") {
    TempDir t2;
    const CmdResult res = cmd_check(t2.write_raw("bad.json", "{ not json"));
    CHECK(res.exit_code == 2);
    const CmdResult res2 = cmd_check(t2.write("empty.json", json::object()));
    CHECK(res2.exit_code == 2);
  }
  SUBCASE("DOT export") {
    TempDir t2;
    const std::string dot = (t2.path / "g.dot").string();
    const CmdResult res = cmd_check(t2.write("p.json", chain_problem(3)), dot);
    CHECK(res.exit_code == 0);
    std::ifstream f(dot);
    std::string line, all;
    while (std::getline(f, line)) all += line;
    CHECK(all.find("digraph") != std::string::npos);
  }
}

TEST_CASE("cmd_bound") {
  TempDir tmp;
  SUBCASE("scalar instance under --force reproduces the calculus value") {
    const std::string path = tmp.write("scalar.json", scalar_problem());
    CHECK(cmd_bound(path, {}).exit_code == 3);  // assumption gate without --force
    BoundFlags flags;
    flags.force = true;
    const CmdResult res = cmd_bound(path, flags);
    REQUIRE(res.exit_code == 0);
    const json rep = json::parse(res.out);
    CHECK(std::abs(rep["lower_bound"]["J_d"].get<double>() - 1.0 / 6.0) <= 1e-6);
    CHECK(std::abs(rep["upper_bound"]["J_up"].get<double>() - 1.0 / 6.0) <= 1e-6);
    CHECK(rep["gap"]["rel"].get<double>() <= 1e-6);
    CHECK(rep["assumptions"]["forced"] == true);
  }
  SUBCASE("--lower only omits the upper bound") {
    BoundFlags flags;
    flags.lower = true;
    const CmdResult res = cmd_bound(tmp.write("p.json", chain_problem(3)), flags);
    REQUIRE(res.exit_code == 0);
    const json rep = json::parse(res.out);
    CHECK(rep.contains("lower_bound"));
    CHECK_FALSE(rep.contains("upper_bound"));
  }
  SUBCASE("nonclassical graph: relaxation recorded, upper bound noted") {
    const CmdResult res = cmd_bound(tmp.write("p.json", chain_problem(3)), {});
    REQUIRE(res.exit_code == 0);
    const json rep = json::parse(res.out);
    CHECK(rep["assumptions"]["partially_nested"] == false);
    CHECK(rep["relaxation"]["edges_added"] == 1);
    CHECK(rep["upper_bound"].contains("note"));
    CHECK_FALSE(rep["upper_bound"].contains("J_up"));
  }
  SUBCASE("robustly infeasible constraint: exit 5") {
    json j = chain_problem(3, true);
    j["graph"] = "complete";
    j["constraints"] = {{"u_upper", -1.0}, {"u_lower", 1.0}};  // empty box
    const CmdResult res = cmd_bound(tmp.write("p.json", j), {});
    CHECK(res.exit_code == 5);
    CHECK(res.out.find("no affine upper bound") != std::string::npos);
  }
  SUBCASE("--format csv emits a single sweep-style row") {
    json j = chain_problem(2, true);
    j["graph"] = "complete";
    BoundFlags flags;
    flags.format = "csv";
    const CmdResult res = cmd_bound(tmp.write("p.json", j), flags);
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("file,N,T,m") == 0);
    CHECK(std::count(res.out.begin(), res.out.end(), '\n') == 2);
    CHECK(res.out.find("true") != std::string::npos);  // PN column
  }
  SUBCASE("byte-identical reports across runs") {
    json j = chain_problem(2, true);
    j["graph"] = "complete";
    const std::string path = tmp.write("p.json", j);
    BoundFlags flags;
    flags.simulate_n = 500;
    const CmdResult a = cmd_bound(path, flags);
    const CmdResult b = cmd_bound(path, flags);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == b.out);
    const json rep = json::parse(a.out);
    CHECK(rep.contains("simulation"));
    CHECK(rep["input"]["sha256"].get<std::string>().size() == 64);
  }
}

TEST_CASE("cmd_sweep") {
  TempDir tmp;
  SUBCASE("empty directory gives a header-only CSV") {
    const CmdResult res = cmd_sweep(tmp.path.string(), "*.json", {});
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("file,N,T,m") == 0);
    CHECK(std::count(res.out.begin(), res.out.end(), '\n') == 1);
  }
  SUBCASE("two files in filename order, one corrupt carries its error") {
    json good = chain_problem(2);
    good["graph"] = "complete";
    tmp.write("b_good.json", good);
    tmp.write_raw("a_bad.json", "{");
    tmp.write_raw("skip.txt", "not matched");
    const CmdResult res = cmd_sweep(tmp.path.string(), "*.json", {});
    CHECK(res.exit_code == 0);
    const auto first_row = res.out.find("a_bad.json");
    const auto second_row = res.out.find("b_good.json");
    CHECK(first_row != std::string::npos);
    CHECK(second_row != std::string::npos);
    CHECK(first_row < second_row);
    CHECK(res.out.find("parse error") != std::string::npos);
    CHECK(res.err.find("1 file(s)") != std::string::npos);
  }
}

TEST_CASE("cmd_dump_ir and cmd_simulate") {
  TempDir tmp;
  json j = chain_problem(2, true);
  j["graph"] = "complete";
  const std::string path = tmp.write("p.json", j);
  SUBCASE("dump-ir lower") {
    const CmdResult res = cmd_dump_ir(path, "lower", {});
    REQUIRE(res.exit_code == 0);
    const json ir = json::parse(res.out);
    CHECK(ir["n_vars"].get<int>() > 0);
    CHECK(ir["cones"].size() > 0);
  }
  SUBCASE("dump-ir upper on a non-PN graph errors") {
    const CmdResult res = cmd_dump_ir(tmp.write("np.json", chain_problem(3)), "upper", {});
    CHECK(res.exit_code == 3);
  }
  SUBCASE("simulate validates the upper policy") {
    BoundFlags flags;
    flags.samples = 2000;
    const CmdResult res = cmd_simulate(path, flags);
    REQUIRE(res.exit_code == 0);
    const json rep = json::parse(res.out);
    CHECK(rep["simulation"]["samples"] == 2000);
    CHECK(rep["simulation"]["max_violation"].get<double>() <= 1e-9);
    const double pred = rep["predicted_cost"].get<double>();
    const double mean = rep["simulation"]["mean_cost"].get<double>();
    const double se = rep["simulation"]["std_error"].get<double>();
    CHECK(std::abs(mean - pred) <= 4.0 * se);
  }
}
