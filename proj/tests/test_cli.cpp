#include <catch2/catch.hpp>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "rbm/csv.hpp"

#ifndef RBM_PHASE_BIN
#error "RBM_PHASE_BIN must point at the CLI binary"
#endif

namespace {

struct RunResult {
  int exit_code;
  std::string out_file;
};

std::string scratch_path(const std::string& name) {
  return std::string("rbm_cli_test_") + name;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RBM_PHASE_BIN) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cw-probs output is byte-reproducible and well formed") {
  const std::string f1 = scratch_path("probs1.csv");
  const std::string f2 = scratch_path("probs2.csv");
  const std::string args =
      "cw-probs --N 40 --p 5 --beta 2 --trials 200 --seed 7 --out ";
  REQUIRE(run_cli(args + f1) == 0);
  REQUIRE(run_cli(args + f2) == 0);
  const std::string a = slurp(f1);
  REQUIRE(a == slurp(f2));

  std::istringstream is(a);
  std::string line;
  std::getline(is, line);
  REQUIRE(line.rfind("# rbm-phase cw-probs", 0) == 0);
  REQUIRE(line.find("seed=7") != std::string::npos);
  std::getline(is, line);
  REQUIRE(line == "m,right_theoretical,left_theoretical,right_empirical,left_empirical");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == 41);
  std::remove(f1.c_str());
  std::remove(f2.c_str());
}

TEST_CASE("cw-probs without batches emits the classical columns") {
  const std::string f = scratch_path("probs_classical.csv");
  REQUIRE(run_cli("cw-probs --N 10 --beta 0.5 --out " + f) == 0);
  const std::string text = slurp(f);
  REQUIRE(text.find("right_empirical") == std::string::npos);
  std::remove(f.c_str());
}

TEST_CASE("cw-probs at the default benchmark parameters has one row per state") {
  const std::string f = scratch_path("probs_ref.csv");
  REQUIRE(run_cli("cw-probs --N 100 --p 10 --beta 2 --out " + f) == 0);
  std::istringstream is(slurp(f));
  std::string line;
  int lines = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++lines;
  REQUIRE(lines == 103);  // comment + header + 101 states
  std::remove(f.c_str());
}

TEST_CASE("cw-critical emits the scan table") {
  const std::string f = scratch_path("crit.csv");
  REQUIRE(run_cli("cw-critical --p 16 --p 64 --tol 1e-10 --out " + f) == 0);
  std::istringstream is(slurp(f));
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  REQUIRE(line.rfind("p,beta_c,beta_c_asymptotic", 0) == 0);
  int data_rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++data_rows;
    const double beta_c = std::stod(line.substr(line.find(',') + 1));
    REQUIRE(beta_c > 1.0);
  }
  REQUIRE(data_rows == 2);
  std::remove(f.c_str());
}

TEST_CASE("gp-curve emits exact and Monte-Carlo columns") {
  const std::string f = scratch_path("gp.csv");
  REQUIRE(run_cli("gp-curve --p 8 --beta-min 0.5 --beta-max 2 --beta-steps 4 "
                  "--mc-samples 50000 --seed 5 --out " + f) == 0);
  std::istringstream is(slurp(f));
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  REQUIRE(line == "beta,g_p_exact,g_p_mc,se");
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++rows;
    // exact and Monte-Carlo columns should roughly agree
    std::vector<double> vals;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) vals.push_back(std::stod(cell));
    REQUIRE(std::abs(vals[1] - vals[2]) <= 5.0 * vals[3]);
  }
  REQUIRE(rows == 4);
  std::remove(f.c_str());
}

TEST_CASE("verify suites pass on their default grids") {
  REQUIRE(run_cli("verify appendix-a --seed 2 > /dev/null") == 0);
  REQUIRE(run_cli("verify critical --tol 1e-12 > /dev/null") == 0);
  REQUIRE(run_cli("verify sqrt-scaling > /dev/null") == 0);
}

TEST_CASE("missing seed on a stochastic invocation is a precondition error") {
  REQUIRE(run_cli("cw-probs --N 10 --beta 1 --trials 100") == 1);
  REQUIRE(run_cli("verify clt") == 1);
}

TEST_CASE("unknown verify suite lists the available ones") {
  REQUIRE(run_cli("verify nonsense") == 1);
}

TEST_CASE("verify clt passes with a seed") {
  REQUIRE(run_cli("verify clt --seed 3 > /dev/null") == 0);
}

TEST_CASE("cw-invariant distribution sums to one") {
  const std::string f = scratch_path("inv.csv");
  REQUIRE(run_cli("cw-invariant --N 60 --beta 1.2 --p 6 --eps 1e-9 --out " + f) == 0);
  std::istringstream is(slurp(f));
  std::string line;
  std::getline(is, line);  // comment
  std::getline(is, line);  // header
  double total = 0.0;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    total += std::stod(line.substr(comma + 1));
    ++rows;
  }
  REQUIRE(rows == 61);
  REQUIRE(total == Approx(1.0).margin(1e-9));
  std::remove(f.c_str());
}

TEST_CASE("equilibria subcommand emits parseable JSON") {
  const std::string f = scratch_path("eq.json");
  REQUIRE(run_cli("equilibria --beta 2 --out " + f) == 0);
  const auto j = nlohmann::json::parse(slurp(f));
  REQUIRE(j["equilibria"].size() == 3);
  REQUIRE(j["p"].is_null());
  REQUIRE(j["derivative_at_zero"].get<double>() == Approx(2.0).margin(1e-5));
  std::remove(f.c_str());
}

TEST_CASE("ips-run writes a trajectory table") {
  const std::string f = scratch_path("traj.csv");
  REQUIRE(run_cli("ips-run --scheme rb --N 50 --p 5 --delta 0.01 --sigma 1 --lw 1 "
                  "--steps 100 --record-every 20 --seed 9 --init twopoint:1 --out " +
                  f) == 0);
  std::istringstream is(slurp(f));
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  REQUIRE(line == "step,time,mean,variance,diffusion_coefficient");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == 6);  // steps 0, 20, 40, 60, 80, 100
  std::remove(f.c_str());
}

TEST_CASE("ips-run rejects an unknown scheme") {
  REQUIRE(run_cli("ips-run --scheme warp --N 10 --p 2 --steps 10 --seed 1") == 1);
}

TEST_CASE("stationary subcommand writes branch rows and metadata") {
  const std::string f = scratch_path("stat.csv");
  const std::string meta = scratch_path("stat_meta.json");
  REQUIRE(run_cli("stationary --lw 1 --sigma-min 0.2 --sigma-max 0.5 --sigma-steps 4 "
                  "--meta " + meta + " --out " + f) == 0);
  const std::string text = slurp(f);
  REQUIRE(text.find("sigma,branch,kappa1,kappa2,residual") != std::string::npos);
  REQUIRE(text.find("plus") != std::string::npos);
  REQUIRE(text.find("zero") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(meta));
  REQUIRE(j["sigma_c"].get<double>() == Approx(0.4569).margin(1e-3));
  REQUIRE(j["quadrature"]["points_per_panel"].get<int>() == 32);
  std::remove(f.c_str());
  std::remove(meta.c_str());
}

TEST_CASE("stationary in effective mode switches solution counts at sigma_c_eff") {
  const std::string f = scratch_path("stat_eff.csv");
  // sigma_c ~ 0.457, sigma_c_eff ~ 0.455 for delta=0.1, p=11
  REQUIRE(run_cli("stationary --lw 1 --sigma-min 0.40 --sigma-max 0.50 --sigma-steps 2 "
                  "--delta 0.1 --p 11 --out " + f) == 0);
  std::istringstream is(slurp(f));
  std::string line;
  int rows_low = 0, rows_high = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 's') continue;
    if (line.rfind("0.40", 0) == 0) ++rows_low;
    if (line.rfind("0.5", 0) == 0) ++rows_high;
  }
  REQUIRE(rows_low == 3);
  REQUIRE(rows_high == 1);
  std::remove(f.c_str());
}

TEST_CASE("json format round-trips through the table writer") {
  const std::string f = scratch_path("probs.json");
  REQUIRE(run_cli("cw-probs --N 8 --beta 1 --format json --out " + f) == 0);
  const auto j = nlohmann::json::parse(slurp(f));
  REQUIRE(j["columns"].size() == 3);
  REQUIRE(j["rows"].size() == 9);
  std::remove(f.c_str());
}
