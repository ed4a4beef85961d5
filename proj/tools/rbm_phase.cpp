// rbm-phase: command-line driver for the random-batch phase-transition
// toolkit. Every stochastic subcommand takes an explicit --seed and writes
// byte-reproducible output; diagnostics go to stderr.
//
// Exit codes: 0 success, 1 precondition/usage error, 2 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rbm/csv.hpp"
#include "rbm/curie_weiss.hpp"
#include "rbm/errors.hpp"
#include "rbm/mean_field_limit.hpp"
#include "rbm/monte_carlo.hpp"
#include "rbm/particle_sim.hpp"
#include "rbm/power_iteration.hpp"
#include "rbm/rng.hpp"
#include "rbm/stationary.hpp"
#include "rbm/version.hpp"

namespace {

using nlohmann::json;
using rbm::csv::Cell;
using rbm::csv::Table;

json table_to_json(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& cell : row) {
      if (std::holds_alternative<double>(cell)) {
        r.push_back(std::get<double>(cell));
      } else if (std::holds_alternative<long long>(cell)) {
        r.push_back(std::get<long long>(cell));
      } else {
        r.push_back(std::get<std::string>(cell));
      }
    }
    rows.push_back(std::move(r));
  }
  return json{{"comment", t.comment}, {"columns", t.header}, {"rows", rows}};
}

void emit(const Table& t, const std::string& out_path, const std::string& format) {
  std::ostringstream body;
  if (format == "json") {
    body << table_to_json(t).dump(2) << "\n";
  } else {
    rbm::csv::write_csv(body, t);
  }
  if (out_path.empty()) {
    std::cout << body.str();
    return;
  }
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw rbm::precondition_error("cannot open output path " + out_path);
  os << body.str();
}

void emit_json(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw rbm::precondition_error("cannot open output path " + out_path);
  os << j.dump(2) << "\n";
}

std::string param_comment(const std::string& sub, const std::vector<std::string>& params) {
  std::string c = "rbm-phase " + sub;
  for (const auto& p : params) c += " " + p;
  c += " version=" + std::string(rbm::kVersion);
  return c;
}

std::string kv(const std::string& key, double v) { return key + "=" + rbm::csv::format(v); }
std::string kv(const std::string& key, long long v) { return key + "=" + std::to_string(v); }
std::string kv(const std::string& key, std::uint64_t v) { return key + "=" + std::to_string(v); }

// ---- verify suites ---------------------------------------------------------

struct CheckTally {
  int passed = 0;
  int failed = 0;

  void record(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
    ++(ok ? passed : failed);
  }
};

void verify_appendix_a(CheckTally& tally, std::uint64_t seed) {
  using namespace rbm::stationary;
  const double a0 = kurtosis_A(0.0);
  tally.record("kurtosis A(0) = 3", std::abs(a0 - 3.0) < 1e-10, "A(0)=" + rbm::csv::format(a0));

  const double h = 1e-4;
  const double slope = (kurtosis_A(h) - a0) / h;
  tally.record("kurtosis slope A'(0) = -24 within 5%", std::abs(slope + 24.0) < 0.05 * 24.0,
               "A'(0)=" + rbm::csv::format(slope));

  bool below = true;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double beta = std::pow(10.0, -3.0 + 4.0 * (i + 1) / 50.0);
    const double a = kurtosis_A(beta);
    worst = std::max(worst, a);
    below = below && a < 3.0;
  }
  tally.record("kurtosis A(beta) < 3 on the log grid", below, "max=" + rbm::csv::format(worst));

  const StationaryModel model(1.0);
  const double sc = model.critical_sigma();
  bool decreasing = true;
  for (int i = 0; i < 30; ++i) {
    const double sigma = 0.05 + (5.0 - 0.05) * i / 29.0;
    if (!(F1_and_derivative(sigma, 1.0).derivative < 0.0)) decreasing = false;
  }
  tally.record("F1'(sigma) < 0 on the grid", decreasing, "");
  const double f1c = F1_and_derivative(sc, 1.0).value;
  tally.record("F1(sigma_c) = 1", std::abs(f1c - 1.0) < 1e-7, "F1=" + rbm::csv::format(f1c));

  const auto clt = moment_clt_check(100, 1'000'000, rbm::RngStream(seed));
  tally.record("CLT second moment = 1",
               std::abs(clt.second.estimate - 1.0) <= 3.0 * clt.second.std_error,
               "estimate=" + rbm::csv::format(clt.second.estimate));
  tally.record("CLT fourth moment = 3 - 2/p",
               std::abs(clt.fourth.estimate - clt.fourth.target) <= 3.0 * clt.fourth.std_error,
               "estimate=" + rbm::csv::format(clt.fourth.estimate) +
                   " target=" + rbm::csv::format(clt.fourth.target));
}

void verify_clt(CheckTally& tally, std::uint64_t seed) {
  using namespace rbm::stationary;
  const auto rep = moment_clt_check(100, 1'000'000, rbm::RngStream(seed));
  tally.record("E|Z_p|^2 = 1", std::abs(rep.second.estimate - 1.0) <= 3.0 * rep.second.std_error,
               "estimate=" + rbm::csv::format(rep.second.estimate));
  tally.record("E|Z_p|^4 = 3 - 2/p",
               std::abs(rep.fourth.estimate - rep.fourth.target) <= 3.0 * rep.fourth.std_error,
               "estimate=" + rbm::csv::format(rep.fourth.estimate));
  const auto big = moment_clt_check(10'000, 1'000'000, rbm::RngStream(seed + 1));
  tally.record("E|Z_p| -> sqrt(2/pi)",
               std::abs(big.first.estimate - big.first.target) <= 3.0 * big.first.std_error,
               "estimate=" + rbm::csv::format(big.first.estimate));
  tally.record("E|Z_p|^3 -> 2 sqrt(2/pi)",
               std::abs(big.third.estimate - big.third.target) <= 3.0 * big.third.std_error,
               "estimate=" + rbm::csv::format(big.third.estimate));
}

void verify_sqrt_scaling(CheckTally& tally) {
  using namespace rbm::stationary;
  const StationaryModel model(1.0);
  const auto probe = sqrt_scaling_probe(model, {1e-2, 3e-3, 1e-3, 3e-4});
  std::string ratios;
  for (double r : probe.ratios) ratios += rbm::csv::format(r) + " ";
  tally.record("kappa1 / sqrt(sigma_c - sigma) flattens (last-3 spread < 5%)",
               probe.last3_max_over_min < 1.05, "ratios: " + ratios);
}

void verify_critical(CheckTally& tally, double tol) {
  using namespace rbm::stationary;
  for (double l_w : {0.5, 1.0, 2.0}) {
    const StationaryModel model(l_w);
    const double sc = model.critical_sigma();
    const double identity = l_w * model.f2(sc, 0.0) / sc;
    tally.record("critical variance identity, L_W=" + rbm::csv::format(l_w),
                 std::abs(identity - 1.0) < 1e-8,
                 "sigma_c=" + rbm::csv::format(sc) + " L f2/sigma=" + rbm::csv::format(identity));
  }
  for (int p : {4, 16, 64, 256, 1024}) {
    const double bc = rbm::mfl::critical_beta(p, tol);
    const double asym = rbm::mfl::critical_beta_asymptotic(p);
    const double res = rbm::mfl::dm_drift_rb_at_zero(p, bc);
    tally.record("beta_c > 1 for p=" + std::to_string(p), bc > 1.0,
                 "beta_c=" + rbm::csv::format(bc) + " asymptotic=" + rbm::csv::format(asym) +
                     " residual=" + rbm::csv::format(res));
  }
}

void verify_batch_force(CheckTally& tally, std::uint64_t seed) {
  using namespace rbm::ps;
  const int n = 1000;
  const double l_w = 1.0;
  rbm::RngStream init(seed);
  std::vector<double> x(n);
  for (double& v : x) v = init.gaussian();
  ParticleEnsemble ens(std::move(x));
  const auto pot = PotentialPair::double_well(l_w);
  const int panel[] = {0, 250, 500, 750, 999};

  for (int p : {2, 10, 50}) {
    rbm::RngStream s = init.substream(p);
    const int resamples = 10'000;
    bool mean_ok = true, var_ok = true;
    std::vector<double> sample(resamples);
    for (int i : panel) {
      for (int r = 0; r < resamples; ++r) {
        double f = 0.0;
        for (int k = 0; k < p - 1; ++k) {
          const int j = static_cast<int>(s.uniform_index(n));
          f += pot.grad_w(ens.positions()[i] - ens.positions()[j]);
        }
        sample[r] = f / (p - 1);
      }
      double mean = 0.0;
      for (double f : sample) mean += f;
      mean /= resamples;
      double var = 0.0, m4 = 0.0;
      for (double f : sample) {
        const double d = f - mean;
        var += d * d;
        m4 += d * d * d * d;
      }
      var /= (resamples - 1);
      m4 /= resamples;
      const double target_mean = pot.l_w * (ens.positions()[i] - ens.mean());
      const double target_var = pot.l_w * pot.l_w * ens.variance() / (p - 1);
      if (std::abs(mean - target_mean) > 3.0 * std::sqrt(var / resamples)) mean_ok = false;
      const double se_var = std::sqrt(std::max(0.0, m4 - var * var) / resamples);
      if (std::abs(var - target_var) > 3.0 * se_var) var_ok = false;
    }
    tally.record("batch force unbiased, p=" + std::to_string(p), mean_ok, "");
    tally.record("batch force variance = Sigma/(p-1), p=" + std::to_string(p), var_ok, "");
  }
}

// ---- subcommand bodies ------------------------------------------------------

int run_cw_probs(int n, std::optional<int> p, double beta, long trials,
                 std::optional<std::uint64_t> seed, const std::string& out,
                 const std::string& format) {
  const rbm::cw::CwParams params{n, beta, p};
  params.validate();
  if (trials > 0 && !seed)
    throw rbm::precondition_error("cw-probs: --seed is required when --trials is given");

  Table t;
  std::vector<std::string> meta{kv("N", static_cast<long long>(n)), kv("beta", beta)};
  if (p) meta.push_back(kv("p", static_cast<long long>(*p)));
  if (trials > 0) {
    meta.push_back(kv("trials", static_cast<long long>(trials)));
    meta.push_back(kv("seed", *seed));
  }
  t.comment = param_comment("cw-probs", meta);
  t.header = {"m", "right_theoretical", "left_theoretical"};
  if (trials > 0) {
    t.header.push_back("right_empirical");
    t.header.push_back("left_empirical");
  }

  std::vector<rbm::cw::Rates> empirical;
  if (trials > 0) empirical = rbm::cw::empirical_rates(params, trials, rbm::RngStream(*seed));
  const rbm::cw::MagnetizationGrid grid{n};
  for (int i = 0; i <= n; ++i) {
    const auto r = rbm::cw::rates_at(i, params);
    std::vector<Cell> row{grid.magnetization(i), r.right, r.left};
    if (trials > 0) {
      row.emplace_back(empirical[i].right);
      row.emplace_back(empirical[i].left);
    }
    t.add_row(std::move(row));
  }
  emit(t, out, format);
  return 0;
}

int run_cw_invariant(int n, std::optional<int> p, double beta, double eps, long max_iter,
                     const std::string& out, const std::string& format) {
  const rbm::cw::CwParams params{n, beta, p};
  const auto matrix = rbm::cw::build_matrix(params);
  std::vector<double> v0(matrix.size(), 1.0 / matrix.size());
  const auto res = rbm::cw::invariant_distribution(matrix, v0, eps, max_iter);

  Table t;
  std::vector<std::string> meta{kv("N", static_cast<long long>(n)), kv("beta", beta),
                                kv("eps", eps),
                                kv("steps", static_cast<long long>(res.iterations))};
  if (p) meta.insert(meta.begin() + 2, kv("p", static_cast<long long>(*p)));
  t.comment = param_comment("cw-invariant", meta);
  t.header = {"m", "probability"};
  const rbm::cw::MagnetizationGrid grid{n};
  for (int i = 0; i <= n; ++i) t.add_row({grid.magnetization(i), res.distribution[i]});
  emit(t, out, format);
  std::cerr << "converged after " << res.iterations << " iterations\n";
  return 0;
}

int run_cw_critical(const std::vector<int>& ps, double tol, std::uint64_t mc_samples,
                    std::optional<std::uint64_t> seed, const std::string& out,
                    const std::string& format) {
  if (ps.empty()) throw rbm::precondition_error("cw-critical: give at least one --p");
  if (mc_samples > 0 && !seed)
    throw rbm::precondition_error("cw-critical: --seed is required with --mc-samples");

  Table t;
  std::vector<std::string> meta{kv("tol", tol)};
  if (mc_samples > 0) {
    meta.push_back(kv("mc_samples", mc_samples));
    meta.push_back(kv("seed", *seed));
  }
  t.comment = param_comment("cw-critical", meta);
  t.header = {"p",      "beta_c", "beta_c_asymptotic", "g_p_at_1", "g_p_at_1_se",
              "g_p_at_asymptotic", "g_p_at_asymptotic_se"};

  for (std::size_t idx = 0; idx < ps.size(); ++idx) {
    const int p = ps[idx];
    const double asym = rbm::mfl::critical_beta_asymptotic(p);
    const double bc = rbm::mfl::critical_beta(p, tol);
    double g1, g1_se = 0.0, ga, ga_se = 0.0;
    if (mc_samples > 0) {
      const auto base = rbm::RngStream(*seed).substream(idx);
      const auto e1 = rbm::mfl::g_p_monte_carlo(p, 1.0, mc_samples, base.substream(0));
      const auto e2 = rbm::mfl::g_p_monte_carlo(p, asym, mc_samples, base.substream(1));
      g1 = e1.mean;
      g1_se = e1.std_error;
      ga = e2.mean;
      ga_se = e2.std_error;
    } else {
      g1 = rbm::mfl::g_p_exact(p, 1.0);
      ga = rbm::mfl::g_p_exact(p, asym);
    }
    t.add_row({static_cast<long long>(p), bc, asym, g1, g1_se, ga, ga_se});
  }
  emit(t, out, format);
  return 0;
}

int run_gp_curve(int p, double beta_min, double beta_max, int beta_steps,
                 std::uint64_t mc_samples, std::optional<std::uint64_t> seed,
                 const std::string& out, const std::string& format) {
  if (p < 2) throw rbm::precondition_error("gp-curve: p must be >= 2");
  if (!(beta_min > 0.0) || !(beta_max >= beta_min) || beta_steps < 1)
    throw rbm::precondition_error("gp-curve: bad beta grid");
  if (mc_samples > 0 && !seed)
    throw rbm::precondition_error("gp-curve: --seed is required with --mc-samples");

  Table t;
  std::vector<std::string> meta{kv("p", static_cast<long long>(p)), kv("beta_min", beta_min),
                                kv("beta_max", beta_max),
                                kv("beta_steps", static_cast<long long>(beta_steps))};
  if (mc_samples > 0) {
    meta.push_back(kv("mc_samples", mc_samples));
    meta.push_back(kv("seed", *seed));
  }
  t.comment = param_comment("gp-curve", meta);
  t.header = {"beta", "g_p_exact", "g_p_mc", "se"};
  for (int i = 0; i < beta_steps; ++i) {
    const double beta =
        beta_steps == 1 ? beta_min : beta_min + (beta_max - beta_min) * i / (beta_steps - 1);
    double mc = 0.0, se = 0.0;
    if (mc_samples > 0) {
      const auto est =
          rbm::mfl::g_p_monte_carlo(p, beta, mc_samples, rbm::RngStream(*seed).substream(i));
      mc = est.mean;
      se = est.std_error;
    }
    t.add_row({beta, rbm::mfl::g_p_exact(p, beta), mc, se});
  }
  emit(t, out, format);
  return 0;
}

int run_equilibria(double beta, std::optional<int> p, const std::string& out) {
  const rbm::mfl::LimitDrift drift{beta, p};
  if (!(beta > 0.0)) throw rbm::precondition_error("equilibria: beta must be positive");
  if (p && *p < 2) throw rbm::precondition_error("equilibria: p must be >= 2");
  const auto rep = rbm::mfl::equilibria(drift);
  json eq = json::array();
  for (const auto& e : rep.equilibria) {
    eq.push_back({{"m", e.m}, {"derivative", e.derivative}, {"stable", e.stable}});
  }
  json j{{"beta", beta},
         {"p", p ? json(*p) : json(nullptr)},
         {"derivative_at_zero", rep.derivative_at_zero},
         {"multiplicity_warning", rep.multiplicity_warning},
         {"equilibria", eq},
         {"version", rbm::kVersion}};
  emit_json(j, out);
  return 0;
}

rbm::ps::InitSpec parse_init(const std::string& text) {
  rbm::ps::InitSpec init;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  double a = 0.0, b = 1.0;
  if (!args.empty()) {
    const auto comma = args.find(',');
    a = std::stod(args.substr(0, comma));
    if (comma != std::string::npos) b = std::stod(args.substr(comma + 1));
  }
  if (kind == "point") {
    init = {rbm::ps::InitSpec::Kind::point, a, 0.0};
  } else if (kind == "gauss") {
    init = {rbm::ps::InitSpec::Kind::gaussian, a, b};
  } else if (kind == "twopoint") {
    init = {rbm::ps::InitSpec::Kind::two_point, a, 0.0};
  } else {
    throw rbm::precondition_error("ips-run: unknown init '" + text +
                                  "' (use point:a, gauss:mu,s or twopoint:a)");
  }
  return init;
}

int run_ips(const std::string& scheme_name, int n, int p, double delta, double sigma, double l_w,
            long steps, const std::string& init_text, double dt_inner, long record_every,
            std::uint64_t seed, const std::string& out, const std::string& format) {
  rbm::ps::Scheme scheme;
  if (scheme_name == "full") {
    scheme = rbm::ps::Scheme::full;
  } else if (scheme_name == "rb") {
    scheme = rbm::ps::Scheme::rb;
  } else if (scheme_name == "mean_field_rb") {
    scheme = rbm::ps::Scheme::mean_field_rb;
  } else if (scheme_name == "effective") {
    scheme = rbm::ps::Scheme::effective;
  } else {
    throw rbm::precondition_error("ips-run: unknown scheme " + scheme_name);
  }
  rbm::ps::SimConfig cfg{n, delta, p, sigma, rbm::ps::PotentialPair::double_well(l_w), dt_inner};
  const auto traj =
      rbm::ps::run(scheme, cfg, steps, parse_init(init_text), rbm::RngStream(seed), record_every);

  Table t;
  t.comment = param_comment(
      "ips-run",
      {std::string("scheme=") + scheme_name, kv("N", static_cast<long long>(n)),
       kv("p", static_cast<long long>(p)), kv("delta", delta), kv("sigma", sigma),
       kv("L_W", l_w), kv("steps", static_cast<long long>(steps)), "init=" + init_text,
       kv("record_every", static_cast<long long>(record_every)), kv("seed", seed)});
  t.header = {"step", "time", "mean", "variance", "diffusion_coefficient"};
  for (const auto& pt : traj)
    t.add_row({static_cast<long long>(pt.step), pt.time, pt.mean, pt.variance, pt.diffusion});
  emit(t, out, format);
  return 0;
}

int run_stationary(double l_w, double sigma_min, double sigma_max, int sigma_steps,
                   std::optional<double> delta, std::optional<int> p, const std::string& out,
                   const std::string& format, const std::string& meta_out) {
  using namespace rbm::stationary;
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min) || sigma_steps < 1)
    throw rbm::precondition_error("stationary: bad sigma grid");
  if (delta.has_value() != p.has_value())
    throw rbm::precondition_error("stationary: give both --delta and --p or neither");

  const StationaryModel model(l_w);
  const bool effective = delta.has_value();

  Table t;
  std::vector<std::string> meta{kv("L_W", l_w), kv("sigma_min", sigma_min),
                                kv("sigma_max", sigma_max),
                                kv("sigma_steps", static_cast<long long>(sigma_steps)),
                                kv("sigma_c", model.critical_sigma()),
                                std::string("model=") + (effective ? "effective" : "nonlinear")};
  if (effective) {
    meta.push_back(kv("delta", *delta));
    meta.push_back(kv("p", static_cast<long long>(*p)));
    meta.push_back(kv("sigma_c_eff", model.effective_critical_sigma(*delta, *p)));
  }
  t.comment = param_comment("stationary", meta);
  t.header = {"sigma", "branch", "kappa1", "kappa2", "residual"};

  for (int i = 0; i < sigma_steps; ++i) {
    const double sigma =
        sigma_steps == 1 ? sigma_min
                         : sigma_min + (sigma_max - sigma_min) * i / (sigma_steps - 1);
    if (effective) {
      try {
        for (const auto& sol : model.solve_effective(sigma, *delta, *p)) {
          t.add_row({sigma, std::string(branch_name(sol.branch)), sol.kappa1, sol.kappa2,
                     sol.residual});
        }
      } catch (const rbm::precondition_error& e) {
        std::cerr << "sigma'=" << sigma << ": " << e.what() << "\n";
      }
    } else {
      const auto zero = model.solve_branch(sigma, Branch::zero);
      t.add_row({sigma, std::string("zero"), zero.kappa1, zero.kappa2, zero.residual});
      if (sigma < model.critical_sigma() - model.options().near_critical_floor) {
        for (Branch b : {Branch::plus, Branch::minus}) {
          const auto sol = model.solve_branch(sigma, b);
          t.add_row({sigma, std::string(branch_name(b)), sol.kappa1, sol.kappa2, sol.residual});
        }
      }
    }
  }
  emit(t, out, format);

  if (!meta_out.empty()) {
    json j{{"L_W", l_w},
           {"sigma_c", model.critical_sigma()},
           {"sigma_floor", model.sigma_floor()},
           {"quadrature",
            {{"points_per_panel", model.options().points_per_panel},
             {"panels", model.options().panels},
             {"radius_rule", "max(6, 4 sqrt(1+sigma) + |kappa| + 2)"}}},
           {"near_critical_floor", model.options().near_critical_floor},
           {"lipschitz_estimate", model.lipschitz_estimate()},
           {"version", rbm::kVersion}};
    if (effective) {
      j["delta"] = *delta;
      j["p"] = *p;
      j["c0_margin"] = model.c0_margin(*delta, *p);
      j["sigma_c_eff"] = model.effective_critical_sigma(*delta, *p);
    }
    emit_json(j, meta_out);
  }
  return 0;
}

int run_verify(const std::string& suite, std::optional<std::uint64_t> seed, double tol) {
  const std::vector<std::string> suites{"appendix-a", "critical", "sqrt-scaling", "clt",
                                        "batch-force"};
  const bool needs_seed = suite == "appendix-a" || suite == "clt" || suite == "batch-force";
  if (std::find(suites.begin(), suites.end(), suite) == suites.end()) {
    std::string all;
    for (const auto& s : suites) all += s + " ";
    throw rbm::precondition_error("verify: unknown suite '" + suite + "'; available: " + all);
  }
  if (needs_seed && !seed)
    throw rbm::precondition_error("verify: suite '" + suite + "' is stochastic, give --seed");

  CheckTally tally;
  if (suite == "appendix-a") verify_appendix_a(tally, *seed);
  if (suite == "critical") verify_critical(tally, tol);
  if (suite == "sqrt-scaling") verify_sqrt_scaling(tally);
  if (suite == "clt") verify_clt(tally, *seed);
  if (suite == "batch-force") verify_batch_force(tally, *seed);

  std::cout << tally.passed << " passed, " << tally.failed << " failed\n";
  return tally.failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase-transition toolkit for mean-field particle systems with random batches"};
  app.require_subcommand(1);

  int exit_code = 0;
  std::string out, format = "csv";

  // cw-probs
  auto* probs = app.add_subcommand("cw-probs", "transition probabilities of the magnetization chain");
  int probs_n = 100;
  double probs_beta = 1.0;
  std::optional<int> probs_p;
  long probs_trials = 0;
  std::optional<std::uint64_t> probs_seed;
  probs->add_option("--N", probs_n, "spin count")->required();
  probs->add_option("--beta", probs_beta, "inverse temperature")->required();
  probs->add_option("--p", probs_p, "batch size (omit for the classical chain)");
  probs->add_option("--trials", probs_trials, "one-step experiments per state (adds empirical columns)");
  probs->add_option("--seed", probs_seed, "random seed");
  probs->add_option("--out", out, "output path (default stdout)");
  probs->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  probs->callback([&] {
    exit_code = run_cw_probs(probs_n, probs_p, probs_beta, probs_trials, probs_seed, out, format);
  });

  // cw-invariant
  auto* inv = app.add_subcommand("cw-invariant", "invariant distribution by power iteration");
  int inv_n = 1000;
  double inv_beta = 1.0, inv_eps = 1e-9;
  std::optional<int> inv_p;
  long inv_max_iter = 20'000'000;
  inv->add_option("--N", inv_n)->required();
  inv->add_option("--beta", inv_beta)->required();
  inv->add_option("--p", inv_p, "batch size (omit for the classical chain)");
  inv->add_option("--eps", inv_eps, "L1 threshold is N*eps");
  inv->add_option("--max-iter", inv_max_iter);
  inv->add_option("--out", out);
  inv->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  inv->callback(
      [&] { exit_code = run_cw_invariant(inv_n, inv_p, inv_beta, inv_eps, inv_max_iter, out, format); });

  // cw-critical
  auto* crit = app.add_subcommand("cw-critical", "critical inverse temperature scan over batch sizes");
  std::vector<int> crit_ps;
  double crit_tol = 1e-10;
  std::uint64_t crit_samples = 0;
  std::optional<std::uint64_t> crit_seed;
  crit->add_option("--p", crit_ps, "batch sizes (repeatable)")->required();
  crit->add_option("--tol", crit_tol, "root tolerance");
  crit->add_option("--mc-samples", crit_samples, "Monte-Carlo samples for g_p (0 = exact sums)");
  crit->add_option("--seed", crit_seed);
  crit->add_option("--out", out);
  crit->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  crit->callback([&] {
    exit_code = run_cw_critical(crit_ps, crit_tol, crit_samples, crit_seed, out, format);
  });

  // gp-curve
  auto* gp = app.add_subcommand("gp-curve", "slope-at-zero g_p over a beta grid, exact and Monte-Carlo");
  int gp_p = 16, gp_steps = 21;
  double gp_min = 0.5, gp_max = 2.0;
  std::uint64_t gp_samples = 0;
  std::optional<std::uint64_t> gp_seed;
  gp->add_option("--p", gp_p, "batch size")->required();
  gp->add_option("--beta-min", gp_min)->required();
  gp->add_option("--beta-max", gp_max)->required();
  gp->add_option("--beta-steps", gp_steps);
  gp->add_option("--mc-samples", gp_samples, "Monte-Carlo samples (0 = exact column only)");
  gp->add_option("--seed", gp_seed);
  gp->add_option("--out", out);
  gp->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  gp->callback([&] {
    exit_code = run_gp_curve(gp_p, gp_min, gp_max, gp_steps, gp_samples, gp_seed, out, format);
  });

  // equilibria
  auto* eq = app.add_subcommand("equilibria", "equilibria and stability of the limit ODE (JSON)");
  double eq_beta = 1.0;
  std::optional<int> eq_p;
  eq->add_option("--beta", eq_beta)->required();
  eq->add_option("--p", eq_p, "batch size (omit for the classical drift)");
  eq->add_option("--out", out);
  eq->callback([&] { exit_code = run_equilibria(eq_beta, eq_p, out); });

  // ips-run
  auto* ips = app.add_subcommand("ips-run", "simulate an interacting-particle scheme");
  std::string ips_scheme, ips_init = "gauss:0,1";
  int ips_n = 1000, ips_p = 10;
  double ips_delta = 0.01, ips_sigma = 1.0, ips_lw = 1.0, ips_dt_inner = 0.0;
  long ips_steps = 1000, ips_record = 1;
  std::optional<std::uint64_t> ips_seed;
  ips->add_option("--scheme", ips_scheme, "full|rb|mean_field_rb|effective")->required();
  ips->add_option("--N", ips_n)->required();
  ips->add_option("--p", ips_p, "batch size");
  ips->add_option("--delta", ips_delta, "time step (model parameter for the effective scheme)");
  ips->add_option("--sigma", ips_sigma, "diffusion coefficient");
  ips->add_option("--lw", ips_lw, "interaction strength L_W");
  ips->add_option("--steps", ips_steps)->required();
  ips->add_option("--init", ips_init, "point:a | gauss:mu,s | twopoint:a");
  ips->add_option("--dt-inner", ips_dt_inner, "integrator step of the effective dynamics (default delta/10)");
  ips->add_option("--record-every", ips_record);
  ips->add_option("--seed", ips_seed)->required();
  ips->add_option("--out", out);
  ips->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  ips->callback([&] {
    exit_code = run_ips(ips_scheme, ips_n, ips_p, ips_delta, ips_sigma, ips_lw, ips_steps,
                        ips_init, ips_dt_inner, ips_record, *ips_seed, out, format);
  });

  // stationary
  auto* stat = app.add_subcommand("stationary", "stationary branch solutions over a sigma grid");
  double stat_lw = 1.0, stat_min = 0.1, stat_max = 0.6;
  int stat_steps = 26;
  std::optional<double> stat_delta;
  std::optional<int> stat_p;
  std::string stat_meta;
  stat->add_option("--lw", stat_lw)->required();
  stat->add_option("--sigma-min", stat_min)->required();
  stat->add_option("--sigma-max", stat_max)->required();
  stat->add_option("--sigma-steps", stat_steps);
  stat->add_option("--delta", stat_delta, "effective dynamics delta (with --p)");
  stat->add_option("--p", stat_p, "effective dynamics batch size (with --delta)");
  stat->add_option("--meta", stat_meta, "write solver metadata JSON to this path");
  stat->add_option("--out", out);
  stat->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  stat->callback([&] {
    exit_code = run_stationary(stat_lw, stat_min, stat_max, stat_steps, stat_delta, stat_p, out,
                               format, stat_meta);
  });

  // verify
  auto* ver = app.add_subcommand("verify", "run a named invariant suite and print a check table");
  std::string ver_suite;
  std::optional<std::uint64_t> ver_seed;
  double ver_tol = 1e-10;
  ver->add_option("suite", ver_suite, "appendix-a | critical | sqrt-scaling | clt | batch-force")
      ->required();
  ver->add_option("--seed", ver_seed);
  ver->add_option("--tol", ver_tol, "root tolerance for the critical suite");
  ver->callback([&] { exit_code = run_verify(ver_suite, ver_seed, ver_tol); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const rbm::precondition_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const rbm::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
