// Command-line driver: run, sweep, check, report.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "slipfsi/error.hpp"
#include "slipfsi/limit_lab.hpp"

namespace fs = std::filesystem;
using namespace slipfsi;

namespace {

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw Error(ErrorCode::TypeMismatch, "bad sweep value '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::string default_out(const std::string& config_path, const std::string& suffix) {
  return (fs::path("runs") / (fs::path(config_path).stem().string() + suffix)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot read " + path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// Rows of a numeric CSV with a header line.
std::vector<std::vector<double>> read_csv(const std::string& path, std::string& header) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot read " + path);
  std::getline(f, header);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(r);
  }
  return rows;
}

int cmd_run(const std::string& cfg_path, const std::string& out, std::uint64_t seed, bool seed_set) {
  SimulationConfig c = load_config(cfg_path);
  if (seed_set) c.seed = seed;
  RunOptions o;
  o.out_dir = out.empty() ? default_out(cfg_path, "") : out;
  o.quiet = false;
  const RunSummary r = run(c, o);
  std::printf("steps %d  t %.6g  E0 %.6e  max slack violation %.3e  mass drift %.3e  min wall distance %.4f  %.1f s\n",
              r.steps, r.t, r.E0, r.max_slack_violation, r.mass_drift_total, r.min_wall_distance, r.seconds);
  if (r.halt.halted)
    std::printf("halted at step %d (t = %.6g): %s\n", r.halt.step, r.halt.t, r.halt.reason.c_str());
  std::printf("output: %s\n", o.out_dir.c_str());
  return 0;
}

int cmd_sweep(const std::string& cfg_path, const std::string& param, const std::string& values, const std::string& out,
              int threads, std::uint64_t seed, bool seed_set) {
  SimulationConfig c = load_config(cfg_path);
  if (seed_set) c.seed = seed;
  const std::string dir = out.empty() ? default_out(cfg_path, "_" + param) : out;
  const SweepReport rep = run_sweep(c, param, parse_values(values), threads, dir);
  write_rates_csv(rep, dir + "/rates.csv");
  write_sweep_json(rep, dir + "/sweep.json");
  std::printf("%-10s %-12s %-12s %-12s %-12s %s\n", param.c_str(), "r_delta", "slip_jump", "slack", "weak_res", "status");
  for (const auto& e : rep.entries)
    std::printf("%-10.4g %-12.4e %-12.4e %-12.3e %-12.3e %s\n", e.value, e.r_delta, e.slip_jump, e.energy_slack_max,
                e.weak_residual, e.ok ? "ok" : e.error.c_str());
  for (const auto& [name, s] : rep.slopes)
    std::printf("slope %s = %.4f  R2 = %.4f  95%% CI [%.4f, %.4f]  tail from %d (%d points)%s\n", name.c_str(), s.slope,
                s.r2, s.ci_low, s.ci_high, s.first, s.count, s.confirmed() ? "  confirmed" : "");
  if (rep.has_slip_limit)
    std::printf("slip_jump limit %.6e +- %.2e (order %.3f)%s\n", rep.slip_limit.limit, rep.slip_limit.error,
                rep.slip_limit.order, rep.slip_limit.ok ? "" : "  (no monotone extrapolation)");
  std::printf("output: %s\n", dir.c_str());
  return 0;
}

int cmd_check(const std::string& snap_path, const std::string& cfg_path, const std::string& out, std::uint64_t seed) {
  const SimulationConfig c = load_config(cfg_path);
  const Simulation sim(c);
  const CoupledState before = sim.restore(read_snapshot(snap_path));
  EnergyLedger L;
  const CoupledState after = sim.picard_step(before, L);
  const double tol = std::max(c.picard_tol, c.ode_tol);

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd e(sim.basis().size());
  for (int j = 0; j < e.size(); ++j) e[j] = nd(gen);
  const WeakResidual rg = weak_residual(sim, before, after, TestField::galerkin(sim.basis(), e));
  nlohmann::json j;
  j["snapshot_step"] = before.step;
  j["tolerance"] = tol;
  j["galerkin"] = {{"value", rg.value}, {"scale", rg.scale}, {"relative", rg.relative()},
                   {"pass", rg.relative() <= 10.0 * tol}};
  std::printf("galerkin test: residual %.3e (relative %.3e, limit %.1e) %s\n", rg.value, rg.relative(), 10.0 * tol,
              rg.relative() <= 10.0 * tol ? "PASS" : "FAIL");
  try {
    const BlendedTestFunction phi = reference_test_function(sim, after.pose, c.delta, c.vartheta);
    const WeakResidual rb = weak_residual(sim, before, after, phi.field());
    nlohmann::json terms;
    std::printf("blended test: residual %.3e (relative %.3e)\n", rb.value, rb.relative());
    for (const auto& [name, v] : rb.terms) {
      terms[name] = v;
      std::printf("  %-13s %+.6e\n", name.c_str(), v);
    }
    j["blended"] = {{"value", rb.value}, {"scale", rb.scale}, {"relative", rb.relative()}, {"terms", terms}};
  } catch (const Error& ex) {
    std::printf("blended test skipped: %s\n", ex.what());
    j["blended"] = {{"skipped", ex.what()}};
  }
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(out + "/check.json") << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  const nlohmann::json s = nlohmann::json::parse(slurp(dir + "/summary.json"));
  std::string header;
  const auto rows = read_csv(dir + "/energy.csv", header);
  if (header.rfind(kEnergyHeader, 0) != 0) throw Error(ErrorCode::SchemaVersionMismatch, "unexpected energy.csv header");
  const double E0 = s.value("E0", 0.0);
  double power = 0.0, min_slack = 0.0, max_increase = -1e300;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    power += std::abs(rows[k][8]);
    if (k > 0) {
      min_slack = std::min(min_slack, rows[k][9]);
      max_increase = std::max(max_increase, rows[k][1] + rows[k][2] - rows[k - 1][1] - rows[k - 1][2]);
    }
  }
  std::printf("| quantity | value |\n|---|---|\n");
  std::printf("| steps | %d |\n", s.value("steps", 0));
  std::printf("| E(0) | %.6e |\n", E0);
  std::printf("| min slack | %.3e |\n", min_slack);
  std::printf("| min slack / (1 + E0) | %.3e |\n", min_slack / (1.0 + E0));
  std::printf("| max energy increase per step | %.3e |\n", rows.size() > 1 ? max_increase : 0.0);
  std::printf("| mass drift per step (max) | %.3e |\n", s.value("mass_drift_max_step", 0.0));
  std::printf("| mass drift total | %.3e |\n", s.value("mass_drift_total", 0.0));
  std::printf("| body mass drift | %.3e |\n", s.value("body_mass_drift", 0.0));
  std::printf("| density range | [%.6f, %.6f] |\n", s.value("rho_min", 0.0), s.value("rho_max", 0.0));
  std::printf("| min wall distance | %.6f |\n", s.value("min_wall_distance", 0.0));
  std::printf("| certified no-collision time | %.6g |\n", s.value("collision_bound_T", 0.0));
  std::printf("| r_delta | %.6e |\n", std::sqrt(std::max(0.0, s.value("penal_integral", 0.0))));
  std::printf("| mean slip jump | %.6e |\n", s.value("slip_jump_mean", 0.0));
  std::printf("| indicator width | %.6g |\n", s.value("indicator_width", 0.0));
  std::printf("| Picard iterations | %d |\n", s.value("picard_total", 0));
  std::printf("| wall time (s) | %.1f |\n", s.value("seconds", 0.0));
  if (s.value("halted", false))
    std::printf("| halt | step %d, %s |\n", s["halt"].value("step", 0), s["halt"].value("reason", "").c_str());
  if (fs::exists(dir + "/rates.csv")) {
    std::printf("\nrates.csv footer:\n");
    std::istringstream in(slurp(dir + "/rates.csv"));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] == '#') std::printf("  %s\n", line.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slipfsi: rigid body in a compressible fluid with Navier-slip boundaries"};
  app.require_subcommand(1);
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);

  std::string cfg, snap, param, values, run_dir;
  auto* run_cmd = app.add_subcommand("run", "run one simulation");
  run_cmd->add_option("config", cfg, "config file")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "limit study over delta, epsilon or N");
  sweep_cmd->add_option("config", cfg, "config file")->required();
  sweep_cmd->add_option("--param", param, "delta, epsilon or N")->required()->check(CLI::IsMember({"delta", "epsilon", "N"}));
  sweep_cmd->add_option("--values", values, "comma separated values")->required();
  auto* check_cmd = app.add_subcommand("check", "weak-residual audit of one step from a snapshot");
  check_cmd->add_option("snapshot", snap, "snapshot file")->required();
  check_cmd->add_option("--config", cfg, "config file")->required();
  auto* report_cmd = app.add_subcommand("report", "acceptance table for a run directory");
  report_cmd->add_option("run_dir", run_dir, "run directory")->required();
  for (auto* sub : {run_cmd, sweep_cmd, check_cmd, report_cmd}) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(cfg, out, seed, seed_opt->count() > 0);
    if (*sweep_cmd) return cmd_sweep(cfg, param, values, out, threads, seed, seed_opt->count() > 0);
    if (*check_cmd) return cmd_check(snap, cfg, out, seed);
    if (*report_cmd) return cmd_report(run_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
