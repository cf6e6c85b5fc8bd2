// Acceptance harness: one PASS/FAIL line per criterion 1-10.
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "slipfsi/error.hpp"
#include "slipfsi/limit_lab.hpp"

namespace fs = std::filesystem;
using namespace slipfsi;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Context {
  std::string configs;
  std::string work;
  std::uint64_t seed = 1;
  int threads = 1;
  // shared between criteria
  std::optional<RunSummary> reference;
  std::optional<SweepReport> sweep;

  SimulationConfig config(const std::string& name) const { return load_config(configs + "/" + name); }

  const RunSummary& reference_run() {
    if (!reference) {
      RunOptions o;
      o.out_dir = work + "/reference";
      reference = run(config("reference.ini"), o);
    }
    return *reference;
  }
  const SweepReport& delta_sweep() {
    if (!sweep) {
      const std::string dir = work + "/delta_sweep";
      sweep = run_sweep(config("shear_sweep.ini"), "delta", {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}, threads, dir);
      write_rates_csv(*sweep, dir + "/rates.csv");
      write_sweep_json(*sweep, dir + "/sweep.json");
    }
    return *sweep;
  }
};

// 1. energy inequality
Outcome energy_inequality(Context& ctx) {
  const RunSummary& r = ctx.reference_run();
  double worst0 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < r.ledger.size(); ++k) worst0 = std::min(worst0, r.ledger[k].slack / (1.0 + r.E0));

  RunOptions o;
  o.out_dir = ctx.work + "/forced";
  const SimulationConfig fc = ctx.config("forced.ini");
  const RunSummary f = run(fc, o);
  double power = 0.0;
  for (const auto& L : f.ledger) power += std::abs(L.P_force) * fc.dt;
  double worst1 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < f.ledger.size(); ++k)
    worst1 = std::min(worst1, f.ledger[k].slack / (1.0 + f.E0 + power));
  Outcome out;
  out.pass = r.steps > 0 && f.steps > 0 && worst0 >= -1e-8 && worst1 >= -1e-6 && !r.halt.halted && !f.halt.halted;
  out.detail = fmt("zero forcing: %d steps, min slack/(1+E0) = %.3e (limit -1e-8); forced: %d steps, "
                   "min slack/(1+E0+int|P|) = %.3e (limit -1e-6)",
                   r.steps, worst0, f.steps, worst1);
  return out;
}

// 2. penalization vanishing
Outcome penalization_vanishing(Context& ctx) {
  const SweepReport& rep = ctx.delta_sweep();
  double worst_ratio = 0.0;
  bool all_ok = true;
  for (const auto& e : rep.entries) {
    all_ok = all_ok && e.ok;
    worst_ratio = std::max(worst_ratio, e.penal_bound_ratio);
  }
  const SlopeFit& s = rep.slopes.at(0).second;
  Outcome out;
  out.pass = all_ok && worst_ratio <= 1.05 && s.slope >= 0.4 && s.r2 >= 0.98;
  out.detail = fmt("max (r_delta^2/delta)/(E0 + int P) = %.3f (limit 1.05); slope %.3f (tail of %d from index %d), "
                   "R2 = %.4f, 95%% CI [%.3f, %.3f]",
                   worst_ratio, s.slope, s.count, s.first, s.r2, s.ci_low, s.ci_high);
  return out;
}

// 3. slip jump survives delta -> 0
Outcome slip_jump(Context& ctx) {
  const SweepReport& rep = ctx.delta_sweep();
  std::string vals;
  for (const auto& e : rep.entries) vals += fmt("%s%.3e", vals.empty() ? "" : ", ", e.slip_jump);
  const Extrapolation& x = rep.slip_limit;
  Outcome out;
  out.pass = rep.has_slip_limit && x.ok && x.limit > 0.0 && x.limit >= 10.0 * x.error;
  out.detail = fmt("slip jump per delta [%s]; extrapolated limit %.3e +- %.3e (order %.3f, %s)", vals.c_str(), x.limit,
                   x.error, x.order, x.ok ? "monotone" : "not monotone");
  return out;
}

// 4. mass conservation
Outcome mass_conservation(Context& ctx) {
  const RunSummary& r = ctx.reference_run();
  Outcome out;
  out.pass = r.mass_drift_max_step <= 1e-12 && r.mass_drift_total <= 1e-9 && r.body_mass_drift <= 1e-12;
  out.detail = fmt("fluid drift max/step %.2e, total %.2e; body drift %.2e", r.mass_drift_max_step, r.mass_drift_total,
                   r.body_mass_drift);
  return out;
}

// 5. maximum-principle envelope on manufactured flows
Outcome envelope(Context&) {
  const Grid g{2, {32, 32, 1}, Vec3(1, 1, 0)};
  auto field = [&](const std::function<double(const Vec3&)>& f) {
    DensityField d{g, g.zeros(), 0.0};
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < g.n[1]; ++j) d.rho(i, j, 0) = f(g.center(i, j, 0));
    return d;
  };
  // exact face fluxes from a stream function psi and a potential phi
  auto fluxes = [&](const std::function<double(double, double)>& psi,
                    const std::function<double(double, double, int)>& phi_flux) {
    FaceField F = zero_fluxes(g);
    const double hx = g.h(0), hy = g.h(1);
    for (int i = 0; i <= g.n[0]; ++i)
      for (int j = 0; j < g.n[1]; ++j)
        F.f[0](i, j, 0) = psi(i * hx, (j + 1) * hy) - psi(i * hx, j * hy) + phi_flux(i * hx, j * hy, 0);
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j <= g.n[1]; ++j)
        F.f[1](i, j, 0) = -(psi((i + 1) * hx, j * hy) - psi(i * hx, j * hy)) + phi_flux(i * hx, j * hy, 1);
    return F;
  };
  auto no_psi = [](double, double) { return 0.0; };
  auto no_phi = [](double, double, int) { return 0.0; };
  struct Case {
    const char* name;
    FaceField F;
    double speed;
    double eps;
  };
  const double A = 0.05, h = g.h(0);
  // phi = A cos(pi x) cos(pi y): u = grad phi, zero normal flux on the walls
  auto pot = [&](double x, double y, int axis) {
    if (axis == 0) return -A * std::sin(pi * x) * (std::sin(pi * (y + h)) - std::sin(pi * y));
    return -A * std::sin(pi * y) * (std::sin(pi * (x + h)) - std::sin(pi * x));
  };
  std::vector<Case> cases;
  cases.push_back({"rotation", fluxes([](double x, double y) { return -0.5 * ((x - .5) * (x - .5) + (y - .5) * (y - .5)); },
                                      no_phi),
                   0.71, 1e-3});
  cases.push_back({"potential", fluxes(no_psi, pot), A * pi * std::sqrt(2.0), 1e-3});
  cases.push_back({"mixed", fluxes([](double x, double y) { return 0.1 * std::sin(pi * x) * std::sin(pi * y); }, pot),
                   0.1 * pi + A * pi * std::sqrt(2.0), 0.0});
  int violations = 0;
  std::string detail;
  for (const auto& c : cases) {
    DensityField d = field([](const Vec3& x) { return 1.0 + 0.4 * std::exp(-25 * (x - Vec3(0.35, 0.6, 0)).squaredNorm()); });
    const double lo0 = d.min(), hi0 = d.max();
    const Tensor3 div = flux_divergence(g, c.F);
    double dsup = 0.0;
    for (double v : div.v) dsup = std::max(dsup, std::abs(v));
    std::vector<EnvelopeStep> hist;
    const double dt = 0.4 * g.min_h() / c.speed;
    for (int k = 0; k < 60; ++k) {
      d = step_density(d, c.F, c.eps, dt, c.speed);
      hist.push_back({dt, dsup});
      violations += static_cast<int>(check_envelope(d, hist, lo0, hi0).violations.size());
    }
    const EnvelopeReport r = check_envelope(d, hist, lo0, hi0);
    detail += fmt("%s%s: rho in [%.4f, %.4f] within [%.4f, %.4f]", detail.empty() ? "" : "; ", c.name, d.min(),
                  d.max(), r.lower, r.upper);
  }
  Outcome out;
  out.pass = violations == 0;
  out.detail = fmt("%d violating cells over 3 flows x 60 steps; %s", violations, detail.c_str());
  return out;
}

// 6. projection algebra and transported inertia
Outcome projection(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.2, 3.0);
  double idem = 0.0, ortho = 0.0, contr = -1e300, fixed = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = trial % 2 == 0 ? 2 : 3;
    const BodyShape shape = dim == 2 ? BodyShape::ellipse(0.1 + 0.2 * P(rng) / 3, 0.1 + 0.1 * P(rng) / 3)
                                     : BodyShape::ellipsoid(0.2, 0.15, 0.1);
    const double a0 = P(rng), a1 = U(rng), a2 = U(rng);
    const BodyModel b = make_body(
        shape, [&](const Vec3& y) { return a0 + 0.5 * std::abs(a1) * (1 + std::sin(7 * y[0] + a2)); }, 8, 24);
    RigidPose pose;
    pose.h = Vec3(0.5 + 0.1 * U(rng), 0.5 + 0.1 * U(rng), dim == 3 ? 0.5 : 0.0);
    if (dim == 2) pose = RigidPose::planar(pose.h, pi * U(rng));
    const auto x = b.world_points(pose);
    const BodyInertia in = b.inertia(pose);
    std::vector<Vec3> u(x.size());
    for (auto& v : u) v = Vec3(U(rng), U(rng), dim == 3 ? U(rng) : 0.0);
    const RigidMotion p = project_rigid(x, b.mass, u, in);
    std::vector<Vec3> pu(u.size());
    for (std::size_t q = 0; q < u.size(); ++q) pu[q] = p.at(x[q]);
    const RigidMotion pp = project_rigid(x, b.mass, pu, in);
    idem = std::max({idem, (pp.V - p.V).norm(), (pp.r - p.r).norm()});
    const RigidMotion t{Vec3(U(rng), U(rng), dim == 3 ? U(rng) : 0.0),
                        dim == 3 ? Vec3(U(rng), U(rng), U(rng)) : Vec3(0, 0, U(rng)), Vec3(0.3, 0.2, 0.1)};
    double o = 0.0, nu = 0.0, np = 0.0, scale = 0.0;
    for (std::size_t q = 0; q < u.size(); ++q) {
      o += b.mass[q] * (u[q] - pu[q]).dot(t.at(x[q]));
      nu += b.mass[q] * u[q].squaredNorm();
      np += b.mass[q] * pu[q].squaredNorm();
      scale += b.mass[q] * u[q].norm() * t.at(x[q]).norm();
    }
    ortho = std::max(ortho, std::abs(o) / scale);
    contr = std::max(contr, (np - nu) / nu);
    // rigid data is fixed
    std::vector<Vec3> tu(u.size());
    for (std::size_t q = 0; q < u.size(); ++q) tu[q] = t.at(x[q]);
    const RigidMotion pt = project_rigid(x, b.mass, tu, in);
    for (const Vec3& y : {x.front(), x.back()}) fixed = std::max(fixed, (pt.at(y) - t.at(y)).norm());
  }
  // eigenvalues of the transported inertia over one revolution
  double eig = 0.0;
  for (int dim : {2, 3}) {
    const BodyShape s = dim == 2 ? BodyShape::ellipse(0.25, 0.1) : BodyShape::ellipsoid(0.3, 0.2, 0.1);
    const BodyModel b = make_body(s, [](const Vec3& y) { return 1.0 + y[0] + 0.5 * y[1]; }, 12, 32);
    RigidPose p;
    if (dim == 2) p = RigidPose::planar(Vec3(0.5, 0.5, 0), 0.0);
    const auto e0 = b.inertia(p).eigenvalues();
    const Vec3 spin = dim == 2 ? Vec3(0, 0, 2 * pi) : Vec3(0.3, 0.4, 1.2).normalized() * 2 * pi;
    for (int k = 0; k < 400; ++k) {
      p = advance_pose(p, RigidMotion{Vec3(0.05, 0, 0), spin, p.h}, 1.0 / 400);
      const auto e = compute_inertia(b.world_points(p), b.mass, dim).eigenvalues();
      for (std::size_t i = 0; i < e.size(); ++i) eig = std::max(eig, std::abs(e[i] - e0[i]) / e0.back());
    }
  }
  Outcome out;
  out.pass = idem <= 1e-10 && ortho <= 1e-10 && contr <= 1e-10 && fixed <= 1e-10 && eig <= 1e-10;
  out.detail = fmt("100 instances: idempotency %.1e, orthogonality %.1e, contraction excess %.1e, rigid fixed %.1e; "
                   "inertia eigenvalue drift over a revolution %.1e",
                   idem, ortho, std::max(0.0, contr), fixed, eig);
  return out;
}

// 7. continuity oracle
Outcome continuity_oracle(Context&) {
  auto amplitude = [](const DensityField& d) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < d.grid.n[0]; ++i) {
      const double c = std::cos(pi * d.grid.center(i, 0, 0)[0]);
      num += (d.rho(i, 0, 0) - 1.0) * c;
      den += c * c;
    }
    return num / den;
  };
  auto cosine = [](int n) {
    const Grid g{2, {n, 1, 1}, Vec3(1, 1, 0)};
    DensityField d{g, g.zeros(), 0.0};
    for (int i = 0; i < n; ++i) d.rho(i, 0, 0) = 1.0 + std::cos(pi * g.center(i, 0, 0)[0]);
    return d;
  };
  const int n = 64;
  const double eps = 0.1, dt = 0.01, h = 1.0 / n;
  const double lam = 4.0 / (h * h) * std::pow(std::sin(pi * h / 2), 2);
  DensityField d = cosine(n);
  const double a0 = amplitude(d);
  double modal = 0.0;
  for (int k = 1; k <= 100; ++k) {
    d = step_density(d, zero_fluxes(d.grid), eps, dt, 0.0);
    modal = std::max(modal, std::abs(amplitude(d) - a0 * std::pow(1.0 + eps * dt * lam, -k)));
  }
  std::vector<double> err;
  for (double tau : {0.1, 0.05, 0.025, 0.0125}) {
    DensityField e = cosine(512);
    const double b0 = amplitude(e);
    const int steps = static_cast<int>(std::lround(1.0 / tau));
    for (int k = 0; k < steps; ++k) e = step_density(e, zero_fluxes(e.grid), 0.5, tau, 0.0);
    err.push_back(std::abs(amplitude(e) - b0 * std::exp(-0.5 * pi * pi)));
  }
  double order = 1e300;
  for (std::size_t i = 1; i < err.size(); ++i) order = std::min(order, std::log2(err[i - 1] / err[i]));
  Outcome out;
  out.pass = modal <= 1e-10 && order >= 0.9;
  out.detail = fmt("modal formula error %.1e over 100 steps; min observed order under dt halving %.3f", modal, order);
  return out;
}

// 8. weak-residual audit
Outcome weak_audit(Context& ctx) {
  const SimulationConfig c = ctx.config("reference.ini");
  const Simulation sim(c);
  CoupledState s0 = sim.initial_state();
  EnergyLedger L;
  s0 = sim.picard_step(s0, L);
  const CoupledState s1 = sim.picard_step(s0, L);
  const double tol = std::max(c.picard_tol, c.ode_tol);
  std::mt19937_64 rng(ctx.seed);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd e(sim.basis().size());
    for (int j = 0; j < e.size(); ++j) e[j] = nd(rng);
    worst = std::max(worst, weak_residual(sim, s0, s1, TestField::galerkin(sim.basis(), e)).relative());
  }
  const std::vector<double> deltas{1e-1, 1e-2, 1e-3};
  double s2 = 0.0, s6 = 0.0;
  for (double p : {2.0, 6.0}) {
    std::vector<double> norms;
    for (double d : deltas) norms.push_back(reference_test_function(sim, c.pose0(), d, c.vartheta).solid_deviation_norm(p));
    (p == 2.0 ? s2 : s6) = fit_loglog(deltas, norms).slope;
  }
  Outcome out;
  out.pass = worst <= 10.0 * tol && s2 >= 0.9 * c.vartheta / 2 && s6 >= 0.9 * c.vartheta / 6;
  out.detail = fmt("Galerkin residual %.2e (limit %.1e); blended slopes p=2: %.3f (>= %.3f), p=6: %.3f (>= %.3f)", worst,
                   10.0 * tol, s2, 0.9 * c.vartheta / 2, s6, 0.9 * c.vartheta / 6);
  return out;
}

// 9. collision guard
Outcome collision_guard(Context& ctx) {
  const SimulationConfig c = ctx.config("wall_approach.ini");
  RunOptions o;
  o.out_dir = ctx.work + "/wall_approach";
  o.write_fields = false;
  const RunSummary r = run(c, o);
  Outcome out;
  out.pass = r.halt.halted && r.min_wall_distance >= 1.5 * c.sigma && r.collision_bound_T <= r.halt.t;
  out.detail = fmt("halted %s at t = %.4f; min committed wall distance %.4f (3 sigma/2 = %.4f); certified T = %.4f",
                   r.halt.halted ? "yes" : "no", r.halt.t, r.min_wall_distance, 1.5 * c.sigma, r.collision_bound_T);
  return out;
}

// 10. determinism
Outcome determinism(Context& ctx) {
  SimulationConfig c = ctx.config("reference.ini");
  c.t_end = 0.02;
  c.seed = ctx.seed;
  RunOptions o;
  o.write_fields = false;
  o.out_dir = ctx.work + "/det_a";
  run(c, o);
  o.out_dir = ctx.work + "/det_b";
  run(c, o);
  const std::string a = slurp(ctx.work + "/det_a/energy.csv"), b = slurp(ctx.work + "/det_b/energy.csv");
  Outcome out;
  out.pass = !a.empty() && a == b;
  out.detail = fmt("two runs of %d steps: energy.csv %zu bytes, %s", c.steps(), a.size(),
                   a == b ? "bit-identical" : "differ");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria 1-10"};
  Context ctx;
  std::string only;
  ctx.configs = "configs";
  ctx.work = (fs::temp_directory_path() / "slipfsi_acceptance").string();
  app.add_option("--configs", ctx.configs, "directory with the example configs");
  app.add_option("--out", ctx.work, "work directory for run outputs");
  app.add_option("--seed", ctx.seed, "seed for randomized instances");
  app.add_option("--threads", ctx.threads, "sweep workers");
  app.add_option("--only", only, "comma separated criterion numbers");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(ctx.work);

  std::set<int> selected;
  {
    std::stringstream ss(only);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) selected.insert(std::stoi(item));
  }
  const std::vector<std::pair<const char*, Outcome (*)(Context&)>> criteria = {
      {"energy inequality", energy_inequality}, {"penalization vanishing", penalization_vanishing},
      {"slip-jump survival", slip_jump},        {"mass conservation", mass_conservation},
      {"density envelope", envelope},           {"projection algebra", projection},
      {"continuity oracle", continuity_oracle}, {"weak-residual audit", weak_audit},
      {"collision guard", collision_guard},     {"determinism", determinism}};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second(ctx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s  %s: %s [%.0f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first,
                o.detail.c_str(), sec);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
