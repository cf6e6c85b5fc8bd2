#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "slipfsi/coupled.hpp"
#include "slipfsi/error.hpp"

using namespace slipfsi;

namespace {

// Small desk problem; `extra` lines override by re-declaring keys.
SimulationConfig small_config(const std::string& extra = "") {
  std::string text = R"(
[domain]
dimension = 2
extents = 1 1
grid = 16
[body]
shape = disc
semi_axes = 0.2
center0 = 0.5 0.5
rho_S0 = const 1
sigma = 0.05
[fluid]
rho_F0 = const 1
u0 = zero
gamma = 2
beta = 8
a_F = 1
mu_F = 0.05
lambda_F = 0
alpha = 1
[approximation]
delta = 0.05
epsilon = 0.01
N = 4
[time]
dt = 0.002
t_end = 0.02
)";
  SimulationConfig c = parse_config(text);
  std::istringstream in(extra);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    c = with_override(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

double max_abs_diff(const Tensor3& a, const Tensor3& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("stationary state is a fixed point") {
  const Simulation sim(small_config("a_F = 0"));
  const CoupledState s0 = sim.initial_state();
  CHECK(s0.g.norm() == 0.0);
  EnergyLedger L;
  const CoupledState s1 = sim.picard_step(s0, L);
  CHECK(L.picard_iterations == 1);
  CHECK(max_abs_diff(s0.rho.rho, s1.rho.rho) < 1e-12);
  CHECK(s1.g.cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s1.pose.h - s0.pose.h).norm() < 1e-12);
  CHECK(std::abs(s1.pose.angle() - s0.pose.angle()) < 1e-12);
}

TEST_CASE("zero forcing: total energy is nonincreasing") {
  SimulationConfig c = small_config("u0 = mode 0 0.5 1 1\nt_end = 0.2\ndt = 0.002");
  const RunSummary r = run(c);
  REQUIRE(r.steps == 100);
  for (std::size_t k = 1; k < r.ledger.size(); ++k) {
    const double prev = r.ledger[k - 1].E_kin + r.ledger[k - 1].E_elastic;
    const double cur = r.ledger[k].E_kin + r.ledger[k].E_elastic;
    CHECK(cur < prev);
    CHECK(r.ledger[k].slack >= -1e-8 * (1.0 + r.E0));
    for (double D : {r.ledger[k].D_visc, r.ledger[k].D_rho, r.ledger[k].D_wall, r.ledger[k].D_interface,
                     r.ledger[k].D_penal})
      CHECK(D >= -1e-12);
  }
  CHECK(r.mass_drift_max_step <= 1e-12);
  CHECK(r.mass_drift_total <= 1e-9);
  CHECK(r.body_mass_drift == 0.0);
}

TEST_CASE("energy budget closes with forcing") {
  const RunSummary r = run(small_config("u0 = mode 1 0.3 1 1\ng_F = const 0 -1\ng_S = const 0 -1"));
  double power = 0.0;
  for (const auto& L : r.ledger) power += std::abs(L.P_force) * 0.002;
  for (std::size_t k = 1; k < r.ledger.size(); ++k) CHECK(r.ledger[k].slack >= -1e-6 * (1.0 + r.E0 + power));
  CHECK(power > 0.0);
}

TEST_CASE("symmetric data keeps the body centered") {
  const RunSummary r = run(small_config("rho_F0 = cos 1 0.2 2 2\nt_end = 0.04"));
  CHECK(r.steps == 20);
  const CoupledState& s = r.final_state;
  CHECK((s.pose.h - Vec3(0.5, 0.5, 0)).norm() < 1e-10);
  CHECK(s.g.norm() > 1e-6);  // the pressure did drive a flow
}

TEST_CASE("wall approach halts before the guard distance") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "slipfsi_halt").string();
  fs::remove_all(dir);
  const SimulationConfig c = small_config("center0 = 0.35 0.5\nell0 = -2 0\nt_end = 0.2");
  RunOptions o;
  o.out_dir = dir;
  o.write_fields = false;
  const RunSummary r = run(c, o);
  REQUIRE(r.halt.halted);
  CHECK(r.halt.step == r.steps + 1);
  CHECK(r.min_wall_distance >= 1.5 * c.sigma);
  const Simulation sim(c);
  CHECK(sim.wall_distance_of(r.final_state.pose) >= 1.5 * c.sigma);

  // straight-line kinematics: the center cannot outrun the fastest recorded speed
  std::ifstream body(dir + "/body.csv");
  std::string line;
  std::getline(body, line);
  double vmax = 0.0;
  while (std::getline(body, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    vmax = std::max(vmax, std::hypot(v[3], v[4]));
  }
  const double d0 = 0.35 - 0.2;
  CHECK(r.halt.t >= (d0 - 1.5 * c.sigma) / vmax);
  CHECK(r.collision_bound_T <= r.halt.t);
  fs::remove_all(dir);
}

TEST_CASE("identical configs give bit-identical energy files") {
  namespace fs = std::filesystem;
  const std::string a = (fs::temp_directory_path() / "slipfsi_det_a").string();
  const std::string b = (fs::temp_directory_path() / "slipfsi_det_b").string();
  const SimulationConfig c = small_config("u0 = cellular 0.4\nrho_S0 = const 2\nt_end = 0.01");
  RunOptions o;
  o.write_fields = false;
  o.out_dir = a;
  run(c, o);
  o.out_dir = b;
  run(c, o);
  const std::string ea = slurp(a + "/energy.csv");
  CHECK(ea.rfind(kEnergyHeader, 0) == 0);
  CHECK(ea == slurp(b + "/energy.csv"));
  CHECK(slurp(a + "/body.csv") == slurp(b + "/body.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("a restored snapshot continues bit-identically") {
  namespace fs = std::filesystem;
  const SimulationConfig c = small_config("u0 = cellular 0.4\nt_end = 0.01");
  const Simulation sim(c);
  CoupledState s = sim.initial_state();
  EnergyLedger L;
  for (int k = 0; k < 2; ++k) s = sim.picard_step(s, L);
  const std::string path = (fs::temp_directory_path() / "slipfsi_restore.txt").string();
  write_snapshot(sim.snapshot(s), path);
  const CoupledState r = sim.restore(read_snapshot(path));
  EnergyLedger L1, L2;
  const CoupledState a = sim.picard_step(s, L1);
  const CoupledState b = sim.picard_step(r, L2);
  CHECK(a.g == b.g);
  CHECK(a.rho.rho.v == b.rho.rho.v);
  CHECK(L1.slack == L2.slack);
  fs::remove(path);
}

TEST_CASE("initial data") {
  const Simulation sim(small_config("rho_F0 = const 1\nrho_S0 = const 3\ndelta = 0.1"));
  const CoupledState s = sim.initial_state();
  // mollified density plus delta stays within the data range shifted by delta
  CHECK(s.rho.min() >= 1.0 + 0.1 - 1e-12);
  CHECK(s.rho.max() <= 3.0 + 0.1 + 1e-12);
  CHECK(s.rho.rho(8, 8, 0) > 2.5);
  CHECK(s.rho.rho(0, 0, 0) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(s.g.norm() == 0.0);
}

TEST_CASE("rigid data extended into the body has no penalization at field level") {
  const SimulationConfig c = small_config("u0 = rigid 0.3 -0.1 2\nell0 = 0.3 -0.1\nomega0 = 2");
  const Simulation sim(c);
  const RigidPose p = c.pose0();
  const auto pts = sim.body().world_points(p);
  std::vector<Vec3> u(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) u[q] = sim.initial_velocity(pts[q]);
  const RigidMotion m = project_rigid(pts, sim.body().mass, u, sim.body().inertia(p));
  double defect = 0.0, norm = 0.0;
  for (std::size_t q = 0; q < pts.size(); ++q) {
    defect += sim.body().mass[q] * (u[q] - m.at(pts[q])).squaredNorm();
    norm += sim.body().mass[q] * u[q].squaredNorm();
  }
  CHECK(norm > 0.0);
  CHECK(defect <= 1e-8 * norm);
}

TEST_CASE("picard cap raises PicardDivergence") {
  SimulationConfig c = small_config("u0 = cellular 0.4\npicard_maxiter = 1\npicard_tol = 1e-16");
  const Simulation sim(c);
  EnergyLedger L;
  try {
    sim.picard_step(sim.initial_state(), L);
    FAIL("expected PicardDivergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PicardDivergence);
  }
}
