#include "slipfsi/coupled.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "json.hpp"

#include "slipfsi/error.hpp"

namespace slipfsi {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MomentumParams params_from(const SimulationConfig& c) {
  MomentumParams p;
  p.mu_F = c.mu_F;
  p.lambda_F = c.lambda_F;
  p.alpha = c.alpha;
  p.delta = c.delta;
  p.epsilon = c.epsilon;
  p.law = {c.a_F, c.gamma, c.delta, c.beta};
  return p;
}

// Separable Gaussian smoothing, std one cell, mirrored at the walls.
Tensor3 mollify(const Grid& grid, const Tensor3& in) {
  const int r = 3;
  std::vector<double> k(2 * r + 1);
  double s = 0.0;
  for (int i = -r; i <= r; ++i) s += k[i + r] = std::exp(-0.5 * i * i);
  for (double& v : k) v /= s;
  Tensor3 cur = in;
  for (int a = 0; a < grid.dim; ++a) {
    Tensor3 out(cur.n, 0.0);
    const int n = grid.n[a];
    for (int i = 0; i < cur.n[0]; ++i)
      for (int j = 0; j < cur.n[1]; ++j)
        for (int l = 0; l < cur.n[2]; ++l) {
          std::array<int, 3> c{i, j, l};
          const int base = c[a];
          double acc = 0.0;
          for (int o = -r; o <= r; ++o) {
            int m = base + o;
            while (m < 0 || m >= n) m = m < 0 ? -1 - m : 2 * n - 1 - m;
            std::array<int, 3> q = c;
            q[a] = m;
            acc += k[o + r] * cur(q[0], q[1], q[2]);
          }
          out(i, j, l) = acc;
        }
    cur = std::move(out);
  }
  return cur;
}

int cell_of(const TensorQuadrature& q, int axis, int index) { return index / q.axes[axis].points_per_cell; }

// Raw mode selected by "mode c amp k0 k1 [k2]" expressed in the orthonormal basis.
Eigen::VectorXd mode_coefficients(const SlipBasis& b, const FieldSpec& f) {
  const int c = static_cast<int>(f.args[0]);
  std::array<int, 3> k{0, 0, 0};
  for (int a = 0; a < b.dim(); ++a) k[a] = static_cast<int>(f.args[2 + a]);
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(b.size());
  bool found = false;
  for (int i = 0; i < b.size(); ++i)
    if (b.raw_modes()[i].c == c && b.raw_modes()[i].k == k) {
      raw[i] = f.args[1];
      found = true;
    }
  if (!found) throw Error(ErrorCode::InvariantViolation, "u0 mode is not in the basis: " + f.str());
  return b.transform().triangularView<Eigen::Upper>().solve(raw);
}

double vector_sup(const FieldSpec& f, const SimulationConfig& c) {
  if (f.kind == "zero") return 0.0;
  if (f.kind == "const") {
    double s = 0.0;
    for (double v : f.args) s += v * v;
    return std::sqrt(s);
  }
  const double A = std::abs(f.args[0]);
  if (f.kind == "cellular") {
    const double ratio = c.extents[1] / c.extents[0];
    return A * std::max(1.0, ratio);
  }
  return A;
}

}  // namespace

Simulation::Simulation(const SimulationConfig& config) : config_(config) {
  validate_config(config_);
  domain_ = config_.domain();
  basis_ = std::make_unique<SlipBasis>(domain_, config_.N, config_.points_per_cell);
  const Vec3 L = config_.extents;
  const int d = config_.dimension;
  const FieldSpec rs = config_.rho_S0;
  body_ = make_body(config_.body_shape(), [rs, L, d](const Vec3& y) { return eval_scalar(rs, y, L, d); });
  assembler_ = std::make_unique<MomentumAssembler>(*basis_, params_from(config_));
  // center0 is the center of mass; recheck the margin with the true geometric center
  if (!(wall_distance_of(config_.pose0()) > 2.0 * config_.sigma))
    throw Error(ErrorCode::InvariantViolation, "initial wall distance must exceed 2 sigma");
  if (config_.u0.kind == "mode") mode_coeffs_ = mode_coefficients(*basis_, config_.u0);
}

BodySnapshot Simulation::body_snapshot(const RigidPose& pose) const {
  BodySnapshot b;
  b.model = &body_;
  b.pose = pose;
  b.width = config_.chi_width();
  b.surface_order = 4;
  b.surface_panels = 64;
  return b;
}

double Simulation::wall_distance_of(const RigidPose& pose) const { return wall_distance(body_.shape, pose, domain_); }

RigidMotion Simulation::rigid_part(const Eigen::VectorXd& g, const RigidPose& pose) const {
  const Eigen::MatrixXd R = rigid_projection_map(*basis_, body_, pose);
  const Eigen::VectorXd dofs = R.transpose() * g;
  RigidMotion m;
  m.a = pose.h;
  const int d = config_.dimension;
  for (int a = 0; a < d; ++a) m.V[a] = dofs[a];
  if (d == 2) {
    m.r[2] = dofs[2];
  } else {
    for (int a = 0; a < 3; ++a) m.r[a] = dofs[3 + a];
  }
  return m;
}

VectorField Simulation::forcing_fluid() const {
  const FieldSpec f = config_.g_F;
  const Vec3 L = config_.extents;
  const int d = config_.dimension;
  return [f, L, d](const Vec3& x) { return eval_vector(f, x, L, d, Vec3::Zero()); };
}

VectorField Simulation::forcing_body() const {
  const FieldSpec f = config_.g_S;
  const Vec3 L = config_.extents;
  const int d = config_.dimension;
  return [f, L, d](const Vec3& x) { return eval_vector(f, x, L, d, Vec3::Zero()); };
}

Vec3 Simulation::initial_velocity(const Vec3& x) const {
  const RigidPose p = config_.pose0();
  const double chi = indicator(body_.shape, p, x, config_.chi_width());
  Vec3 uF = Vec3::Zero();
  if (config_.u0.kind == "mode")
    uF = basis_->evaluate(mode_coeffs_, x);
  else
    uF = eval_vector(config_.u0, x, config_.extents, config_.dimension, p.h);
  if (chi == 0.0) return uF;
  const Vec3 uS = config_.ell0 + config_.omega0.cross(x - p.h);
  return (1.0 - chi) * uF + chi * uS;
}

double Simulation::kinetic(const CoupledState& s) const { return 0.5 * s.g.dot(s.A * s.g); }

double Simulation::elastic(const DensityField& rho, const Tensor3& chi_cells) const {
  const PressureLaw& P = law();
  double e = 0.0;
  for (std::size_t c = 0; c < rho.rho.v.size(); ++c) e += P.energy(rho.rho.v[c], P.coefficient(chi_cells.v[c]));
  return e * rho.grid.cell_volume();
}

double Simulation::density_dissipation(const DensityField& rho, const Tensor3& chi_cells) const {
  const PressureLaw& P = law();
  const Grid& g = rho.grid;
  auto hp = [&](double r) { return r > 0.0 ? P.gamma * std::pow(r, P.gamma - 1.0) / (P.gamma - 1.0) : 0.0; };
  auto qp = [&](double r) { return r > 0.0 ? P.beta * std::pow(r, P.beta - 1.0) / (P.beta - 1.0) : 0.0; };
  double s = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    const double coef = g.face_area(a) / g.h(a);
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < g.n[1]; ++j)
        for (int k = 0; k < g.n[2]; ++k) {
          std::array<int, 3> L{i, j, k};
          if (++L[a] >= g.n[a]) continue;
          const double rK = rho.rho(i, j, k), rL = rho.rho(L[0], L[1], L[2]);
          const double abar = 0.5 * (P.coefficient(chi_cells(i, j, k)) + P.coefficient(chi_cells(L[0], L[1], L[2])));
          s += coef * (abar * (hp(rL) - hp(rK)) + P.delta * (qp(rL) - qp(rK))) * (rL - rK);
        }
  }
  return config_.epsilon * s;
}

CoupledState Simulation::initial_state() const {
  const SlipBasis& b = *basis_;
  const TensorQuadrature& q = b.quadrature();
  const int d = config_.dimension;
  CoupledState s;
  s.pose = config_.pose0();
  const IndicatorField chi = body_indicator(b, body_.shape, s.pose, config_.chi_width());

  const Grid grid = config_.grid_spec();
  Tensor3 rho0(grid.n, 0.0), wsum(grid.n, 0.0);
  const Tensor3 wq = b.quadrature_weights();
  std::array<Tensor3, 3> Wu;
  for (int a = 0; a < d; ++a) Wu[a] = Tensor3(wq.n, 0.0);
  std::vector<Vec3> u0(wq.v.size());
  for (int i = 0; i < wq.n[0]; ++i)
    for (int j = 0; j < wq.n[1]; ++j)
      for (int k = 0; k < wq.n[2]; ++k) {
        Vec3 x(q.axes[0].x[i], d > 1 ? q.axes[1].x[j] : 0.0, d > 2 ? q.axes[2].x[k] : 0.0);
        const double c = chi.quad(i, j, k);
        const double rF = eval_scalar(config_.rho_F0, x, config_.extents, d);
        const double rS = c > 0.0 ? eval_scalar(config_.rho_S0, body_.shape.center_offset + s.pose.to_body(x),
                                                config_.extents, d)
                                  : 0.0;
        const int ci = cell_of(q, 0, i), cj = d > 1 ? cell_of(q, 1, j) : 0, ck = d > 2 ? cell_of(q, 2, k) : 0;
        rho0(ci, cj, ck) += wq(i, j, k) * ((1.0 - c) * rF + c * rS);
        wsum(ci, cj, ck) += wq(i, j, k);
        u0[wq.index(i, j, k)] = initial_velocity(x);
      }
  for (std::size_t c = 0; c < rho0.v.size(); ++c) {
    rho0.v[c] /= wsum.v[c];
    if (rho0.v[c] < 0.0) throw Error(ErrorCode::NonpositiveDensity, "initial density is negative");
  }
  s.rho.grid = grid;
  s.rho.rho = mollify(grid, rho0);
  for (double& v : s.rho.rho.v) v += config_.delta;
  s.rho.t = 0.0;

  // momentum q0 sqrt(rho0^delta / rho0) = u0 sqrt(rho0 rho0^delta)
  for (int i = 0; i < wq.n[0]; ++i)
    for (int j = 0; j < wq.n[1]; ++j)
      for (int k = 0; k < wq.n[2]; ++k) {
        const int ci = cell_of(q, 0, i), cj = d > 1 ? cell_of(q, 1, j) : 0, ck = d > 2 ? cell_of(q, 2, k) : 0;
        const double m = wq(i, j, k) * std::sqrt(rho0(ci, cj, ck) * s.rho.rho(ci, cj, ck));
        const Vec3& u = u0[wq.index(i, j, k)];
        for (int a = 0; a < d; ++a) Wu[a](i, j, k) = m * u[a];
      }
  s.A = assembler_->mass(s.rho);
  s.g = s.A.ldlt().solve(load_vector(b, Wu));
  s.chi_cells = chi.cells;
  s.motion = rigid_part(s.g, s.pose);
  return s;
}

CoupledState Simulation::restore(const Snapshot& snap) const {
  const Grid grid = config_.grid_spec();
  if (snap.rho.grid.n != grid.n || snap.g.size() != basis_->size())
    throw Error(ErrorCode::SchemaVersionMismatch, "snapshot does not match the configured grid or basis");
  CoupledState s;
  s.step = snap.step;
  s.t = snap.t;
  s.rho = snap.rho;
  s.rho.grid = grid;
  s.g = snap.g;
  s.pose = snap.pose;
  s.motion = snap.motion;
  s.A = assembler_->mass(s.rho);
  s.chi_cells = body_indicator(*basis_, body_.shape, s.pose, config_.chi_width()).cells;
  return s;
}

Snapshot Simulation::snapshot(const CoupledState& s) const {
  Snapshot out;
  out.step = s.step;
  out.t = s.t;
  out.rho = s.rho;
  out.g = s.g;
  out.pose = s.pose;
  out.motion = s.motion;
  return out;
}

CoupledState Simulation::picard_step(const CoupledState& s, EnergyLedger& ledger) const {
  const SimulationConfig& c = config_;
  const double dt = c.dt;
  const VectorField gF = forcing_fluid(), gS = forcing_body();
  Eigen::VectorXd gm = s.g;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= c.picard_maxiter; ++it) {
    DensityField rho1 = step_density(s.rho, *basis_, gm, c.epsilon, dt, c.cfl);
    rho1.t = s.t + dt;
    const RigidMotion m = rigid_part(gm, s.pose);
    RigidPose pose1 = advance_pose(s.pose, m, dt);
    pose1.R = reorthonormalize(pose1.R);
    double dist = 0.0;
    try {
      dist = wall_distance_of(pose1);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BodyOutsideDomain) throw;
      dist = -1.0;
    }
    if (dist < 0.0 || !wall_guard_ok(dist, c.sigma))
      throw Error(ErrorCode::CollisionHalt, "wall distance " + fmt(dist) + " below 3 sigma / 2 at t = " + fmt(s.t + dt));

    const AssembledSystem sys = assembler_->assemble(s.A, rho1, gm, body_snapshot(pose1), dt, gF, gS);
    const Eigen::VectorXd g1 = step_velocity(sys, s.g, dt, c.ode_tol);
    const double res = (g1 - gm).norm() / std::max(1.0, gm.norm());
    if (res <= c.picard_tol) {
      CoupledState n;
      n.step = s.step + 1;
      n.t = s.t + dt;
      n.rho = std::move(rho1);
      n.g = g1;
      n.pose = pose1;
      n.A = sys.A_new;
      n.chi_cells = sys.chi.cells;
      n.motion = rigid_part(g1, pose1);

      EnergyLedger& L = ledger;
      L.t = n.t;
      L.E_kin = 0.5 * g1.dot(sys.A_new * g1);
      L.E_elastic = elastic(n.rho, n.chi_cells);
      L.D_visc = g1.dot(sys.visc * g1);
      L.D_rho = density_dissipation(n.rho, n.chi_cells);
      L.D_wall = g1.dot(sys.wall * g1);
      L.D_interface = g1.dot(sys.iface * g1);
      L.D_penal = g1.dot(sys.penal * g1);
      L.P_force = g1.dot(sys.F_force);
      L.P_press = g1.dot(sys.F_press);
      const double before = kinetic(s) + elastic(s.rho, s.chi_cells);
      L.slack = before + dt * L.P_force - (L.E_kin + L.E_elastic) -
                dt * (L.D_visc + L.D_rho + L.D_wall + L.D_interface + L.D_penal);
      L.picard_iterations = it;
      L.picard_residual = res;
      return n;
    }
    gm = res > prev ? Eigen::VectorXd(gm + 0.7 * (g1 - gm)) : g1;
    prev = res;
  }
  throw Error(ErrorCode::PicardDivergence,
              "no convergence in " + std::to_string(c.picard_maxiter) + " iterations at t = " + fmt(s.t + dt) +
                  " (residual " + fmt(prev) + ")");
}

CollisionBound certified_bound(const Simulation& sim, const CoupledState& s0) {
  const SimulationConfig& c = sim.config();
  CollisionBoundInput in;
  in.dist0 = sim.wall_distance_of(s0.pose);
  in.sigma = c.sigma;
  in.rho_bar = s0.rho.max();
  in.E0 = sim.kinetic(s0) + sim.elastic(s0.rho, s0.chi_cells);
  in.g_sup = std::max(vector_sup(c.g_F, c), vector_sup(c.g_S, c));
  in.gamma = c.gamma;
  in.lambda0 = sim.body().inertia(s0.pose).eigenvalues().front();
  double reach = 0.0;
  for (const Vec3& y : sim.body().points) reach = std::max(reach, y.norm());
  in.reach = reach;
  in.C = 1.0;
  in.t_end = c.t_end;
  return collision_time_bound(in);
}

void write_energy_csv(const std::vector<EnergyLedger>& rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  f << kEnergyHeader << '\n';
  for (const auto& r : rows)
    f << fmt(r.t) << ',' << fmt(r.E_kin) << ',' << fmt(r.E_elastic) << ',' << fmt(r.D_visc) << ',' << fmt(r.D_rho)
      << ',' << fmt(r.D_wall) << ',' << fmt(r.D_interface) << ',' << fmt(r.D_penal) << ',' << fmt(r.P_force) << ','
      << fmt(r.slack) << '\n';
  if (!f) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

void write_fields_csv(const Simulation& sim, const CoupledState& s, const std::string& path) {
  const Grid& g = s.rho.grid;
  std::vector<Vec3> centers;
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) centers.push_back(g.center(i, j, k));
  const Eigen::MatrixXd V = sim.basis().values(centers);
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  f << "i,j,k,x,y,z,rho,chi,u_x,u_y,u_z\n";
  std::size_t p = 0;
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k, ++p) {
        Vec3 u = Vec3::Zero();
        for (int m = 0; m < sim.basis().size(); ++m) u[sim.basis().component(m)] += V(p, m) * s.g[m];
        const Vec3& x = centers[p];
        f << i << ',' << j << ',' << k << ',' << fmt(x[0]) << ',' << fmt(x[1]) << ',' << fmt(x[2]) << ','
          << fmt(s.rho.rho(i, j, k)) << ',' << fmt(s.chi_cells(i, j, k)) << ',' << fmt(u[0]) << ',' << fmt(u[1]) << ','
          << fmt(u[2]) << '\n';
      }
  if (!f) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

std::string body_csv_header(int dim) {
  if (dim == 2) return "t,h_x,h_y,l_x,l_y,orientation,omega,wall_distance,m,J1";
  return "t,h_x,h_y,h_z,l_x,l_y,l_z,orientation_x,orientation_y,orientation_z,omega_x,omega_y,omega_z,wall_distance,m,"
         "J1,J2,J3";
}

std::string body_csv_row(const Simulation& sim, const CoupledState& s) {
  const int d = sim.config().dimension;
  const BodyInertia in = sim.body().inertia(s.pose);
  std::string r = fmt(s.t);
  for (int a = 0; a < d; ++a) r += ',' + fmt(s.pose.h[a]);
  for (int a = 0; a < d; ++a) r += ',' + fmt(s.motion.V[a]);
  if (d == 2) {
    r += ',' + fmt(s.pose.angle()) + ',' + fmt(s.motion.r[2]);
  } else {
    const Eigen::AngleAxisd aa(s.pose.R);
    const Vec3 rv = aa.angle() * aa.axis();
    for (int a = 0; a < 3; ++a) r += ',' + fmt(rv[a]);
    for (int a = 0; a < 3; ++a) r += ',' + fmt(s.motion.r[a]);
  }
  r += ',' + fmt(sim.wall_distance_of(s.pose)) + ',' + fmt(in.m);
  for (double e : in.eigenvalues()) r += ',' + fmt(e);
  return r;
}

void write_summary_json(const RunSummary& s, const SimulationConfig& config, const std::string& path) {
  nlohmann::json j;
  j["steps"] = s.steps;
  j["t"] = s.t;
  j["rho_min"] = s.rho_min;
  j["rho_max"] = s.rho_max;
  j["picard_total"] = s.picard_total;
  j["max_slack_violation"] = s.max_slack_violation;
  j["E0"] = s.E0;
  j["mass0"] = s.mass0;
  j["mass_drift_max_step"] = s.mass_drift_max_step;
  j["mass_drift_total"] = s.mass_drift_total;
  j["body_mass_drift"] = s.body_mass_drift;
  j["min_wall_distance"] = s.min_wall_distance;
  j["collision_bound_T"] = s.collision_bound_T;
  j["collision_bound_warning"] = s.collision_bound_warning;
  j["penal_integral"] = s.penal_integral;
  j["slip_jump_mean"] = s.slip_jump_mean;
  j["forcing_work"] = s.forcing_work;
  j["indicator_width"] = config.chi_width();
  j["seconds"] = s.seconds;
  j["halted"] = s.halt.halted;
  if (s.halt.halted) {
    j["halt"] = {{"step", s.halt.step}, {"t", s.halt.t}, {"reason", s.halt.reason},
                 {"wall_distance", s.halt.wall_distance}};
  }
  j["config"] = serialize_config(config);
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  f << j.dump(2) << '\n';
}

RunSummary run(const SimulationConfig& config, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const Simulation sim(config);
  RunSummary out;
  CoupledState s = sim.initial_state();
  const bool files = !opt.out_dir.empty();
  namespace fs = std::filesystem;
  std::ofstream body_csv;
  if (files) {
    fs::create_directories(opt.out_dir);
    std::ofstream(opt.out_dir + "/config.ini") << serialize_config(config);
    body_csv.open(opt.out_dir + "/body.csv");
    if (!body_csv) throw Error(ErrorCode::IoFailure, "cannot write " + opt.out_dir + "/body.csv");
    body_csv << body_csv_header(config.dimension) << '\n' << body_csv_row(sim, s) << '\n';
  }
  auto dump_state = [&](const CoupledState& st) {
    if (!files) return;
    if (opt.write_fields) write_fields_csv(sim, st, opt.out_dir + "/fields_t" + std::to_string(st.step) + ".csv");
    write_snapshot(sim.snapshot(st), opt.out_dir + "/snapshot_" + std::to_string(st.step) + ".txt");
  };
  dump_state(s);

  EnergyLedger first;
  first.E_kin = sim.kinetic(s);
  first.E_elastic = sim.elastic(s.rho, s.chi_cells);
  out.ledger.push_back(first);
  out.E0 = first.E_kin + first.E_elastic;
  out.mass0 = s.rho.total_mass();
  const double body_m0 = sim.body().inertia(s.pose).m;
  out.rho_min = s.rho.min();
  out.rho_max = s.rho.max();
  out.min_wall_distance = sim.wall_distance_of(s.pose);
  const CollisionBound cb = certified_bound(sim, s);
  out.collision_bound_T = cb.T;
  out.collision_bound_warning = cb.warning;

  const int steps = config.steps();
  double jump_time = 0.0;
  for (int k = 0; k < steps; ++k) {
    EnergyLedger L;
    CoupledState n;
    try {
      n = sim.picard_step(s, L);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CollisionHalt) throw;
      out.halt = {true, s.step + 1, s.t + config.dt, e.what(), sim.wall_distance_of(s.pose)};
      break;
    }
    const double mass_before = s.rho.total_mass();
    out.prev_state = std::move(s);
    s = std::move(n);
    out.forcing_work += config.dt * L.P_force;
    out.ledger.push_back(L);
    out.picard_total += L.picard_iterations;
    out.max_slack_violation = std::max(out.max_slack_violation, -L.slack / (1.0 + out.E0));
    const double M = s.rho.total_mass();
    out.mass_drift_max_step = std::max(out.mass_drift_max_step, std::abs(M - mass_before) / out.mass0);
    out.mass_drift_total = std::abs(M - out.mass0) / out.mass0;
    out.body_mass_drift =
        std::max(out.body_mass_drift, std::abs(sim.body().inertia(s.pose).m - body_m0) / body_m0);
    out.rho_min = std::min(out.rho_min, s.rho.min());
    out.rho_max = std::max(out.rho_max, s.rho.max());
    out.min_wall_distance = std::min(out.min_wall_distance, sim.wall_distance_of(s.pose));
    out.penal_integral += config.dt * config.delta * L.D_penal;
    const SlipDissipation sd = slip_dissipation(sim.basis(), s.g, sim.body(), s.pose, 1.0);
    out.slip_jump_mean += config.dt * sd.interface;
    jump_time += config.dt;
    if (files) body_csv << body_csv_row(sim, s) << '\n';
    if (config.snapshot_every > 0 && s.step % config.snapshot_every == 0 && s.step != steps) dump_state(s);
    if (!opt.quiet)
      std::fprintf(stderr, "step %d t=%.4g E=%.6g slack=%.3g picard=%d\n", s.step, s.t, L.E_kin + L.E_elastic,
                   L.slack, L.picard_iterations);
  }
  if (jump_time > 0.0) out.slip_jump_mean /= jump_time;
  out.steps = s.step;
  out.t = s.t;
  out.final_state = s;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (files) {
    if (s.step > 0) dump_state(s);
    write_energy_csv(out.ledger, opt.out_dir + "/energy.csv");
    write_summary_json(out, config, opt.out_dir + "/summary.json");
  }
  return out;
}

}  // namespace slipfsi
