#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "slipfsi/error.hpp"
#include "slipfsi/momentum.hpp"

using namespace slipfsi;
using std::numbers::pi;

namespace {

struct Fixture {
  Domain domain = Domain::box(2, Vec3(1, 1, 0), {16, 16, 1});
  SlipBasis basis{domain, 4};
  BodyModel body = make_body(BodyShape::disc(0.2), [](const Vec3& y) { return 1.0 + 0.5 * y[0]; });
  RigidPose pose = RigidPose::planar(Vec3(0.45, 0.52, 0), 0.3);
  BodySnapshot snap() const { return {&body, pose, 1.0 / 16, 4, 64}; }
};

DensityField uniform_density(const SlipBasis& b, double value) {
  DensityField r;
  r.grid = Grid::from_domain(b.domain());
  r.rho = Tensor3(r.grid.n, value);
  return r;
}

DensityField smooth_density(const SlipBasis& b) {
  DensityField r = uniform_density(b, 0.0);
  for (int i = 0; i < r.grid.n[0]; ++i)
    for (int j = 0; j < r.grid.n[1]; ++j) {
      const Vec3 x = r.grid.center(i, j, 0);
      r.rho(i, j, 0) = 1.0 + 0.3 * std::cos(pi * x[0]) * std::cos(2 * pi * x[1]);
    }
  return r;
}

Eigen::VectorXd random_coeffs(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = N(rng);
  return g;
}

Eigen::VectorXd raw_combination(const SlipBasis& b, const std::vector<std::pair<int, std::array<int, 3>>>& modes,
                                const std::vector<double>& coef) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(b.size());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    bool found = false;
    for (int i = 0; i < b.size(); ++i)
      if (b.raw_modes()[i].c == modes[m].first && b.raw_modes()[i].k == modes[m].second) {
        a[i] += coef[m];
        found = true;
      }
    REQUIRE(found);
  }
  return b.transform().triangularView<Eigen::Upper>().solve(a);
}

// Volume quadrature points and weights of the basis grid.
void volume_points(const SlipBasis& b, std::vector<Vec3>& x, std::vector<double>& w) {
  const auto& q = b.quadrature();
  for (std::size_t i = 0; i < q.axes[0].size(); ++i)
    for (std::size_t j = 0; j < q.axes[1].size(); ++j) {
      x.emplace_back(q.axes[0].x[i], q.axes[1].x[j], 0.0);
      w.push_back(q.axes[0].w[i] * q.axes[1].w[j]);
    }
}

MomentumParams default_params() {
  MomentumParams p;
  p.mu_F = 0.5;
  p.lambda_F = 0.2;
  p.alpha = 0.7;
  p.delta = 0.05;
  p.epsilon = 0.01;
  p.law = {1.0, 2.0, 0.05, 8.0};
  return p;
}

const VectorField zero_field = [](const Vec3&) { return Vec3::Zero().eval(); };

double min_sym_eig(const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("pressure law examples") {
  const PressureLaw law{1.0, 2.0, 0.1, 8.0};
  CHECK(evaluate_pressure(law, 1.0, 0.0) == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(evaluate_pressure(law, 1.0, 1.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(evaluate_pressure(law, 0.0, 0.0) == 0.0);
  // p = rho H' - H
  for (double rho : {0.3, 1.0, 1.7})
    for (double a : {0.0, 0.4, 1.0})
      CHECK(rho * law.energy_prime(rho, a) - law.energy(rho, a) == doctest::Approx(law.pressure(rho, a)).epsilon(1e-13));
  // monotone in rho
  double prev = -1.0;
  for (double rho = 0.0; rho < 3.0; rho += 0.1) {
    const double p = evaluate_pressure(law, rho, 0.3);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("mass matrix of a uniform density") {
  Fixture f;
  MomentumAssembler as(f.basis, default_params());
  const int n = f.basis.size();
  CHECK((as.mass(uniform_density(f.basis, 1.0)) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((as.mass(uniform_density(f.basis, 2.5)) - 2.5 * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("wall friction vanishes for a field with zero tangential trace") {
  Fixture f;
  MomentumAssembler as(f.basis, default_params());
  // sin(pi x)(1 - cos(2 pi y)) e_x: normal on x-walls, zero on y-walls
  const Eigen::VectorXd g = raw_combination(f.basis, {{0, {1, 0, 0}}, {0, {1, 2, 0}}}, {1.0, -1.0});
  CHECK(g.norm() > 0.5);
  const Eigen::VectorXd Wg = as.wall_block() * g;
  CHECK(Wg.cwiseAbs().maxCoeff() < 1e-12);
  for (const auto& w : f.domain.wall) {
    const Vec3 u = f.basis.evaluate(g, w.x);
    CHECK(std::abs(u.squaredNorm() - std::pow(u.dot(w.normal), 2)) < 1e-12);
  }
  // and a generic field does feel the wall
  std::mt19937_64 rng(3);
  const Eigen::VectorXd h = random_coeffs(rng, f.basis.size());
  const double direct = tangential_dissipation(
      f.domain.wall, [&](const Vec3& x) { return f.basis.evaluate(h, x); }, default_params().alpha);
  CHECK(h.dot(as.wall_block() * h) == doctest::Approx(direct).epsilon(1e-10));
  CHECK(direct > 0.0);
}

TEST_CASE("penalization quadratic form against field quadrature") {
  Fixture f;
  const MomentumParams P = default_params();
  MomentumAssembler as(f.basis, P);
  const BodySnapshot s = f.snap();
  const AssembledSystem sys = as.assemble(as.mass(uniform_density(f.basis, 1.0)), uniform_density(f.basis, 1.0),
                                          Eigen::VectorXd::Zero(f.basis.size()), s, 1e-3, zero_field, zero_field);
  std::vector<Vec3> xs;
  std::vector<double> ws;
  volume_points(f.basis, xs, ws);
  const auto mass_pts = f.body.world_points(f.pose);
  const BodyInertia in = f.body.inertia(f.pose);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::VectorXd g = random_coeffs(rng, f.basis.size());
    std::vector<Vec3> um(mass_pts.size());
    for (std::size_t q = 0; q < mass_pts.size(); ++q) um[q] = f.basis.evaluate(g, mass_pts[q]);
    const RigidMotion Pu = project_rigid(mass_pts, f.body.mass, um, in);
    double brute = 0.0;
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double chi = indicator(f.body.shape, f.pose, xs[q], s.width);
      if (chi == 0.0) continue;
      brute += ws[q] * chi * (f.basis.evaluate(g, xs[q]) - Pu.at(xs[q])).squaredNorm();
    }
    brute /= P.delta;
    const double form = g.dot(sys.penal * g);
    CHECK(form >= 0.0);
    CHECK(std::abs(form - brute) <= 1e-8 * brute);

    // interface friction against surface quadrature of the same field
    const SlipDissipation sd = slip_dissipation(f.basis, g, f.body, f.pose, P.alpha, s.surface_order, s.surface_panels);
    CHECK(g.dot(sys.iface * g) == doctest::Approx(sd.interface).epsilon(1e-9));
    CHECK(g.dot(sys.wall * g) == doctest::Approx(sd.wall).epsilon(1e-9));
  }
}

TEST_CASE("rigid projection map matches the point projection") {
  Fixture f;
  const Eigen::MatrixXd R = rigid_projection_map(f.basis, f.body, f.pose);
  std::mt19937_64 rng(5);
  const Eigen::VectorXd g = random_coeffs(rng, f.basis.size());
  const auto pts = f.body.world_points(f.pose);
  std::vector<Vec3> u(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) u[q] = f.basis.evaluate(g, pts[q]);
  const RigidMotion m = project_rigid(pts, f.body.mass, u, f.body.inertia(f.pose));
  const Eigen::VectorXd dofs = R.transpose() * g;
  CHECK(dofs[0] == doctest::Approx(m.V[0]).epsilon(1e-12));
  CHECK(dofs[1] == doctest::Approx(m.V[1]).epsilon(1e-12));
  CHECK(dofs[2] == doctest::Approx(m.r[2]).epsilon(1e-12));
}

TEST_CASE("dissipative blocks are positive semidefinite") {
  Fixture f;
  const MomentumParams P = default_params();
  MomentumAssembler as(f.basis, P);
  std::mt19937_64 rng(2);
  const DensityField rho = smooth_density(f.basis);
  const AssembledSystem sys = as.assemble(as.mass(rho), rho, random_coeffs(rng, f.basis.size(), 0.3), f.snap(), 1e-3,
                                          zero_field, zero_field);
  const double scale_v = sys.visc.norm(), scale_p = sys.penal.norm();
  CHECK(min_sym_eig(sys.visc) >= -1e-10 * scale_v);
  CHECK(min_sym_eig(sys.wall) >= -1e-12 * sys.wall.norm());
  CHECK(min_sym_eig(sys.iface) >= -1e-12 * sys.iface.norm());
  CHECK(min_sym_eig(sys.penal) >= -1e-10 * scale_p);
  CHECK((sys.penal - sys.penal.transpose()).cwiseAbs().maxCoeff() < 1e-12 * scale_p);
  CHECK((sys.skew + sys.skew.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(min_sym_eig(sys.A) > 0.0);

  // blended viscosity positive at every quadrature point
  for (double chi : sys.chi.quad.v) {
    const double mu = (1.0 - chi) * P.mu_F + P.delta * P.delta * chi;
    const double lam = (1.0 - chi) * P.lambda_F + P.delta * P.delta * chi;
    CHECK(mu > 0.0);
    CHECK(2.0 * mu + 3.0 * lam >= 0.0);
  }
}

TEST_CASE("penalization is small on a near-rigid field") {
  // least-squares fit of a translation over a neighborhood of the body
  const Domain d = Domain::box(2, Vec3(1, 1, 0), {16, 16, 1});
  double prev = 1e300;
  for (int M : {4, 8}) {
    const SlipBasis b(d, M);
    const BodyModel body = make_body(BodyShape::disc(0.15), [](const Vec3&) { return 1.0; });
    const BodySnapshot s{&body, RigidPose::planar(Vec3(0.5, 0.5, 0), 0.0), 1.0 / 16, 4, 64};
    MomentumParams P = default_params();
    MomentumAssembler as(b, P);
    const DensityField rho = uniform_density(b, 1.0);
    const AssembledSystem sys =
        as.assemble(as.mass(rho), rho, Eigen::VectorXd::Zero(b.size()), s, 1e-3, zero_field, zero_field);
    std::vector<Vec3> xs;
    std::vector<double> ws;
    volume_points(b, xs, ws);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(b.size());
    const Eigen::MatrixXd V = b.values(xs);
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double r = (xs[q] - Vec3(0.5, 0.5, 0)).norm();
      const double bump = r < 0.3 ? 1.0 : 0.0;
      for (int j = 0; j < b.size(); ++j)
        if (b.component(j) == 0) rhs[j] += ws[q] * bump * V(q, j);
    }
    const Eigen::VectorXd fit = rhs;  // orthonormal basis: coefficients are moments
    const double form = fit.dot(sys.penal * fit);
    const double bare = fit.dot(b.to_basis(b.raw_mass(b.pair_tensor(b.weighted(
                                    [&](const Vec3& x) { return indicator(body.shape, s.pose, x, s.width); })))) *
                                fit) /
                        P.delta;
    CHECK(form < 0.05 * bare);
    CHECK(form < prev);
    prev = form;
  }
}

TEST_CASE("step_velocity algebra") {
  const int n = 5;
  std::mt19937_64 rng(4);
  AssembledSystem sys;
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(n, n);
  sys.A = X * X.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  sys.B = Eigen::MatrixXd::Random(n, n);
  sys.F = Eigen::VectorXd::Zero(n);
  CHECK(step_velocity(sys, Eigen::VectorXd::Zero(n), 0.1).norm() == 0.0);
  sys.B.setZero();
  sys.F = random_coeffs(rng, n);
  const Eigen::VectorXd g = random_coeffs(rng, n);
  const Eigen::VectorXd expect = g + 0.1 * sys.A.ldlt().solve(sys.F);
  CHECK((step_velocity(sys, g, 0.1) - expect).norm() < 1e-12 * expect.norm());
  sys.B(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step_velocity(sys, g, 0.1), Error);
}

TEST_CASE("single viscous mode decays with the implicit amplification") {
  // mu = lambda = delta^2 = 1 makes the blended viscosity uniform; for
  // sin(pi x) e_x both parts reproduce the mode: eigenvalue 2 pi^2 + pi^2.
  Fixture f;
  MomentumParams P;
  P.mu_F = 1.0;
  P.lambda_F = 1.0;
  P.delta = 1.0;
  P.alpha = 0.0;
  P.epsilon = 0.0;
  P.law = {0.0, 2.0, 1.0, 8.0};
  MomentumAssembler as(f.basis, P);
  const DensityField rho = uniform_density(f.basis, 1.0);
  const AssembledSystem full =
      as.assemble(as.mass(rho), rho, Eigen::VectorXd::Zero(f.basis.size()), f.snap(), 1e-2, zero_field, zero_field);
  const Eigen::VectorXd mode = raw_combination(f.basis, {{0, {1, 0, 0}}}, {1.0}).normalized();
  const double lambda = mode.dot(full.visc * mode);
  CHECK(lambda == doctest::Approx(3.0 * pi * pi).epsilon(1e-6));
  CHECK((full.visc * mode - lambda * mode).norm() < 1e-6 * lambda);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (full.visc + full.visc.transpose()));
  int best = 0;
  for (int k = 0; k < f.basis.size(); ++k)
    if (std::abs(es.eigenvectors().col(k).dot(mode)) > std::abs(es.eigenvectors().col(best).dot(mode))) best = k;
  const Eigen::VectorXd v = es.eigenvectors().col(best);
  const double lam = es.eigenvalues()[best];
  AssembledSystem sys;
  sys.A = Eigen::MatrixXd::Identity(f.basis.size(), f.basis.size());
  sys.B = 0.5 * (full.visc + full.visc.transpose());
  sys.F = Eigen::VectorXd::Zero(f.basis.size());
  for (double dt : {1e-3, 1e-2, 0.1}) {
    const Eigen::VectorXd g1 = step_velocity(sys, v, dt);
    CHECK((g1 - v / (1.0 + dt * lam)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("discrete energy identity of the implicit step") {
  Fixture f;
  const MomentumParams P = default_params();
  MomentumAssembler as(f.basis, P);
  std::mt19937_64 rng(8);
  const DensityField rho0 = smooth_density(f.basis);
  DensityField rho1 = rho0;
  for (double& v : rho1.rho.v) v *= 1.0 + 0.01 * std::uniform_real_distribution<double>(-1, 1)(rng);
  const Eigen::VectorXd g = random_coeffs(rng, f.basis.size(), 0.2);
  const double dt = 2e-3;
  const AssembledSystem sys =
      as.assemble(as.mass(rho0), rho1, g, f.snap(), dt, zero_field, [](const Vec3&) { return Vec3(0, -1, 0); });
  const Eigen::VectorXd g1 = step_velocity(sys, g, dt);
  const Eigen::VectorXd dg = g1 - g;
  const Eigen::MatrixXd sym = sys.visc + sys.wall + sys.iface + sys.penal;
  const double lhs = 0.5 * g1.dot(sys.A_new * g1) - 0.5 * g.dot(sys.A * g) + 0.5 * dg.dot(sys.A * dg) +
                     dt * g1.dot(sym * g1);
  const double rhs = dt * g1.dot(sys.F);
  CHECK(std::abs(lhs - rhs) < 1e-10 * (std::abs(rhs) + g.dot(sys.A * g)));
  // forcing 0, no pressure: kinetic energy does not grow
  MomentumParams Q = P;
  Q.law.a_F = 0.0;
  Q.law.delta = 0.0;
  MomentumAssembler as0(f.basis, Q);
  const AssembledSystem s0 = as0.assemble(as0.mass(rho0), rho1, g, f.snap(), dt, zero_field, zero_field);
  const Eigen::VectorXd h = step_velocity(s0, g, dt);
  CHECK(0.5 * h.dot(s0.A_new * h) <= 0.5 * g.dot(s0.A * g));
}

TEST_CASE("convection by a divergence-free field conserves kinetic energy") {
  Fixture f;
  // sin(pi x) cos(pi y) e_x - cos(pi x) sin(pi y) e_y
  const Eigen::VectorXd w = raw_combination(f.basis, {{0, {1, 1, 0}}, {1, {1, 1, 0}}}, {1.0, -1.0});
  std::array<PairTensor, 3> Tb;
  const Tensor3 wq = f.basis.quadrature_weights();
  for (int b = 0; b < 2; ++b) {
    Tensor3 W = f.basis.field_on_quadrature(w, b);
    for (std::size_t i = 0; i < W.v.size(); ++i) W.v[i] *= wq.v[i];
    Tb[b] = f.basis.pair_tensor(W);
  }
  const Eigen::MatrixXd C = f.basis.to_basis(f.basis.raw_transport(Tb));
  std::mt19937_64 rng(9);
  const Eigen::VectorXd g = random_coeffs(rng, f.basis.size());
  CHECK(std::abs(g.dot(C * g)) < 1e-8 * C.norm() * g.squaredNorm());
}

TEST_CASE("pressure force matches the volume integral of p div e") {
  Fixture f;
  MomentumAssembler as(f.basis, default_params());
  const Grid grid = Grid::from_domain(f.domain);
  Tensor3 p(grid.n, 0.0);
  for (int i = 0; i < grid.n[0]; ++i)
    for (int j = 0; j < grid.n[1]; ++j) p(i, j, 0) = 1.0 + std::sin(3.0 * i) * std::cos(0.7 * j);
  const Eigen::VectorXd Fp = as.pressure_force(p);
  // 8-point Gauss per cell: exact enough for the trigonometric divergence
  const GaussRule gr = gauss_legendre(8);
  std::vector<Vec3> xs;
  std::vector<double> ws;
  std::vector<std::array<int, 2>> cell;
  for (int i = 0; i < grid.n[0]; ++i)
    for (int j = 0; j < grid.n[1]; ++j)
      for (std::size_t a = 0; a < gr.nodes.size(); ++a)
        for (std::size_t b = 0; b < gr.nodes.size(); ++b) {
          xs.emplace_back((i + 0.5 * (1 + gr.nodes[a])) * grid.h(0), (j + 0.5 * (1 + gr.nodes[b])) * grid.h(1), 0.0);
          ws.push_back(0.25 * gr.weights[a] * gr.weights[b] * grid.cell_volume());
          cell.push_back({i, j});
        }
  const Eigen::MatrixXd Dx = f.basis.values(xs, 0), Dy = f.basis.values(xs, 1);
  Eigen::VectorXd brute = Eigen::VectorXd::Zero(f.basis.size());
  for (std::size_t q = 0; q < xs.size(); ++q)
    for (int j = 0; j < f.basis.size(); ++j) {
      const double dv = f.basis.component(j) == 0 ? Dx(q, j) : Dy(q, j);
      brute[j] += ws[q] * p(cell[q][0], cell[q][1], 0) * dv;
    }
  CHECK((Fp - brute).cwiseAbs().maxCoeff() < 1e-10 * brute.cwiseAbs().maxCoeff());
  CHECK(as.pressure_force(Tensor3(grid.n, 3.0)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("body forcing against field quadrature") {
  Fixture f;
  MomentumAssembler as(f.basis, default_params());
  const DensityField rho = smooth_density(f.basis);
  const VectorField gF = [](const Vec3& x) { return Vec3(std::sin(pi * x[1]), -1.0, 0); };
  const VectorField gS = [](const Vec3&) { return Vec3(0.0, -2.0, 0); };
  const BodySnapshot s = f.snap();
  const AssembledSystem sys =
      as.assemble(as.mass(rho), rho, Eigen::VectorXd::Zero(f.basis.size()), s, 1e-3, gF, gS);
  std::vector<Vec3> xs;
  std::vector<double> ws;
  volume_points(f.basis, xs, ws);
  const Eigen::MatrixXd V = f.basis.values(xs);
  Eigen::VectorXd brute = Eigen::VectorXd::Zero(f.basis.size());
  for (std::size_t q = 0; q < xs.size(); ++q) {
    const int ci = std::min(15, static_cast<int>(xs[q][0] * 16)), cj = std::min(15, static_cast<int>(xs[q][1] * 16));
    const double chi = indicator(f.body.shape, f.pose, xs[q], s.width);
    const Vec3 g = (1 - chi) * gF(xs[q]) + chi * gS(xs[q]);
    for (int j = 0; j < f.basis.size(); ++j) brute[j] += ws[q] * rho.rho(ci, cj, 0) * g[f.basis.component(j)] * V(q, j);
  }
  CHECK((sys.F_force - brute).cwiseAbs().maxCoeff() < 1e-10 * brute.cwiseAbs().maxCoeff());
}

TEST_CASE("slip dissipation examples") {
  const Domain d = Domain::box(2, Vec3(1, 1, 0), {8, 8, 1});
  const double alpha = 0.3;
  // normal on every wall
  const double normal = tangential_dissipation(
      d.wall, [](const Vec3& x) { return Vec3((2 * x[0] - 1) * x[1] * (1 - x[1]), (2 * x[1] - 1) * x[0] * (1 - x[0]), 0); },
      alpha);
  CHECK(std::abs(normal) < 1e-15);
  // (0, 1) is tangential on the two x-walls and normal on the y-walls
  std::vector<SurfacePoint> xwalls;
  for (const auto& w : d.wall)
    if (std::abs(w.normal[0]) > 0.5) xwalls.push_back(w);
  const VectorField up = [](const Vec3&) { return Vec3(0, 1, 0); };
  CHECK(tangential_dissipation(xwalls, up, alpha) == doctest::Approx(2 * alpha).epsilon(1e-13));
  CHECK(tangential_dissipation(d.wall, up, alpha) == doctest::Approx(2 * alpha).epsilon(1e-13));

  // rigid data on the body: zero relative slip
  const BodyModel body = make_body(BodyShape::ellipse(0.2, 0.1), [](const Vec3& y) { return 2.0 + y[1]; });
  const RigidPose pose = RigidPose::planar(Vec3(0.4, 0.6, 0), 0.5);
  const RigidMotion rig{Vec3(0.3, -0.2, 0), Vec3(0, 0, 1.5), pose.h};
  const auto pts = body.world_points(pose);
  std::vector<Vec3> u(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) u[q] = rig.at(pts[q]);
  const RigidMotion Pu = project_rigid(pts, body.mass, u, body.inertia(pose));
  const auto surf = body_surface_quadrature(body.shape, pose, 4, 64);
  const double iface =
      tangential_dissipation(surf, [&](const Vec3& x) { return Vec3(rig.at(x) - Pu.at(x)); }, alpha);
  CHECK(iface < 1e-24);

  const SlipBasis b(d, 3);
  const SlipDissipation z = slip_dissipation(b, Eigen::VectorXd::Zero(b.size()), body, pose, alpha);
  CHECK(z.wall == 0.0);
  CHECK(z.interface == 0.0);
}

TEST_CASE("assembly rejects a body outside the domain") {
  Fixture f;
  MomentumAssembler as(f.basis, default_params());
  BodySnapshot s = f.snap();
  s.pose.h = Vec3(0.1, 0.5, 0);
  const DensityField rho = uniform_density(f.basis, 1.0);
  CHECK_THROWS_AS(as.assemble(as.mass(rho), rho, Eigen::VectorXd::Zero(f.basis.size()), s, 1e-3, zero_field,
                              zero_field),
                  Error);
}
