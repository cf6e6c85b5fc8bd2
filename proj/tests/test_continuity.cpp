#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "slipfsi/continuity.hpp"
#include "slipfsi/error.hpp"

using namespace slipfsi;
using std::numbers::pi;

namespace {

Grid unit_grid(int nx, int ny) { return Grid{2, {nx, ny, 1}, Vec3(1, 1, 0)}; }

DensityField make_field(const Grid& g, const std::function<double(const Vec3&)>& f) {
  DensityField d{g, g.zeros(), 0.0};
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j) d.rho(i, j, 0) = f(g.center(i, j, 0));
  return d;
}

// Exact face fluxes of a stream-function flow: the flux through a face is
// the difference of psi at its end points.
FaceField stream_fluxes(const Grid& g, const std::function<double(double, double)>& psi) {
  FaceField F = zero_fluxes(g);
  const double hx = g.h(0), hy = g.h(1);
  for (int i = 0; i <= g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j) F.f[0](i, j, 0) = psi(i * hx, (j + 1) * hy) - psi(i * hx, j * hy);
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j <= g.n[1]; ++j) F.f[1](i, j, 0) = -(psi((i + 1) * hx, j * hy) - psi(i * hx, j * hy));
  return F;
}

// Cell-average of a cos(pi x) profile along x.
double cos_amplitude(const DensityField& d) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < d.grid.n[0]; ++i) {
    const double c = std::cos(pi * d.grid.center(i, 0, 0)[0]);
    num += (d.rho(i, 0, 0) - 1.0) * c;
    den += c * c;
  }
  return num / den;
}

double l1_diff(const DensityField& a, const DensityField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rho.v.size(); ++i) s += std::abs(a.rho.v[i] - b.rho.v[i]);
  return s * a.grid.cell_volume();
}

}  // namespace

TEST_CASE("constant density is a steady state without flow") {
  const Grid g = unit_grid(16, 16);
  DensityField d = make_field(g, [](const Vec3&) { return 1.7; });
  for (int k = 0; k < 10; ++k) d = step_density(d, zero_fluxes(g), 0.01, 0.01, 0.0);
  for (double r : d.rho.v) CHECK(std::abs(r - 1.7) < 1e-14);
}

TEST_CASE("Neumann cosine mode decays at the discrete modal rate") {
  const int n = 64;
  const Grid g = unit_grid(n, 1);
  const double eps = 0.1, dt = 0.01;
  DensityField d = make_field(g, [](const Vec3& x) { return 1.0 + std::cos(pi * x[0]); });
  const double a0 = cos_amplitude(d);
  const double h = 1.0 / n;
  const double lam = 4.0 / (h * h) * std::pow(std::sin(pi * h / 2), 2);
  for (int k = 1; k <= 50; ++k) {
    d = step_density(d, zero_fluxes(g), eps, dt, 0.0);
    CHECK(std::abs(cos_amplitude(d) - a0 * std::pow(1.0 + eps * dt * lam, -k)) < 1e-10);
  }

  // first order in dt toward the continuous factor exp(-eps pi^2 t)
  const Grid gf = unit_grid(512, 1);
  std::vector<double> err;
  for (double tau : {0.1, 0.05, 0.025}) {
    DensityField e = make_field(gf, [](const Vec3& x) { return 1.0 + std::cos(pi * x[0]); });
    const double b0 = cos_amplitude(e);
    const int steps = static_cast<int>(std::lround(1.0 / tau));
    for (int k = 0; k < steps; ++k) e = step_density(e, zero_fluxes(gf), 0.5, tau, 0.0);
    err.push_back(std::abs(cos_amplitude(e) - b0 * std::exp(-0.5 * pi * pi)));
  }
  CHECK(std::log2(err[0] / err[1]) > 0.9);
  CHECK(std::log2(err[1] / err[2]) > 0.9);
}

TEST_CASE("mass is conserved and positivity kept on random flows") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g = unit_grid(12, 10);
    DensityField d = make_field(g, [&](const Vec3&) { return P(rng); });
    FaceField F = zero_fluxes(g);
    double sup = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < F.f[a].n[0]; ++i)
        for (int j = 0; j < F.f[a].n[1]; ++j) {
          const bool wall = (a == 0 && (i == 0 || i == g.n[0])) || (a == 1 && (j == 0 || j == g.n[1]));
          const double u = wall ? 0.0 : U(rng);
          F.f[a](i, j, 0) = u * g.face_area(a);
          sup = std::max(sup, std::abs(u));
        }
    const double eps = trial % 2 == 0 ? 0.0 : 1e-3;
    const double dt = 0.4 * g.min_h() / sup;
    const double m0 = d.total_mass();
    for (int k = 0; k < 20; ++k) {
      d = step_density(d, F, eps, dt, sup);
      CHECK(std::abs(d.total_mass() - m0) <= 1e-13 * m0);
      CHECK(d.min() > 0.0);
    }
  }
}

TEST_CASE("CFL contract") {
  const Grid g = unit_grid(10, 10);
  const DensityField d = make_field(g, [](const Vec3&) { return 1.0; });
  CHECK_THROWS_AS(step_density(d, zero_fluxes(g), 0.0, 0.1, 1.0), Error);
  try {
    step_density(d, zero_fluxes(g), 0.0, 0.1, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CflViolation);
  }
  CHECK_NOTHROW(step_density(d, zero_fluxes(g), 0.0, 0.05, 1.0));
}

TEST_CASE("Neumann mean is time invariant") {
  const Grid g = unit_grid(20, 20);
  DensityField d = make_field(g, [](const Vec3& x) { return 1.0 + 0.5 * std::sin(3 * x[0]) * std::cos(5 * x[1]); });
  const double m0 = d.total_mass();
  for (int k = 0; k < 30; ++k) {
    d = step_density(d, zero_fluxes(g), 0.05, 0.02, 0.0);
    CHECK(std::abs(d.total_mass() - m0) <= 1e-13 * std::abs(m0));
  }
}

TEST_CASE("maximum-principle envelope") {
  const Grid g = unit_grid(24, 24);
  // no flow
  DensityField d = make_field(g, [](const Vec3&) { return 2.0; });
  std::vector<EnvelopeStep> hist;
  for (int k = 0; k < 5; ++k) {
    d = step_density(d, zero_fluxes(g), 0.01, 0.01, 0.0);
    hist.push_back({0.01, 0.0});
  }
  EnvelopeReport r = check_envelope(d, hist, 2.0, 2.0);
  CHECK(r.ok());
  CHECK(r.lower == 2.0);
  CHECK(r.upper == 2.0);

  // rigid rotation about the box centre, wall fluxes included
  const double om = 1.0;
  FaceField rot = zero_fluxes(g);
  {
    const auto psi = [om](double x, double y) { return -0.5 * om * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)); };
    rot = stream_fluxes(g, psi);
  }
  const Tensor3 div = flux_divergence(g, rot);
  for (double v : div.v) CHECK(std::abs(v) < 1e-12);
  d = make_field(g, [](const Vec3& x) { return 1.0 + 0.5 * std::exp(-20 * (x - Vec3(0.4, 0.5, 0)).squaredNorm()); });
  const double lo0 = d.min(), hi0 = d.max();
  hist.clear();
  for (int k = 0; k < 20; ++k) {
    d = step_density(d, rot, 1e-3, 0.02, 0.71 * om);
    hist.push_back({0.02, 0.0});
  }
  r = check_envelope(d, hist, lo0, hi0);
  CHECK(r.ok());
  CHECK(r.lower == lo0);

  // uniform expansion div u = c: uniform density follows the lower bound
  const double c = 0.8, dt = 0.01;
  FaceField ex = zero_fluxes(g);
  for (int i = 0; i <= g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j) ex.f[0](i, j, 0) = 0.5 * c * (i * g.h(0) - 0.5) * g.face_area(0);
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j <= g.n[1]; ++j) ex.f[1](i, j, 0) = 0.5 * c * (j * g.h(1) - 0.5) * g.face_area(1);
  for (double v : flux_divergence(g, ex).v) CHECK(v == doctest::Approx(c).epsilon(1e-12));
  d = make_field(g, [](const Vec3&) { return 1.0; });
  hist.clear();
  const int steps = 50;
  for (int k = 0; k < steps; ++k) {
    d = step_density(d, ex, 0.0, dt, 0.5 * c * std::sqrt(0.5));
    hist.push_back({dt, c});
  }
  r = check_envelope(d, hist, 1.0, 1.0);
  CHECK(r.ok());
  for (double v : d.rho.v) CHECK(std::abs(v - r.lower) < 1e-12);
  CHECK(r.upper > 1.0);
  // the lower bound tracks exp(-c t) to first order
  CHECK(std::abs(r.lower - std::exp(-c * dt * steps)) < c * c * dt * steps * dt);

  // a perturbed state is flagged with its location
  DensityField bad = d;
  bad.rho(3, 4, 0) = 10.0;
  r = check_envelope(bad, hist, 1.0, 1.0);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].cell == std::array<int, 3>{3, 4, 0});
}

TEST_CASE("renormalized continuity residual") {
  const Grid g = unit_grid(16, 16);
  const auto psi = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y) / pi; };
  const FaceField F = stream_fluxes(g, psi);
  const DensityField d0 = make_field(g, [](const Vec3& x) { return 1.0 + 0.5 * std::cos(pi * x[0]) * std::cos(pi * x[1]); });
  const DensityField d1 = step_density(d0, F, 1e-2, 0.01, 1.0);
  CHECK(std::abs(renormalization_residual(d0, d1, F, Renormalization::identity(), 1e-2, 0.01)) < 1e-10);
  CHECK(renormalization_residual(d0, d1, F, Renormalization::constant(3.0), 1e-2, 0.01) == 0.0);

  DensityField neg = d1;
  neg.rho(0, 0, 0) = 0.0;
  CHECK_THROWS_AS(renormalization_residual(d0, neg, F, Renormalization::z_log_z(), 1e-2, 0.01), Error);

  // z log z: simultaneous (dt, h) refinement
  std::vector<double> res;
  for (int n : {16, 32, 64, 128}) {
    const Grid gn = unit_grid(n, n);
    const double dt = 0.16 / n;
    const FaceField Fn = stream_fluxes(gn, psi);
    const DensityField a = make_field(gn, [](const Vec3& x) { return 1.0 + 0.5 * std::cos(pi * x[0]) * std::cos(pi * x[1]); });
    const DensityField b = step_density(a, Fn, 1e-2, dt, 1.0);
    res.push_back(std::abs(renormalization_residual(a, b, Fn, Renormalization::z_log_z(), 1e-2, dt)));
  }
  for (std::size_t i = 0; i + 1 < res.size(); ++i) {
    MESSAGE("zlogz residual " << res[i] << " -> " << res[i + 1]);
    CHECK(std::log2(res[i] / res[i + 1]) >= 0.9);
  }
}

TEST_CASE("vanishing diffusion converges at first order in epsilon") {
  const Grid g = unit_grid(32, 32);
  const auto psi = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y) / pi; };
  const FaceField F = stream_fluxes(g, psi);
  auto solve = [&](double eps) {
    DensityField d = make_field(g, [](const Vec3& x) { return 1.0 + 0.5 * std::cos(pi * x[0]) * std::cos(2 * pi * x[1]); });
    for (int k = 0; k < 20; ++k) d = step_density(d, F, eps, 0.01, 1.0);
    return d;
  };
  const DensityField ref = solve(1e-7);
  std::vector<double> err;
  for (double eps : {1e-2, 1e-3, 1e-4}) err.push_back(l1_diff(solve(eps), ref));
  for (std::size_t i = 0; i + 1 < err.size(); ++i) CHECK(std::log10(err[i] / err[i + 1]) >= 0.9);
}
