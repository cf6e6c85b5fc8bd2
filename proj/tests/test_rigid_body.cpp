#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "slipfsi/error.hpp"
#include "slipfsi/rigid_body.hpp"

using namespace slipfsi;
using std::numbers::pi;

namespace {

struct Cloud {
  std::vector<Vec3> x;
  std::vector<double> w;
};

// Random positive weights on a random planar or spatial cloud.
Cloud random_cloud(std::mt19937_64& rng, int dim, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0), W(0.1, 2.0);
  Cloud c;
  for (int i = 0; i < n; ++i) {
    c.x.emplace_back(0.5 + 0.3 * U(rng), 0.5 + 0.3 * U(rng), dim == 3 ? 0.5 + 0.3 * U(rng) : 0.0);
    c.w.push_back(W(rng));
  }
  return c;
}

Vec3 random_vec(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> N(0.0, 1.0);
  return Vec3(N(rng), N(rng), dim == 3 ? N(rng) : 0.0);
}

Vec3 random_spin(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> N(0.0, 1.0);
  return dim == 3 ? Vec3(N(rng), N(rng), N(rng)) : Vec3(0, 0, N(rng));
}

}  // namespace

TEST_CASE("disc and ball inertia against closed forms") {
  const BodyModel disc = make_body(BodyShape::disc(1.0), [](const Vec3&) { return 1.0; });
  CHECK(disc.m == doctest::Approx(pi).epsilon(1e-12));
  CHECK(disc.inertia(RigidPose()).J(2, 2) == doctest::Approx(pi / 2).epsilon(1e-12));

  const BodyModel ball = make_body(BodyShape::sphere(1.0), [](const Vec3&) { return 1.0; }, 16, 32);
  CHECK(ball.m == doctest::Approx(4 * pi / 3).epsilon(1e-12));
  const Mat3 J = ball.inertia(RigidPose()).J;
  CHECK((J - 8 * pi / 15 * Mat3::Identity()).norm() < 1e-11);
}

TEST_CASE("body density positivity") {
  // zero on the boundary only (measure zero): accepted
  const BodyModel b = make_body(BodyShape::disc(1.0), [](const Vec3& y) { return 1.0 + y[0]; });
  CHECK(b.m == doctest::Approx(pi).epsilon(1e-12));
  CHECK(b.shape.center_offset[0] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK_THROWS_AS(make_body(BodyShape::disc(1.0), [](const Vec3& y) { return y[0]; }), Error);
}

TEST_CASE("projection examples") {
  const BodyModel disc = make_body(BodyShape::disc(1.0), [](const Vec3&) { return 1.0; });
  const RigidPose pose;
  const auto pts = disc.world_points(pose);
  const BodyInertia in = disc.inertia(pose);
  std::vector<Vec3> u(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) u[q] = Vec3(pts[q][0], 0, 0);
  RigidMotion m = project_rigid(pts, disc.mass, u, in);
  // brute-force moments: int x and int x*y over the unit disc both vanish
  double mx = 0.0, mxy = 0.0;
  const int n = 400;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = -1 + (i + 0.5) * 2.0 / n, y = -1 + (j + 0.5) * 2.0 / n;
      if (x * x + y * y < 1) {
        mx += x;
        mxy += x * y;
      }
    }
  CHECK(std::abs(mx) < 1e-9);
  CHECK(std::abs(mxy) < 1e-9);
  CHECK(m.V.norm() < 1e-12);
  CHECK(m.r.norm() < 1e-12);

  std::fill(u.begin(), u.end(), Vec3::Zero());
  m = project_rigid(pts, disc.mass, u, in);
  CHECK(m.V.norm() == 0.0);
  CHECK(m.r.norm() == 0.0);
}

TEST_CASE("projection algebra on randomized instances") {
  std::mt19937_64 rng(42);
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Cloud c = random_cloud(rng, dim, 60);
      const BodyInertia in = compute_inertia(c.x, c.w, dim);
      // rigid fields are fixed
      RigidMotion z{random_vec(rng, dim), random_spin(rng, dim), in.center};
      std::vector<Vec3> u(c.x.size());
      for (std::size_t q = 0; q < u.size(); ++q) u[q] = z.at(c.x[q]);
      RigidMotion p = project_rigid(c.x, c.w, u, in);
      CHECK((p.V - z.V).norm() < 1e-10 * (1 + z.V.norm()));
      CHECK((p.r - z.r).norm() < 1e-10 * (1 + z.r.norm()));

      // general field: idempotency, orthogonality, contraction
      for (auto& v : u) v = random_vec(rng, dim);
      p = project_rigid(c.x, c.w, u, in);
      std::vector<Vec3> pu(u.size());
      for (std::size_t q = 0; q < u.size(); ++q) pu[q] = p.at(c.x[q]);
      const RigidMotion pp = project_rigid(c.x, c.w, pu, in);
      CHECK((pp.V - p.V).norm() < 1e-10);
      CHECK((pp.r - p.r).norm() < 1e-10);
      const RigidMotion t{random_vec(rng, dim), random_spin(rng, dim), Vec3(0.1, 0.2, 0.3 * (dim == 3))};
      double ortho = 0.0, nu = 0.0, npu = 0.0;
      for (std::size_t q = 0; q < u.size(); ++q) {
        ortho += c.w[q] * (u[q] - pu[q]).dot(t.at(c.x[q]));
        nu += c.w[q] * u[q].squaredNorm();
        npu += c.w[q] * pu[q].squaredNorm();
      }
      CHECK(std::abs(ortho) < 1e-10);
      CHECK(npu <= nu + 1e-12);
    }
  }
}

TEST_CASE("pose advance") {
  RigidPose p = RigidPose::planar(Vec3(0.5, 0.5, 0), 0.0);
  RigidMotion m{Vec3(1, 0, 0), Vec3::Zero(), p.h};
  RigidPose q = advance_pose(p, m, 0.25);
  CHECK((q.h - Vec3(0.75, 0.5, 0)).norm() < 1e-15);
  m = RigidMotion{Vec3::Zero(), Vec3(0, 0, pi / 2), p.h};
  q = advance_pose(p, m, 1.0);
  CHECK((q.h - p.h).norm() < 1e-15);
  CHECK(q.angle() == doctest::Approx(pi / 2).epsilon(1e-14));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    RigidPose s;
    s.h = random_vec(rng, 3);
    RigidMotion mm{random_vec(rng, 3), random_spin(rng, 3), s.h + random_vec(rng, 3)};
    for (int k = 0; k < 100; ++k) s = advance_pose(s, mm, 0.05);
    const Vec3 y1 = random_vec(rng, 3), y2 = random_vec(rng, 3);
    CHECK(std::abs((s.to_world(y1) - s.to_world(y2)).norm() - (y1 - y2).norm()) < 1e-12);
    CHECK(std::abs(s.R.determinant() - 1.0) < 1e-10);
  }
}

TEST_CASE("material maps") {
  std::mt19937_64 rng(13);
  const RigidPose p0 = RigidPose::planar(Vec3(0.2, 0.3, 0), 0.1);
  for (int k = 0; k < 20; ++k) {
    RigidPose pt = RigidPose::planar(random_vec(rng, 2), random_spin(rng, 2)[2]);
    const Vec3 y1 = random_vec(rng, 2), y2 = random_vec(rng, 2);
    CHECK((inverse_material_map(pt, p0, material_map(pt, p0, y1)) - y1).norm() < 1e-12);
    CHECK(std::abs((material_map(pt, p0, y1) - material_map(pt, p0, y2)).norm() - (y1 - y2).norm()) < 1e-12);
  }
  CHECK((material_map(p0, p0, Vec3(0.7, 0.1, 0)) - Vec3(0.7, 0.1, 0)).norm() < 1e-15);
  const RigidPose origin;
  RigidPose moved;
  moved.h = Vec3(0.3, 0, 0);
  CHECK(transported_indicator(BodyShape::disc(0.1), moved, origin, Vec3(0.35, 0, 0), 0.0) == 1.0);
}

TEST_CASE("transported inertia keeps its eigenvalues over a revolution") {
  const BodyModel b = make_body(BodyShape::ellipsoid(0.3, 0.2, 0.1), [](const Vec3& y) { return 1.0 + y[0] + 0.5 * y[2]; },
                                16, 32);
  const auto e0 = b.inertia(RigidPose()).eigenvalues();
  RigidPose p;
  const RigidMotion m{Vec3(0.1, 0, 0), Vec3(0.3, 0.4, 1.2).normalized() * 2 * pi, Vec3::Zero()};
  for (int k = 0; k < 400; ++k) {
    p = advance_pose(p, RigidMotion{m.V, m.r, p.h}, 1.0 / 400);
    // recompute from transported points
    const BodyInertia in = compute_inertia(b.world_points(p), b.mass, 3);
    const auto e = in.eigenvalues();
    for (int i = 0; i < 3; ++i) CHECK(std::abs(e[i] - e0[i]) < 1e-10);
  }
}

TEST_CASE("collision time bound") {
  CollisionBoundInput in;
  in.dist0 = 0.3;
  in.sigma = 0.05;
  in.rho_bar = 1.0;
  in.E0 = 0.02;
  in.lambda0 = 0.0025;
  in.reach = 0.2;
  in.t_end = 10.0;
  const CollisionBound b = collision_time_bound(in);
  // monotone scan oracle
  const double C0 = std::sqrt(2.0) / std::sqrt(0.0025);
  double scan = 0.0;
  for (int i = 1; i <= 1000000; ++i) {
    const double T = i * 1e-6;
    if (T * C0 * std::exp(T / 2) * std::sqrt(in.E0) < 0.2) scan = T;
  }
  CHECK(b.C0 == doctest::Approx(C0));
  CHECK(std::abs(b.T - scan) < 2e-6);

  in.E0 = 0.0;
  CHECK(collision_time_bound(in).T == 10.0);
  in.E0 = 0.1;
  in.dist0 = 0.1;
  const CollisionBound z = collision_time_bound(in);
  CHECK(z.T == 0.0);
  CHECK(z.warning);
  in.lambda0 = 0.0;
  CHECK_THROWS_AS(collision_time_bound(in), Error);
}

TEST_CASE("wall guard") {
  CHECK(wall_guard_ok(0.3, 0.05));
  CHECK_FALSE(wall_guard_ok(0.07, 0.05));
  CHECK(wall_guard_ok(1.5 * 0.05, 0.05));
}
