#pragma once

#include <functional>
#include <vector>

#include "slipfsi/geometry.hpp"

namespace slipfsi {

/// Rigid velocity field V + r x (x - a). Planar motions keep r along z.
struct RigidMotion {
  Vec3 V = Vec3::Zero();
  Vec3 r = Vec3::Zero();
  Vec3 a = Vec3::Zero();

  Vec3 at(const Vec3& x) const { return V + r.cross(x - a); }
};

struct BodyInertia {
  double m = 0.0;
  Mat3 J = Mat3::Zero();  // about the center of mass, world frame
  Vec3 center = Vec3::Zero();
  int dim = 2;

  /// Eigenvalues of J restricted to the rotational degrees of freedom
  /// (one value in 2D, three in 3D), ascending.
  std::vector<double> eigenvalues() const;
  /// Solves J r = L on the rotational subspace.
  Vec3 solve(const Vec3& L) const;
};

/// Mass-weighted point cloud of the body in its own frame (origin at the
/// center of mass). Weights are w_q * rho_S0(y_q) and never change: the body
/// density is carried by the isometric map.
struct BodyModel {
  BodyShape shape;
  std::vector<Vec3> points;
  std::vector<double> mass;
  double m = 0.0;
  Mat3 J_body = Mat3::Zero();

  int dim() const { return shape.dim(); }
  /// World positions of the mass points for a pose.
  std::vector<Vec3> world_points(const RigidPose& pose) const;
  BodyInertia inertia(const RigidPose& pose) const;
};

using BodyDensity = std::function<double(const Vec3&)>;

/// Builds the body mass model. `density` is evaluated at shape coordinates
/// (geometric center at the origin, reference orientation). Shifts the frame
/// to the center of mass and records the offset in the returned shape.
BodyModel make_body(const BodyShape& shape, const BodyDensity& density, int radial = 24, int angular = 96);

/// Mass, center and inertia (about the center) of weighted points.
BodyInertia compute_inertia(const std::vector<Vec3>& points, const std::vector<double>& weights, int dim);

/// L^2(weights)-orthogonal projection of sampled velocities onto rigid fields
/// about inertia.center.
RigidMotion project_rigid(const std::vector<Vec3>& points, const std::vector<double>& weights,
                          const std::vector<Vec3>& velocities, const BodyInertia& inertia);

/// Translation by dt V about the center and rotation by the exact exponential
/// of dt r.
RigidPose advance_pose(const RigidPose& pose, const RigidMotion& motion, double dt);

/// eta_{t,0}: carries a point of the body at pose_0 to its position at pose_t.
Vec3 material_map(const RigidPose& pose_t, const RigidPose& pose_0, const Vec3& y);
/// eta_{0,t}.
Vec3 inverse_material_map(const RigidPose& pose_t, const RigidPose& pose_0, const Vec3& x);

/// Transported indicator chi_S(t, x) = chi_{S_0}(eta_{0,t}(x)).
double transported_indicator(const BodyShape& shape, const RigidPose& pose_t, const RigidPose& pose_0, const Vec3& x,
                             double width);

struct CollisionBoundInput {
  double dist0 = 0.0;       // initial wall distance
  double sigma = 0.0;
  double rho_bar = 1.0;     // upper density bound
  double E0 = 0.0;          // initial energy
  double g_sup = 0.0;       // sup norm of the forcing
  double gamma = 2.0;
  double lambda0 = 1.0;     // smallest inertia eigenvalue at t = 0
  double reach = 1.0;       // max |y - h| over the body
  double C = 1.0;           // Gronwall constant
  double t_end = 1.0;
};

struct CollisionBound {
  double T = 0.0;
  double C0 = 0.0;
  bool warning = false;
};

/// Largest T (bisection, capped at t_end) with
/// T C0 rho_bar^{1/2} [e^T E0 + C T |g|^{2 gamma_1}]^{1/2} < dist0 - 2 sigma.
CollisionBound collision_time_bound(const CollisionBoundInput& in);

/// True when the body may be committed (closed inequality d >= 3 sigma / 2).
bool wall_guard_ok(double wall_dist, double sigma);

/// Re-orthonormalizes a rotation when its drift from SO(d) exceeds tol.
Mat3 reorthonormalize(const Mat3& R, double tol = 1e-12);

}  // namespace slipfsi
