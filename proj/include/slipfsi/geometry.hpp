#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "slipfsi/quadrature.hpp"

namespace slipfsi {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Position of the body center and orientation. Planar runs rotate about z
/// and keep the third coordinate at zero.
struct RigidPose {
  Vec3 h = Vec3::Zero();
  Mat3 R = Mat3::Identity();

  Vec3 to_world(const Vec3& body_point) const { return h + R * body_point; }
  Vec3 to_body(const Vec3& x) const { return R.transpose() * (x - h); }
  /// Rotation angle about z (meaningful for planar poses).
  double angle() const;

  static RigidPose planar(const Vec3& h, double angle);
};

enum class ShapeKind { Disc, Ellipse, Sphere, Ellipsoid };

ShapeKind parse_shape_kind(const std::string& name);
std::string to_string(ShapeKind kind);

/// Reference body: centered at the origin of its own frame with principal
/// axes along the frame axes. Stored surface normals point into the body.
struct BodyShape {
  ShapeKind kind = ShapeKind::Disc;
  Vec3 semi_axes = Vec3(0.2, 0.2, 0.0);
  /// Geometric center in the body frame. The body frame origin is the
  /// center of mass, so this is nonzero only for nonuniform body density.
  Vec3 center_offset = Vec3::Zero();

  int dim() const { return (kind == ShapeKind::Disc || kind == ShapeKind::Ellipse) ? 2 : 3; }
  double volume() const;
  double circumradius() const;
  /// Half-width of the body along a world direction for a given rotation.
  double support(const Mat3& R, const Vec3& direction) const;

  static BodyShape disc(double radius) { return {ShapeKind::Disc, Vec3(radius, radius, 0.0), Vec3::Zero()}; }
  static BodyShape ellipse(double a, double b) { return {ShapeKind::Ellipse, Vec3(a, b, 0.0), Vec3::Zero()}; }
  static BodyShape sphere(double radius) { return {ShapeKind::Sphere, Vec3(radius, radius, radius), Vec3::Zero()}; }
  static BodyShape ellipsoid(double a, double b, double c) {
    return {ShapeKind::Ellipsoid, Vec3(a, b, c), Vec3::Zero()};
  }
};

struct SurfacePoint {
  Vec3 x;
  Vec3 normal;
  double weight;
};

struct VolumePoint {
  Vec3 x;
  double weight;
};

/// Box domain [0, L_0] x ... with wall quadrature (outward normals).
struct Domain {
  int dim = 2;
  Vec3 extents = Vec3(1.0, 1.0, 0.0);
  std::array<int, 3> cells{1, 1, 1};
  int wall_order = 3;
  std::vector<SurfacePoint> wall;

  double boundary_measure() const;
  double measure() const;
  bool contains(const Vec3& x, double tol = 0.0) const;

  static Domain box(int dim, const Vec3& extents, const std::array<int, 3>& cells, int wall_order = 3);
};

/// Negative inside. Exact metric distance for discs and spheres; ellipses and
/// ellipsoids use the closest-point root (exact sign and zero set).
double signed_distance(const BodyShape& shape, const RigidPose& pose, const Vec3& x);

/// Unit outward normal of the level set through x (gradient of the distance).
Vec3 distance_gradient(const BodyShape& shape, const RigidPose& pose, const Vec3& x);

/// Smooth ramp: 1 for s <= -w, 0 for s >= w, 1/2 at s = 0. w = 0 gives the
/// sharp indicator with boundary value 1/2.
double indicator_profile(double signed_dist, double width);
double indicator(const BodyShape& shape, const RigidPose& pose, const Vec3& x, double width);

/// Composite Gauss rule on the body boundary; normals point into the body.
/// `order` is points per panel; `panels` angular panels (2D) or the latitude
/// count (3D).
std::vector<SurfacePoint> body_surface_quadrature(const BodyShape& shape, const RigidPose& pose, int order,
                                                  int panels = 32);

/// Volume rule on the reference body in shape coordinates (geometric center
/// at the origin, center_offset not applied).
std::vector<VolumePoint> body_volume_quadrature(const BodyShape& shape, int radial, int angular);

/// Minimum distance from the body to the box walls.
double wall_distance(const BodyShape& shape, const RigidPose& pose, const Domain& domain);

}  // namespace slipfsi
