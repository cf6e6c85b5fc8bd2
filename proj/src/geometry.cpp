#include "slipfsi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "slipfsi/error.hpp"

namespace slipfsi {

namespace {

constexpr double kPi = std::numbers::pi;

double robust_length(double a, double b) { return std::hypot(a, b); }
double robust_length(double a, double b, double c) { return std::sqrt(a * a + b * b + c * c); }

// Bisection for the Lagrange multiplier of the closest-point problem
// (D. Eberly, "Distance from a point to an ellipse, an ellipsoid, or a
// hyperellipsoid").
double root_2d(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = (g < 0.0) ? 0.0 : robust_length(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 1100; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double a = n0 / (s + r0), b = z1 / (s + 1.0);
    g = a * a + b * b - 1.0;
    if (g > 0.0) {
      s0 = s;
    } else if (g < 0.0) {
      s1 = s;
    } else {
      break;
    }
  }
  return s;
}

double root_3d(double r0, double r1, double z0, double z1, double z2, double g) {
  const double n0 = r0 * z0, n1 = r1 * z1;
  double s0 = z2 - 1.0;
  double s1 = (g < 0.0) ? 0.0 : robust_length(n0, n1, z2) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 1100; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double a = n0 / (s + r0), b = n1 / (s + r1), c = z2 / (s + 1.0);
    g = a * a + b * b + c * c - 1.0;
    if (g > 0.0) {
      s0 = s;
    } else if (g < 0.0) {
      s1 = s;
    } else {
      break;
    }
  }
  return s;
}

// Closest point on the ellipse with e0 >= e1 > 0 to y in the first quadrant.
double closest_2d(double e0, double e1, double y0, double y1, double& x0, double& x1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0, z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g != 0.0) {
        const double r0 = (e0 / e1) * (e0 / e1);
        const double s = root_2d(r0, z0, z1, g);
        x0 = r0 * y0 / (s + r0);
        x1 = y1 / (s + 1.0);
        return std::hypot(x0 - y0, x1 - y1);
      }
      x0 = y0;
      x1 = y1;
      return 0.0;
    }
    x0 = 0.0;
    x1 = e1;
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    x0 = e0 * xde0;
    x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    return std::hypot(x0 - y0, x1);
  }
  x0 = e0;
  x1 = 0.0;
  return std::abs(y0 - e0);
}

// Same for the ellipsoid with e0 >= e1 >= e2 > 0 and y in the first octant.
double closest_3d(const double e[3], const double y[3], double x[3]) {
  if (y[2] > 0.0) {
    if (y[1] > 0.0) {
      if (y[0] > 0.0) {
        const double z0 = y[0] / e[0], z1 = y[1] / e[1], z2 = y[2] / e[2];
        const double g = z0 * z0 + z1 * z1 + z2 * z2 - 1.0;
        if (g != 0.0) {
          const double r0 = (e[0] / e[2]) * (e[0] / e[2]);
          const double r1 = (e[1] / e[2]) * (e[1] / e[2]);
          const double s = root_3d(r0, r1, z0, z1, z2, g);
          x[0] = r0 * y[0] / (s + r0);
          x[1] = r1 * y[1] / (s + r1);
          x[2] = y[2] / (s + 1.0);
          return robust_length(x[0] - y[0], x[1] - y[1], x[2] - y[2]);
        }
        for (int k = 0; k < 3; ++k) x[k] = y[k];
        return 0.0;
      }
      x[0] = 0.0;
      return closest_2d(e[1], e[2], y[1], y[2], x[1], x[2]);
    }
    if (y[0] > 0.0) {
      x[1] = 0.0;
      return closest_2d(e[0], e[2], y[0], y[2], x[0], x[2]);
    }
    x[0] = 0.0;
    x[1] = 0.0;
    x[2] = e[2];
    return std::abs(y[2] - e[2]);
  }
  const double denom0 = e[0] * e[0] - e[2] * e[2];
  const double denom1 = e[1] * e[1] - e[2] * e[2];
  const double numer0 = e[0] * y[0], numer1 = e[1] * y[1];
  if (numer0 < denom0 && numer1 < denom1) {
    const double xde0 = numer0 / denom0, xde1 = numer1 / denom1;
    const double discr = 1.0 - xde0 * xde0 - xde1 * xde1;
    if (discr > 0.0) {
      x[0] = e[0] * xde0;
      x[1] = e[1] * xde1;
      x[2] = e[2] * std::sqrt(discr);
      return robust_length(x[0] - y[0], x[1] - y[1], x[2]);
    }
  }
  x[2] = 0.0;
  return closest_2d(e[0], e[1], y[0], y[1], x[0], x[1]);
}

// Body-frame closest boundary point; returns the unsigned distance.
double closest_point(const BodyShape& shape, const Vec3& y, Vec3& x) {
  const int d = shape.dim();
  if (shape.kind == ShapeKind::Disc || shape.kind == ShapeKind::Sphere) {
    const double r = shape.semi_axes[0];
    Vec3 yy = y;
    if (d == 2) yy[2] = 0.0;
    const double n = yy.norm();
    if (n == 0.0) {
      x = Vec3::Zero();
      x[0] = r;
      return r;
    }
    x = yy * (r / n);
    return std::abs(n - r);
  }
  // Sort axes in decreasing order and reflect into the first orthant.
  std::array<int, 3> perm{0, 1, 2};
  std::sort(perm.begin(), perm.begin() + d,
            [&](int a, int b) { return shape.semi_axes[a] > shape.semi_axes[b]; });
  double e[3] = {0, 0, 0}, ya[3] = {0, 0, 0}, xa[3] = {0, 0, 0};
  for (int k = 0; k < d; ++k) {
    e[k] = shape.semi_axes[perm[k]];
    ya[k] = std::abs(y[perm[k]]);
  }
  double dist;
  if (d == 2) {
    if (e[0] == e[1]) {
      const double n = std::hypot(ya[0], ya[1]);
      if (n == 0.0) {
        xa[0] = e[0];
      } else {
        xa[0] = ya[0] * e[0] / n;
        xa[1] = ya[1] * e[0] / n;
      }
      dist = std::abs(n - e[0]);
    } else {
      dist = closest_2d(e[0], e[1], ya[0], ya[1], xa[0], xa[1]);
    }
  } else {
    dist = closest_3d(e, ya, xa);
  }
  x = Vec3::Zero();
  for (int k = 0; k < d; ++k) x[perm[k]] = std::copysign(xa[k], y[perm[k]]);
  return dist;
}

double implicit_value(const BodyShape& shape, const Vec3& y) {
  double s = 0.0;
  for (int k = 0; k < shape.dim(); ++k) s += (y[k] / shape.semi_axes[k]) * (y[k] / shape.semi_axes[k]);
  return s - 1.0;
}

Vec3 implicit_normal(const BodyShape& shape, const Vec3& y) {
  Vec3 n = Vec3::Zero();
  for (int k = 0; k < shape.dim(); ++k) n[k] = y[k] / (shape.semi_axes[k] * shape.semi_axes[k]);
  const double len = n.norm();
  if (len == 0.0) return Vec3::UnitX();
  return n / len;
}

void check_shape(const BodyShape& shape) {
  for (int k = 0; k < shape.dim(); ++k)
    if (!(shape.semi_axes[k] > 0.0)) throw Error(ErrorCode::UnsupportedShape, "semi-axes must be positive");
}

}  // namespace

double RigidPose::angle() const { return std::atan2(R(1, 0), R(0, 0)); }

RigidPose RigidPose::planar(const Vec3& h, double angle) {
  RigidPose p;
  p.h = h;
  p.R = Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
  return p;
}

ShapeKind parse_shape_kind(const std::string& name) {
  if (name == "disc" || name == "circle") return ShapeKind::Disc;
  if (name == "ellipse") return ShapeKind::Ellipse;
  if (name == "sphere" || name == "ball") return ShapeKind::Sphere;
  if (name == "ellipsoid") return ShapeKind::Ellipsoid;
  throw Error(ErrorCode::UnsupportedShape, "unknown body shape '" + name + "'");
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Disc: return "disc";
    case ShapeKind::Ellipse: return "ellipse";
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Ellipsoid: return "ellipsoid";
  }
  return "disc";
}

double BodyShape::volume() const {
  if (dim() == 2) return kPi * semi_axes[0] * semi_axes[1];
  return 4.0 * kPi / 3.0 * semi_axes[0] * semi_axes[1] * semi_axes[2];
}

double BodyShape::circumradius() const {
  double r = 0.0;
  for (int k = 0; k < dim(); ++k) r = std::max(r, semi_axes[k]);
  return r;
}

double BodyShape::support(const Mat3& R, const Vec3& direction) const {
  const Vec3 b = R.transpose() * direction;
  double s = 0.0;
  for (int k = 0; k < dim(); ++k) s += semi_axes[k] * semi_axes[k] * b[k] * b[k];
  return std::sqrt(s);
}

double Domain::boundary_measure() const {
  if (dim == 2) return 2.0 * (extents[0] + extents[1]);
  return 2.0 * (extents[0] * extents[1] + extents[1] * extents[2] + extents[0] * extents[2]);
}

double Domain::measure() const {
  double m = 1.0;
  for (int a = 0; a < dim; ++a) m *= extents[a];
  return m;
}

bool Domain::contains(const Vec3& x, double tol) const {
  for (int a = 0; a < dim; ++a)
    if (x[a] < -tol || x[a] > extents[a] + tol) return false;
  return true;
}

Domain Domain::box(int dim, const Vec3& extents, const std::array<int, 3>& cells, int wall_order) {
  if (dim != 2 && dim != 3) throw Error(ErrorCode::UnsupportedDomain, "dimension must be 2 or 3");
  Domain d;
  d.dim = dim;
  d.extents = extents;
  if (dim == 2) d.extents[2] = 0.0;
  d.cells = cells;
  d.wall_order = wall_order;
  for (int a = 0; a < dim; ++a)
    if (!(extents[a] > 0.0) || cells[a] < 1)
      throw Error(ErrorCode::UnsupportedDomain, "box extents and cell counts must be positive");

  std::array<AxisQuadrature, 3> ax;
  for (int a = 0; a < dim; ++a) ax[a] = composite_gauss(extents[a], cells[a], wall_order);

  for (int a = 0; a < dim; ++a) {
    for (int side = 0; side < 2; ++side) {
      Vec3 n = Vec3::Zero();
      n[a] = side == 0 ? -1.0 : 1.0;
      const double xa = side == 0 ? 0.0 : extents[a];
      if (dim == 2) {
        const int b = 1 - a;
        for (std::size_t q = 0; q < ax[b].size(); ++q) {
          Vec3 x = Vec3::Zero();
          x[a] = xa;
          x[b] = ax[b].x[q];
          d.wall.push_back({x, n, ax[b].w[q]});
        }
      } else {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        for (std::size_t p = 0; p < ax[b].size(); ++p)
          for (std::size_t q = 0; q < ax[c].size(); ++q) {
            Vec3 x;
            x[a] = xa;
            x[b] = ax[b].x[p];
            x[c] = ax[c].x[q];
            d.wall.push_back({x, n, ax[b].w[p] * ax[c].w[q]});
          }
      }
    }
  }
  return d;
}

double signed_distance(const BodyShape& shape, const RigidPose& pose, const Vec3& x) {
  const Vec3 y = pose.to_body(x) - shape.center_offset;
  Vec3 c;
  const double dist = closest_point(shape, y, c);
  if (shape.kind == ShapeKind::Disc || shape.kind == ShapeKind::Sphere) {
    Vec3 yy = y;
    if (shape.dim() == 2) yy[2] = 0.0;
    return yy.norm() - shape.semi_axes[0];
  }
  const double f = implicit_value(shape, y);
  if (f == 0.0) return 0.0;
  return f < 0.0 ? -dist : dist;
}

Vec3 distance_gradient(const BodyShape& shape, const RigidPose& pose, const Vec3& x) {
  const Vec3 y = pose.to_body(x) - shape.center_offset;
  Vec3 c;
  const double dist = closest_point(shape, y, c);
  Vec3 g;
  if (dist > 1e-14 * shape.circumradius()) {
    g = (y - c) / dist;
    if (implicit_value(shape, y) < 0.0) g = -g;
  } else {
    g = implicit_normal(shape, y);
  }
  if (shape.dim() == 2) g[2] = 0.0;
  return pose.R * g;
}

double indicator_profile(double signed_dist, double width) {
  if (width <= 0.0) {
    if (signed_dist < 0.0) return 1.0;
    if (signed_dist > 0.0) return 0.0;
    return 0.5;
  }
  const double u = std::clamp((width - signed_dist) / (2.0 * width), 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double indicator(const BodyShape& shape, const RigidPose& pose, const Vec3& x, double width) {
  return indicator_profile(signed_distance(shape, pose, x), width);
}

std::vector<SurfacePoint> body_surface_quadrature(const BodyShape& shape, const RigidPose& pose, int order,
                                                  int panels) {
  check_shape(shape);
  if (order < 1 || panels < 1) throw Error(ErrorCode::InvariantViolation, "surface quadrature order must be >= 1");
  const GaussRule g = gauss_legendre(order);
  std::vector<SurfacePoint> pts;
  const double a = shape.semi_axes[0], b = shape.semi_axes[1], c = shape.semi_axes[2];
  if (shape.dim() == 2) {
    const double dth = 2.0 * kPi / panels;
    pts.reserve(static_cast<std::size_t>(panels) * order);
    for (int p = 0; p < panels; ++p) {
      for (int k = 0; k < order; ++k) {
        const double th = (p + 0.5 + 0.5 * g.nodes[k]) * dth;
        const double ct = std::cos(th), st = std::sin(th);
        const Vec3 y(a * ct, b * st, 0.0);
        const double speed = std::hypot(a * st, b * ct);
        const Vec3 n_in = -Vec3(b * ct, a * st, 0.0) / std::hypot(b * ct, a * st);
        pts.push_back({pose.to_world(y + shape.center_offset), pose.R * n_in, 0.5 * dth * g.weights[k] * speed});
      }
    }
    return pts;
  }
  const AxisQuadrature tq = composite_gauss(2.0, panels, order);
  const int nphi = 2 * panels * order;
  const double dphi = 2.0 * kPi / nphi;
  pts.reserve(tq.size() * nphi);
  for (std::size_t i = 0; i < tq.size(); ++i) {
    const double t = tq.x[i] - 1.0;
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (int j = 0; j < nphi; ++j) {
      const double phi = (j + 0.5) * dphi;
      const double cp = std::cos(phi), sp = std::sin(phi);
      const Vec3 y(a * s * cp, b * s * sp, c * t);
      const Vec3 cross(-b * c * s * cp, -a * c * s * sp, -a * b * t);
      const double area = cross.norm();
      pts.push_back({pose.to_world(y + shape.center_offset), pose.R * (cross / area), tq.w[i] * dphi * area});
    }
  }
  return pts;
}

std::vector<VolumePoint> body_volume_quadrature(const BodyShape& shape, int radial, int angular) {
  check_shape(shape);
  const GaussRule gr = gauss_legendre(radial);
  std::vector<VolumePoint> pts;
  const double a = shape.semi_axes[0], b = shape.semi_axes[1], c = shape.semi_axes[2];
  if (shape.dim() == 2) {
    const double dth = 2.0 * kPi / angular;
    pts.reserve(static_cast<std::size_t>(radial) * angular);
    for (int i = 0; i < radial; ++i) {
      const double r = 0.5 * (gr.nodes[i] + 1.0);
      const double wr = 0.5 * gr.weights[i] * r * a * b;
      for (int j = 0; j < angular; ++j) {
        const double th = (j + 0.5) * dth;
        pts.push_back({Vec3(a * r * std::cos(th), b * r * std::sin(th), 0.0), wr * dth});
      }
    }
    return pts;
  }
  const GaussRule gt = gauss_legendre(angular / 2 > 0 ? angular / 2 : 1);
  const double dphi = 2.0 * kPi / angular;
  for (int i = 0; i < radial; ++i) {
    const double r = 0.5 * (gr.nodes[i] + 1.0);
    const double wr = 0.5 * gr.weights[i] * r * r * a * b * c;
    for (std::size_t k = 0; k < gt.nodes.size(); ++k) {
      const double t = gt.nodes[k];
      const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
      for (int j = 0; j < angular; ++j) {
        const double phi = (j + 0.5) * dphi;
        pts.push_back({Vec3(a * r * s * std::cos(phi), b * r * s * std::sin(phi), c * r * t),
                       wr * gt.weights[k] * dphi});
      }
    }
  }
  return pts;
}

double wall_distance(const BodyShape& shape, const RigidPose& pose, const Domain& domain) {
  double dmin = std::numeric_limits<double>::infinity();
  const Vec3 center = pose.to_world(shape.center_offset);
  for (int a = 0; a < domain.dim; ++a) {
    Vec3 e = Vec3::Zero();
    e[a] = 1.0;
    const double s = shape.support(pose.R, e);
    dmin = std::min({dmin, center[a] - s, domain.extents[a] - center[a] - s});
  }
  if (dmin < 0.0) throw Error(ErrorCode::BodyOutsideDomain, "body intersects the domain boundary");
  return dmin;
}

}  // namespace slipfsi
