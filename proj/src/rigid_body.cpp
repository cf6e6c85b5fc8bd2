#include "slipfsi/rigid_body.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "slipfsi/error.hpp"

namespace slipfsi {

std::vector<double> BodyInertia::eigenvalues() const {
  if (dim == 2) return {J(2, 2)};
  Eigen::SelfAdjointEigenSolver<Mat3> es(J, Eigen::EigenvaluesOnly);
  const Vec3 ev = es.eigenvalues();
  return {ev[0], ev[1], ev[2]};
}

Vec3 BodyInertia::solve(const Vec3& L) const {
  const std::vector<double> ev = eigenvalues();
  const double lo = *std::min_element(ev.begin(), ev.end());
  const double hi = *std::max_element(ev.begin(), ev.end());
  if (!(lo > 1e-13 * hi) || !(lo > 0.0)) throw Error(ErrorCode::SingularInertia, "inertia is not invertible");
  if (dim == 2) return Vec3(0.0, 0.0, L[2] / J(2, 2));
  return J.ldlt().solve(L);
}

std::vector<Vec3> BodyModel::world_points(const RigidPose& pose) const {
  std::vector<Vec3> out(points.size());
  for (std::size_t q = 0; q < points.size(); ++q) out[q] = pose.to_world(points[q]);
  return out;
}

BodyInertia BodyModel::inertia(const RigidPose& pose) const {
  BodyInertia in;
  in.dim = dim();
  in.m = m;
  in.center = pose.h;
  in.J = pose.R * J_body * pose.R.transpose();
  return in;
}

BodyInertia compute_inertia(const std::vector<Vec3>& points, const std::vector<double>& weights, int dim) {
  BodyInertia in;
  in.dim = dim;
  Vec3 first = Vec3::Zero();
  for (std::size_t q = 0; q < points.size(); ++q) {
    in.m += weights[q];
    first += weights[q] * points[q];
  }
  if (!(in.m > 0.0)) throw Error(ErrorCode::NonpositiveDensity, "body mass must be positive");
  in.center = first / in.m;
  for (std::size_t q = 0; q < points.size(); ++q) {
    const Vec3 y = points[q] - in.center;
    in.J += weights[q] * (y.squaredNorm() * Mat3::Identity() - y * y.transpose());
  }
  return in;
}

BodyModel make_body(const BodyShape& shape, const BodyDensity& density, int radial, int angular) {
  BodyModel body;
  body.shape = shape;
  body.shape.center_offset = Vec3::Zero();
  const std::vector<VolumePoint> vq = body_volume_quadrature(shape, radial, angular);
  body.points.reserve(vq.size());
  body.mass.reserve(vq.size());
  for (const VolumePoint& p : vq) {
    const double rho = density(p.x);
    if (!(rho > 0.0) || !std::isfinite(rho))
      throw Error(ErrorCode::NonpositiveDensity, "body density must be positive on the body");
    body.points.push_back(p.x);
    body.mass.push_back(p.weight * rho);
  }
  const BodyInertia in = compute_inertia(body.points, body.mass, shape.dim());
  for (Vec3& y : body.points) y -= in.center;
  body.shape.center_offset = -in.center;
  body.m = in.m;
  body.J_body = in.J;
  return body;
}

RigidMotion project_rigid(const std::vector<Vec3>& points, const std::vector<double>& weights,
                          const std::vector<Vec3>& velocities, const BodyInertia& inertia) {
  RigidMotion mo;
  mo.a = inertia.center;
  Vec3 P = Vec3::Zero(), L = Vec3::Zero();
  for (std::size_t q = 0; q < points.size(); ++q) {
    P += weights[q] * velocities[q];
    L += weights[q] * (points[q] - inertia.center).cross(velocities[q]);
  }
  mo.V = P / inertia.m;
  mo.r = inertia.solve(L);
  if (inertia.dim == 2) {
    mo.V[2] = 0.0;
  }
  return mo;
}

Mat3 reorthonormalize(const Mat3& R, double tol) {
  const double drift = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (drift <= tol) return R;
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 Q = svd.matrixU() * svd.matrixV().transpose();
  if (Q.determinant() < 0.0) {
    Mat3 U = svd.matrixU();
    U.col(2) *= -1.0;
    Q = U * svd.matrixV().transpose();
  }
  return Q;
}

RigidPose advance_pose(const RigidPose& pose, const RigidMotion& motion, double dt) {
  RigidPose out;
  // The motion may be referenced to a point other than the center.
  const Vec3 v_center = motion.at(pose.h);
  out.h = pose.h + dt * v_center;
  const double angle = motion.r.norm() * dt;
  if (angle > 0.0) {
    out.R = Eigen::AngleAxisd(angle, motion.r.normalized()).toRotationMatrix() * pose.R;
  } else {
    out.R = pose.R;
  }
  out.R = reorthonormalize(out.R);
  return out;
}

Vec3 material_map(const RigidPose& pose_t, const RigidPose& pose_0, const Vec3& y) {
  return pose_t.h + pose_t.R * (pose_0.R.transpose() * (y - pose_0.h));
}

Vec3 inverse_material_map(const RigidPose& pose_t, const RigidPose& pose_0, const Vec3& x) {
  return pose_0.h + pose_0.R * (pose_t.R.transpose() * (x - pose_t.h));
}

double transported_indicator(const BodyShape& shape, const RigidPose& pose_t, const RigidPose& pose_0, const Vec3& x,
                             double width) {
  return indicator(shape, pose_0, inverse_material_map(pose_t, pose_0, x), width);
}

CollisionBound collision_time_bound(const CollisionBoundInput& in) {
  if (!(in.lambda0 > 0.0)) throw Error(ErrorCode::DegenerateInertia, "smallest inertia eigenvalue must be positive");
  CollisionBound out;
  out.C0 = std::sqrt(2.0) * std::max(1.0, in.reach) / std::sqrt(std::min(1.0, in.lambda0));
  const double num = in.dist0 - 2.0 * in.sigma;
  if (num <= 0.0) {
    out.T = 0.0;
    out.warning = true;
    return out;
  }
  const double gamma1 = 1.0 - 1.0 / in.gamma;
  const double gpow = in.g_sup > 0.0 ? std::pow(in.g_sup, 2.0 * gamma1) : 0.0;
  if (in.E0 <= 0.0 && gpow == 0.0) {
    out.T = in.t_end;
    return out;
  }
  auto lhs = [&](double T) {
    return T * out.C0 * std::sqrt(in.rho_bar) * std::sqrt(std::exp(T) * in.E0 + in.C * T * gpow);
  };
  if (lhs(in.t_end) < num) {
    out.T = in.t_end;
    return out;
  }
  double lo = 0.0, hi = in.t_end;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (lhs(mid) < num) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.T = lo;
  return out;
}

bool wall_guard_ok(double wall_dist, double sigma) { return wall_dist >= 1.5 * sigma; }

}  // namespace slipfsi
