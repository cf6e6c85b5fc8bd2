#include "slipfsi/limit_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "slipfsi/error.hpp"

namespace slipfsi {

namespace {

constexpr double kPi = 3.14159265358979323846;

double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Polar frame about c: radius, angle and the unit vectors.
struct Polar {
  double r, th;
  Vec3 er, et;
};
Polar polar(const Vec3& c, const Vec3& x) {
  const Vec3 d = x - c;
  Polar p;
  p.r = std::hypot(d[0], d[1]);
  p.th = std::atan2(d[1], d[0]);
  p.er = Vec3(std::cos(p.th), std::sin(p.th), 0.0);
  p.et = Vec3(-p.er[1], p.er[0], 0.0);
  return p;
}

// Lagrange basis on the nodes, evaluated at s.
void lagrange(const std::vector<double>& nodes, double s, std::vector<double>& L) {
  const std::size_t n = nodes.size();
  L.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) L[i] *= (s - nodes[j]) / (nodes[i] - nodes[j]);
}

double t_quantile95(int dof) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086};
  if (dof <= 0) return 0.0;
  if (dof <= 20) return table[dof - 1];
  return 1.96 + 2.5 / dof;
}

}  // namespace

// ---------------------------------------------------------------- test fields

Mat3 fd_jacobian(const VectorField& f, const Vec3& x, int dim, double h) {
  Mat3 J = Mat3::Zero();
  for (int b = 0; b < dim; ++b) {
    Vec3 e = Vec3::Zero();
    e[b] = h;
    const Vec3 d = (8.0 * (f(x + e) - f(x - e)) - (f(x + 2.0 * e) - f(x - 2.0 * e))) / (12.0 * h);
    J.col(b) = d;
  }
  return J;
}

Mat3 TestField::gradient(const Vec3& x) const {
  if (jacobian) return jacobian(x);
  return fd_jacobian(value, x, x[2] == 0.0 ? 2 : 3, 1e-5);
}

TestField TestField::zero() {
  TestField t;
  t.value = [](const Vec3&) { return Vec3::Zero(); };
  t.jacobian = [](const Vec3&) { return Mat3::Zero(); };
  return t;
}

TestField TestField::galerkin(const SlipBasis& basis, const Eigen::VectorXd& c) {
  const SlipBasis* b = &basis;
  TestField t;
  t.value = [b, c](const Vec3& x) { return b->evaluate(c, x); };
  t.jacobian = [b, c](const Vec3& x) { return b->evaluate_gradient(c, x); };
  return t;
}

double truncation_profile(double s) {
  const double a = std::abs(s);
  if (a <= 0.5) return 1.0;
  if (a >= 1.0) return 0.0;
  return 1.0 - smoothstep5(2.0 * a - 1.0);
}

// --------------------------------------------------------- blended function

BlendedTestFunction::BlendedTestFunction(TestField phi_F, RigidMotion phi_S, BodyShape shape, RigidPose pose,
                                         double delta, double vartheta, double indicator_width, int angular)
    : phi_F_(std::move(phi_F)),
      phi_S_(phi_S),
      shape_(shape),
      pose_(pose),
      delta_(delta),
      vartheta_(vartheta),
      width_(indicator_width),
      K_(angular) {
  if (shape_.kind != ShapeKind::Disc)
    throw Error(ErrorCode::UnsupportedShape, "blended test functions are built for discs only");
  if (!(delta_ > 0.0)) throw Error(ErrorCode::InvariantViolation, "delta must be positive");
  if (!(vartheta_ > 1.0 && vartheta_ < 2.0)) throw Error(ErrorCode::InvariantViolation, "vartheta must lie in (1, 2)");
  if (K_ < 8) throw Error(ErrorCode::InvariantViolation, "angular sample count too small");
  if (!phi_F_.value) throw Error(ErrorCode::InvariantViolation, "fluid test field missing");
  R_ = shape_.semi_axes[0];
  ell_ = std::pow(delta_, vartheta_);
  if (ell_ >= R_) throw Error(ErrorCode::InvariantViolation, "layer depth delta^vartheta exceeds the radius");
  check_compatible(phi_F_, phi_S_, shape_, pose_, 1e-10);
  kmax_ = K_ / 2 - 1;

  // radial panels: 8 on each half of the layer
  constexpr int kPanelsHalf = 8, kNodes = 8;
  const GaussRule gr = gauss_legendre(kNodes);
  edges_.clear();
  for (int p = 0; p <= 2 * kPanelsHalf; ++p) edges_.push_back(R_ - ell_ + ell_ * p / (2.0 * kPanelsHalf));
  const int P = 2 * kPanelsHalf;
  nodes_.assign(P, {});
  weights_.assign(P, {});
  const int nk = kmax_ + 1;
  auto zero3 = [&] { return std::vector<std::vector<std::vector<double>>>(P, std::vector<std::vector<double>>(kNodes, std::vector<double>(nk, 0.0))); };
  g1a_ = zero3();
  g1b_ = zero3();
  g2a_ = zero3();
  g2b_ = zero3();
  g0_.assign(P, std::vector<double>(kNodes, 0.0));
  std::vector<double> a, b;
  for (int p = 0; p < P; ++p) {
    const double lo = edges_[p], hi = edges_[p + 1];
    for (int i = 0; i < kNodes; ++i) {
      const double s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gr.nodes[i];
      nodes_[p].push_back(s);
      weights_[p].push_back(0.5 * (hi - lo) * gr.weights[i]);
      source_modes(s, a, b);
      const double rho = s / R_;
      g0_[p][i] = s * a[0];
      for (int k = 1; k <= kmax_; ++k) {
        const double p1 = std::pow(rho, 1.0 - k), p2 = std::pow(rho, 1.0 + k);
        g1a_[p][i][k] = p1 * a[k];
        g1b_[p][i][k] = p1 * b[k];
        g2a_[p][i][k] = p2 * a[k];
        g2b_[p][i][k] = p2 * b[k];
      }
    }
  }
  // cumulative integrals at panel starts
  cum1a_.assign(P + 1, std::vector<double>(nk, 0.0));
  cum1b_ = cum1a_;
  cum2a_ = cum1a_;
  cum2b_ = cum1a_;
  cum0_.assign(P + 1, 0.0);
  for (int p = 0; p < P; ++p) {
    cum0_[p + 1] = cum0_[p];
    for (int k = 0; k < nk; ++k) {
      cum1a_[p + 1][k] = cum1a_[p][k];
      cum1b_[p + 1][k] = cum1b_[p][k];
      cum2a_[p + 1][k] = cum2a_[p][k];
      cum2b_[p + 1][k] = cum2b_[p][k];
    }
    for (int i = 0; i < kNodes; ++i) {
      const double w = weights_[p][i];
      cum0_[p + 1] += w * g0_[p][i];
      for (int k = 1; k < nk; ++k) {
        cum1a_[p + 1][k] += w * g1a_[p][i][k];
        cum1b_[p + 1][k] += w * g1b_[p][i][k];
        cum2a_[p + 1][k] += w * g2a_[p][i][k];
        cum2b_[p + 1][k] += w * g2b_[p][i][k];
      }
    }
  }
  // Neumann constants from the integrals over the whole layer
  Ca_.assign(nk, 0.0);
  Cb_.assign(nk, 0.0);
  for (int k = 1; k < nk; ++k) {
    Ca_[k] = -R_ * (cum1a_[P][k] + cum2a_[P][k]) / (2.0 * k);
    Cb_[k] = -R_ * (cum1b_[P][k] + cum2b_[P][k]) / (2.0 * k);
  }
}

Vec3 BlendedTestFunction::tangential_jump(const Vec3& x) const {
  const Vec3 c = pose_.to_world(shape_.center_offset);
  const Polar p = polar(c, x);
  const Vec3 D = phi_F_.value(x) - phi_S_.at(x);
  if (p.r == 0.0) return Vec3::Zero();
  return D - D.dot(p.er) * p.er;
}

double BlendedTestFunction::source(const Vec3& x) const {
  const Vec3 c = pose_.to_world(shape_.center_offset);
  const Polar p = polar(c, x);
  const double z = R_ - p.r;
  if (z < 0.0) return 0.0;
  const double chi = truncation_profile(z / ell_);
  if (chi == 0.0) return 0.0;
  const Mat3 JF = phi_F_.jacobian ? phi_F_.jacobian(x) : fd_jacobian(phi_F_.value, x, 2, 1e-3 * R_);
  const Vec3 D = phi_F_.value(x) - phi_S_.at(x);
  const double divT = JF(0, 0) + JF(1, 1) - p.er.dot(JF * p.er) - D.dot(p.er) / p.r;
  return -chi * divT;
}

void BlendedTestFunction::source_modes(double s, std::vector<double>& a, std::vector<double>& b) const {
  const Vec3 c = pose_.to_world(shape_.center_offset);
  a.assign(kmax_ + 1, 0.0);
  b.assign(kmax_ + 1, 0.0);
  for (int j = 0; j < K_; ++j) {
    const double th = 2.0 * kPi * j / K_;
    const double f = source(c + s * Vec3(std::cos(th), std::sin(th), 0.0));
    a[0] += f / K_;
    for (int k = 1; k <= kmax_; ++k) {
      a[k] += 2.0 * f * std::cos(k * th) / K_;
      b[k] += 2.0 * f * std::sin(k * th) / K_;
    }
  }
}

void BlendedTestFunction::radial_integrals(double r, std::vector<double>& J1a, std::vector<double>& J1b,
                                           std::vector<double>& J2a, std::vector<double>& J2b, double& K0) const {
  const int nk = kmax_ + 1;
  const int P = static_cast<int>(edges_.size()) - 1;
  J1a.assign(nk, 0.0);
  J1b.assign(nk, 0.0);
  J2a.assign(nk, 0.0);
  J2b.assign(nk, 0.0);
  K0 = 0.0;
  if (r <= edges_.front()) return;
  if (r >= edges_.back()) {
    J1a = cum1a_[P];
    J1b = cum1b_[P];
    J2a = cum2a_[P];
    J2b = cum2b_[P];
    K0 = cum0_[P];
    return;
  }
  int p = static_cast<int>(std::upper_bound(edges_.begin(), edges_.end(), r) - edges_.begin()) - 1;
  p = std::clamp(p, 0, P - 1);
  J1a = cum1a_[p];
  J1b = cum1b_[p];
  J2a = cum2a_[p];
  J2b = cum2b_[p];
  K0 = cum0_[p];
  // integrate the panel interpolant from the panel start to r
  const double lo = edges_[p];
  if (r <= lo) return;
  const auto& nodes = nodes_[p];
  const int n = static_cast<int>(nodes.size());
  static const GaussRule gr = gauss_legendre(8);
  std::vector<double> Lint(n, 0.0), L;
  for (std::size_t q = 0; q < gr.nodes.size(); ++q) {
    const double s = 0.5 * (lo + r) + 0.5 * (r - lo) * gr.nodes[q];
    const double w = 0.5 * (r - lo) * gr.weights[q];
    lagrange(nodes, s, L);
    for (int i = 0; i < n; ++i) Lint[i] += w * L[i];
  }
  for (int i = 0; i < n; ++i) {
    K0 += Lint[i] * g0_[p][i];
    for (int k = 1; k < nk; ++k) {
      J1a[k] += Lint[i] * g1a_[p][i][k];
      J1b[k] += Lint[i] * g1b_[p][i][k];
      J2a[k] += Lint[i] * g2a_[p][i][k];
      J2b[k] += Lint[i] * g2b_[p][i][k];
    }
  }
}

Vec3 BlendedTestFunction::correction(const Vec3& x) const {
  const Vec3 c = pose_.to_world(shape_.center_offset);
  const Polar p = polar(c, x);
  const double r = std::max(p.r, 1e-12 * R_);
  const double rho = r / R_;
  std::vector<double> J1a, J1b, J2a, J2b;
  double K0 = 0.0;
  radial_integrals(r, J1a, J1b, J2a, J2b, K0);
  double psi_r = K0 / r, psi_t = 0.0;
  for (int k = 1; k <= kmax_; ++k) {
    const double up = std::pow(rho, k - 1), dn = std::pow(rho, -k - 1);
    const double dA = 0.5 * up * J1a[k] + 0.5 * dn * J2a[k] + Ca_[k] * k / R_ * up;
    const double dB = 0.5 * up * J1b[k] + 0.5 * dn * J2b[k] + Cb_[k] * k / R_ * up;
    // psi_k / r, using rho^k / r = rho^{k-1} / R
    const double Ar = (0.5 / k) * (up * J1a[k] - dn * J2a[k]) + Ca_[k] * up / R_;
    const double Br = (0.5 / k) * (up * J1b[k] - dn * J2b[k]) + Cb_[k] * up / R_;
    const double ck = std::cos(k * p.th), sk = std::sin(k * p.th);
    psi_r += dA * ck + dB * sk;
    psi_t += k * (-Ar * sk + Br * ck);
  }
  return psi_r * p.er + psi_t * p.et;
}

Vec3 BlendedTestFunction::solid_part(const Vec3& x) const {
  const Vec3 c = pose_.to_world(shape_.center_offset);
  const double r = (x - c).head<2>().norm();
  Vec3 v = phi_S_.at(x);
  const double z = R_ - r;
  if (z >= 0.0) {
    const double chi = truncation_profile(z / ell_);
    if (chi > 0.0) v += chi * tangential_jump(x);
  }
  return v + correction(x);
}

Vec3 BlendedTestFunction::operator()(const Vec3& x) const {
  const double chi = indicator(shape_, pose_, x, width_);
  if (chi == 0.0) return phi_F_.value(x);
  if (chi == 1.0) return solid_part(x);
  return (1.0 - chi) * phi_F_.value(x) + chi * solid_part(x);
}

TestField BlendedTestFunction::field() const {
  auto self = std::make_shared<BlendedTestFunction>(*this);
  TestField t;
  t.value = [self](const Vec3& x) { return (*self)(x); };
  return t;
}

double BlendedTestFunction::solid_deviation_norm(double pexp, int radial_panels, int angular) const {
  const Vec3 c = pose_.to_world(shape_.center_offset);
  const GaussRule gr = gauss_legendre(8);
  // interior [0, R - ell] plus a graded layer grid
  std::vector<double> edges;
  const int inner = 8;
  for (int i = 0; i <= inner; ++i) edges.push_back((R_ - ell_) * i / inner);
  for (int i = 1; i <= radial_panels; ++i) edges.push_back(R_ - ell_ + ell_ * i / radial_panels);
  double sum = 0.0;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double lo = edges[e], hi = edges[e + 1];
    for (std::size_t q = 0; q < gr.nodes.size(); ++q) {
      const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gr.nodes[q];
      const double wr = 0.5 * (hi - lo) * gr.weights[q] * r * 2.0 * kPi / angular;
      for (int j = 0; j < angular; ++j) {
        const double th = 2.0 * kPi * (j + 0.5) / angular;
        const Vec3 x = c + r * Vec3(std::cos(th), std::sin(th), 0.0);
        const double dev = (solid_part(x) - phi_S_.at(x)).norm();
        sum += wr * std::pow(dev, pexp);
      }
    }
  }
  return std::pow(sum, 1.0 / pexp);
}

double BlendedTestFunction::max_solid_divergence(int radial, int angular) const {
  // Polar form div v = (1/r) d_r (r v_r) + (1/r) d_th v_th, so the steep
  // radial profile is only ever differentiated through smooth components.
  const Vec3 c = pose_.to_world(shape_.center_offset);
  auto comp = [&](double r, double th, bool rad) {
    const Vec3 er(std::cos(th), std::sin(th), 0.0), et(-std::sin(th), std::cos(th), 0.0);
    const Vec3 v = solid_part(c + r * er);
    return rad ? r * v.dot(er) : v.dot(et);
  };
  auto d5 = [](const std::function<double(double)>& f, double x, double h) {
    return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h);
  };
  const double hr = std::min(1e-4 * R_, ell_ / 200.0), ht = 1e-3;
  std::vector<double> radii;
  for (int i = 0; i < radial; ++i) radii.push_back(R_ * (i + 0.5) / radial);
  for (int i = 0; i < 16; ++i) radii.push_back(R_ - ell_ * (i + 0.5) / 16.0);
  double m = 0.0;
  for (double r : radii) {
    if (r + 2.0 * hr >= R_ || r - 2.0 * hr <= 0.0) continue;
    for (int j = 0; j < angular; ++j) {
      const double th = 2.0 * kPi * (j + 0.25) / angular;
      const double dr = d5([&](double s) { return comp(s, th, true); }, r, hr);
      const double dt = d5([&](double s) { return comp(r, s, false); }, th, ht);
      m = std::max(m, std::abs((dr + dt) / r));
    }
  }
  return m;
}

void check_compatible(const TestField& phi_F, const RigidMotion& phi_S, const BodyShape& shape, const RigidPose& pose,
                      double tol) {
  const auto pts = body_surface_quadrature(shape, pose, 4, 64);
  for (const auto& s : pts) {
    const Vec3 F = phi_F.value(s.x);
    const double jump = (F - phi_S.at(s.x)).dot(s.normal);
    if (std::abs(jump) > tol * std::max(1.0, F.norm())) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "normal traces differ by %.3e at (%.4f, %.4f)", jump, s.x[0], s.x[1]);
      throw Error(ErrorCode::IncompatiblePair, buf);
    }
  }
}

BlendedTestFunction reference_test_function(const Simulation& sim, const RigidPose& pose, double delta,
                                            double vartheta) {
  const BodyShape shape = sim.body().shape;
  if (shape.kind != ShapeKind::Disc) throw Error(ErrorCode::UnsupportedShape, "reference pair needs a disc");
  const double R = shape.semi_axes[0];
  const double dist = sim.wall_distance_of(pose);
  const Vec3 c = pose.to_world(shape.center_offset);
  RigidMotion phi_S;
  phi_S.V = Vec3(0.3, -0.2, 0.0);
  phi_S.r = Vec3(0.0, 0.0, 0.5);
  phi_S.a = c;
  const double r1 = R + 0.25 * dist, r2 = R + 0.75 * dist;
  // swirl decaying away from the center plus an angular mode that needs the
  // divergence correction
  const double swirl = 0.5, amp = 0.1, core = 0.0625 * R * R;
  TestField F;
  F.value = [=](const Vec3& x) {
    const Vec3 y = x - c;
    const double r = y.head<2>().norm();
    const double beta = 1.0 - smoothstep5((r - r1) / (r2 - r1));
    if (beta == 0.0) return Vec3(Vec3::Zero());
    const Vec3 rot(-y[1], y[0], 0.0);
    const double q = swirl * R * R / (r * r + core) + amp * (y[0] * y[0] - y[1] * y[1]) / (R * R);
    return Vec3(beta * (phi_S.at(x) + q * rot));
  };
  return BlendedTestFunction(F, phi_S, shape, pose, delta, vartheta, sim.config().chi_width());
}

// ------------------------------------------------------------ weak residual

WeakResidual weak_residual(const Simulation& sim, const CoupledState& before, const CoupledState& after,
                           const TestField& phi) {
  const SimulationConfig& c = sim.config();
  const SlipBasis& basis = sim.basis();
  const int d = basis.dim();
  const TensorQuadrature& q = basis.quadrature();
  const int ppc = q.axes[0].points_per_cell;
  const double dt = after.t - before.t;
  if (!(dt > 0.0)) throw Error(ErrorCode::InvariantViolation, "weak residual needs two consecutive states");
  const double del = c.delta, eps = c.epsilon;
  const double d2 = del * del;

  const IndicatorField chi = body_indicator(basis, sim.body().shape, after.pose, c.chi_width());
  const auto grad_rho = density_gradient(after.rho);
  std::array<Tensor3, 3> u1, u0;
  std::array<std::array<Tensor3, 3>, 3> du1;
  for (int a = 0; a < d; ++a) {
    u1[a] = basis.field_on_quadrature(after.g, a);
    u0[a] = basis.field_on_quadrature(before.g, a);
    for (int b = 0; b < d; ++b) du1[a][b] = basis.field_on_quadrature(after.g, a, b);
  }
  const VectorField gF = sim.forcing_fluid(), gS = sim.forcing_body();

  // rigid parts from the mass points at the new pose
  const auto mpts = sim.body().world_points(after.pose);
  const BodyInertia inert = sim.body().inertia(after.pose);
  std::vector<Vec3> phi_m(mpts.size());
  for (std::size_t k = 0; k < mpts.size(); ++k) phi_m[k] = phi.value(mpts[k]);
  const RigidMotion Pphi = project_rigid(mpts, sim.body().mass, phi_m, inert);
  const RigidMotion Pu = sim.rigid_part(after.g, after.pose);

  double t_time = 0.0, t_conv = 0.0, t_visc = 0.0, t_pen = 0.0, t_force = 0.0;
  const auto ext = q.extents();
  for (std::size_t i = 0; i < ext[0]; ++i)
    for (std::size_t j = 0; j < ext[1]; ++j)
      for (std::size_t k = 0; k < ext[2]; ++k) {
        Vec3 x = Vec3::Zero();
        double w = q.axes[0].w[i];
        x[0] = q.axes[0].x[i];
        if (d > 1) {
          x[1] = q.axes[1].x[j];
          w *= q.axes[1].w[j];
        }
        if (d > 2) {
          x[2] = q.axes[2].x[k];
          w *= q.axes[2].w[k];
        }
        const int ii = static_cast<int>(i), jj = static_cast<int>(j), kk = static_cast<int>(k);
        const int ci = ii / ppc, cj = d > 1 ? jj / ppc : 0, ck = d > 2 ? kk / ppc : 0;
        const double r0 = before.rho.rho(ci, cj, ck), r1 = after.rho.rho(ci, cj, ck);
        Vec3 v1 = Vec3::Zero(), v0 = Vec3::Zero(), W = Vec3::Zero();
        Mat3 G = Mat3::Zero();
        for (int a = 0; a < d; ++a) {
          v1[a] = u1[a](ii, jj, kk);
          v0[a] = u0[a](ii, jj, kk);
          for (int b = 0; b < d; ++b) G(a, b) = du1[a][b](ii, jj, kk);
        }
        for (int b = 0; b < d; ++b) W[b] = r1 * v1[b] + eps * grad_rho[b](ci, cj, ck);
        const Vec3 P = phi.value(x);
        const Mat3 GP = phi.gradient(x);
        const double ch = chi.quad(ii, jj, kk);

        t_time += w * (r0 * (v1 - v0) + 0.5 * (r1 - r0) * v1).dot(P) / dt;
        t_conv += w * 0.5 * ((G * W).dot(P) - (GP * W).dot(v1));
        const double mu = c.mu_F * (1.0 - ch) + d2 * ch;
        const double lam = c.lambda_F * (1.0 - ch) + d2 * ch;
        const Mat3 Du = 0.5 * (G + G.transpose()), DP = 0.5 * (GP + GP.transpose());
        t_visc += w * (2.0 * mu * (Du.cwiseProduct(DP)).sum() + lam * G.trace() * GP.trace());
        if (ch != 0.0) t_pen += w * ch * (v1 - Pu.at(x)).dot(P - Pphi.at(x)) / del;
        const Vec3 g = (1.0 - ch) * gF(x) + ch * gS(x);
        t_force -= w * r1 * g.dot(P);
      }

  // friction
  auto tang = [d](const Vec3& a, const Vec3& b, const Vec3& n) {
    (void)d;
    return a.dot(b) - a.dot(n) * b.dot(n);
  };
  double t_wall = 0.0, t_iface = 0.0;
  for (const auto& s : basis.domain().wall)
    t_wall += c.alpha * s.weight * tang(basis.evaluate(after.g, s.x), phi.value(s.x), s.normal);
  const BodySnapshot bs = sim.body_snapshot(after.pose);
  for (const auto& s : body_surface_quadrature(sim.body().shape, after.pose, bs.surface_order, bs.surface_panels)) {
    const Vec3 du = basis.evaluate(after.g, s.x) - Pu.at(s.x);
    const Vec3 dp = phi.value(s.x) - Pphi.at(s.x);
    t_iface += c.alpha * s.weight * tang(du, dp, s.normal);
  }

  // pressure: -sum over interior faces (p_L - p_R) int_sigma Phi . n_+
  const Tensor3 p = sim.assembler().cell_pressure(after.rho, chi.cells);
  const Grid grid = c.grid_spec();
  const GaussRule gr = gauss_legendre(8);
  double t_press = 0.0;
  for (int a = 0; a < d; ++a) {
    const int b1 = (a + 1) % d, b2 = d > 2 ? (a + 2) % 3 : -1;
    std::array<int, 3> lo{0, 0, 0}, n = grid.n;
    lo[a] = 1;
    for (int i = lo[0]; i < n[0]; ++i)
      for (int j = lo[1]; j < (d > 1 ? n[1] : 1); ++j)
        for (int k = lo[2]; k < (d > 2 ? n[2] : 1); ++k) {
          std::array<int, 3> R{i, j, k}, L{i, j, k};
          L[a] -= 1;
          const double jump = p(L[0], L[1], L[2]) - p(R[0], R[1], R[2]);
          if (jump == 0.0) continue;
          double flux = 0.0;
          const double h1 = grid.h(b1);
          for (std::size_t u = 0; u < gr.nodes.size(); ++u) {
            const double s1 = (R[b1] + 0.5 + 0.5 * gr.nodes[u]) * h1;
            const double w1 = 0.5 * h1 * gr.weights[u];
            if (b2 < 0) {
              Vec3 x = Vec3::Zero();
              x[a] = R[a] * grid.h(a);
              x[b1] = s1;
              flux += w1 * phi.value(x)[a];
            } else {
              const double h2 = grid.h(b2);
              for (std::size_t v = 0; v < gr.nodes.size(); ++v) {
                Vec3 x = Vec3::Zero();
                x[a] = R[a] * grid.h(a);
                x[b1] = s1;
                x[b2] = (R[b2] + 0.5 + 0.5 * gr.nodes[v]) * h2;
                flux += w1 * 0.5 * h2 * gr.weights[v] * phi.value(x)[a];
              }
            }
          }
          t_press -= jump * flux;
        }
  }

  WeakResidual out;
  out.terms = {{"time", t_time},   {"convection", t_conv},   {"viscous", t_visc},
               {"wall", t_wall},   {"interface", t_iface},   {"penalization", t_pen},
               {"forcing", t_force}, {"pressure", t_press}};
  for (const auto& [name, v] : out.terms) {
    out.value += v;
    out.scale += std::abs(v);
  }
  return out;
}

PenalizationMetrics penalization_metrics(const RunSummary& run) {
  PenalizationMetrics m;
  m.r_delta = std::sqrt(std::max(0.0, run.penal_integral));
  m.slip_jump = run.slip_jump_mean;
  return m;
}

// ------------------------------------------------------------------ fitting

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      X.push_back(std::log(x[i]));
      Y.push_back(std::log(y[i]));
    }
  SlopeFit f;
  f.count = static_cast<int>(X.size());
  if (f.count < 2) return f;
  const double n = f.count;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < f.count; ++i) {
    mx += X[i] / n;
    my += Y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < f.count; ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
    syy += (Y[i] - my) * (Y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (int i = 0; i < f.count; ++i) {
    const double e = Y[i] - f.intercept - f.slope * X[i];
    ssr += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  if (f.count > 2) {
    f.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
    const double t = t_quantile95(f.count - 2);
    f.ci_low = f.slope - t * f.stderr_slope;
    f.ci_high = f.slope + t * f.stderr_slope;
  } else {
    f.ci_low = f.ci_high = f.slope;
  }
  return f;
}

SlopeFit fit_tail(const std::vector<double>& x, const std::vector<double>& y, int min_points, double spread) {
  const int n = static_cast<int>(std::min(x.size(), y.size()));
  if (n <= min_points) {
    SlopeFit f = fit_loglog(x, y);
    f.first = 0;
    return f;
  }
  auto sub = [&](int first) {
    SlopeFit f = fit_loglog(std::vector<double>(x.begin() + first, x.begin() + n),
                            std::vector<double>(y.begin() + first, y.begin() + n));
    f.first = first;
    return f;
  };
  auto consistent = [&](int first, const SlopeFit& f) {
    for (int i = first; i + 1 < n; ++i) {
      if (!(x[i] > 0 && x[i + 1] > 0 && y[i] > 0 && y[i + 1] > 0)) return false;
      const double local = std::log(y[i + 1] / y[i]) / std::log(x[i + 1] / x[i]);
      if (std::abs(local - f.slope) > spread * std::abs(f.slope) + 0.05) return false;
    }
    return true;
  };
  SlopeFit best = sub(n - min_points);
  for (int first = n - min_points - 1; first >= 0; --first) {
    const SlopeFit f = sub(first);
    if (!consistent(first, f)) break;
    best = f;
  }
  return best;
}

Extrapolation richardson(const std::vector<double>& x, const std::vector<double>& y) {
  Extrapolation e;
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 3) return e;
  const double x1 = x[n - 3], x2 = x[n - 2], x3 = x[n - 1];
  const double y1 = y[n - 3], y2 = y[n - 2], y3 = y[n - 1];
  const double d1 = y1 - y2, d2 = y2 - y3;
  e.limit = y3;
  e.error = std::max(std::abs(d1), std::abs(d2));
  if (!(x1 > x2 && x2 > x3 && x3 > 0.0) || d1 * d2 <= 0.0) return e;
  const double target = d1 / d2;
  auto ratio = [&](double s) {
    return (std::pow(x1, s) - std::pow(x2, s)) / (std::pow(x2, s) - std::pow(x3, s));
  };
  double lo = 1e-3, hi = 10.0;
  if ((ratio(lo) - target) * (ratio(hi) - target) > 0.0) return e;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((ratio(lo) - target) * (ratio(mid) - target) <= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  const double s = 0.5 * (lo + hi);
  const double C = d2 / (std::pow(x2, s) - std::pow(x3, s));
  e.order = s;
  e.limit = y3 - C * std::pow(x3, s);
  e.error = std::abs(y3 - e.limit);
  e.ok = true;
  return e;
}

// ------------------------------------------------------------------- sweeps

double density_l1(const DensityField& a, const DensityField& b) {
  if (a.rho.n != b.rho.n) throw Error(ErrorCode::InvariantViolation, "density grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rho.v.size(); ++i) s += std::abs(a.rho.v[i] - b.rho.v[i]);
  return s * a.grid.cell_volume();
}

SweepReport run_sweep(const SimulationConfig& base, const std::string& parameter, const std::vector<double>& values,
                      int threads, const std::string& out_dir) {
  if (parameter != "delta" && parameter != "epsilon" && parameter != "N")
    throw Error(ErrorCode::InvariantViolation, "sweep parameter must be delta, epsilon or N");
  if (!(base.vartheta > 1.0 && base.vartheta < 2.0))
    throw Error(ErrorCode::InvariantViolation, "vartheta must lie in (1, 2)");
  if (values.empty()) throw Error(ErrorCode::InvariantViolation, "sweep needs at least one value");
  SweepReport rep;
  rep.parameter = parameter;
  rep.entries.resize(values.size());
  std::vector<SimulationConfig> cfgs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const std::string text = parameter == "N" ? std::to_string(static_cast<int>(std::lround(v))) : fmt(v);
    cfgs.push_back(with_override(base, parameter, text));
    rep.entries[i].value = v;
    rep.entries[i].config_text = serialize_config(cfgs.back());
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      SweepEntry& e = rep.entries[i];
      try {
        RunOptions o;
        o.write_fields = false;
        if (!out_dir.empty()) o.out_dir = out_dir + "/run_" + std::to_string(i);
        const RunSummary r = run(cfgs[i], o);
        const PenalizationMetrics m = penalization_metrics(r);
        e.r_delta = m.r_delta;
        e.slip_jump = m.slip_jump;
        e.energy_slack_max = r.max_slack_violation;
        e.E0 = r.E0;
        e.steps = r.steps;
        e.rho_end = r.final_state.rho;
        for (const auto& L : r.ledger) e.forcing_work += std::abs(L.P_force) * cfgs[i].dt;
        const double budget = r.E0 + std::max(0.0, r.forcing_work);
        e.penal_bound_ratio = budget > 0.0 ? (r.penal_integral / cfgs[i].delta) / budget : 0.0;
        e.kinetic_end = r.ledger.empty() ? 0.0 : r.ledger.back().E_kin;
        if (r.steps >= 1) {
          const Simulation sim(cfgs[i]);
          const BlendedTestFunction phi =
              reference_test_function(sim, r.final_state.pose, cfgs[i].delta, cfgs[i].vartheta);
          e.weak_residual = weak_residual(sim, r.prev_state, r.final_state, phi.field()).relative();
        }
        if (r.halt.halted) {
          e.ok = false;
          e.error = "halted: " + r.halt.reason;
        } else {
          e.ok = true;
        }
      } catch (const std::exception& ex) {
        e.ok = false;
        e.error = ex.what();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // rates toward the limit, in the order given
  std::vector<double> xs, rd, sj, cauchy_x, cauchy_y;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const SweepEntry& e = rep.entries[i];
    if (!e.ok) continue;
    xs.push_back(e.value);
    rd.push_back(e.r_delta);
    sj.push_back(e.slip_jump);
  }
  if (parameter == "delta") {
    rep.slopes.push_back({"r_delta", fit_tail(xs, rd)});
    rep.slip_limit = richardson(xs, sj);
    rep.has_slip_limit = xs.size() >= 3;
  } else {
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const SweepEntry &a = rep.entries[i], &b = rep.entries[i + 1];
      if (!a.ok || !b.ok) continue;
      const double diff =
          parameter == "epsilon" ? density_l1(a.rho_end, b.rho_end) : std::abs(a.kinetic_end - b.kinetic_end);
      cauchy_x.push_back(a.value);
      cauchy_y.push_back(diff);
    }
    rep.slopes.push_back({parameter == "epsilon" ? "rho_l1_cauchy" : "kinetic_cauchy", fit_tail(cauchy_x, cauchy_y, 2)});
  }
  return rep;
}

void write_rates_csv(const SweepReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  f << "parameter,value,r_delta,slip_jump,energy_slack_max,weak_residual\n";
  for (const auto& e : report.entries) {
    f << report.parameter << ',' << fmt(e.value);
    if (e.ok)
      f << ',' << fmt(e.r_delta) << ',' << fmt(e.slip_jump) << ',' << fmt(e.energy_slack_max) << ','
        << fmt(e.weak_residual) << '\n';
    else
      f << ",nan,nan,nan,nan\n";
  }
  for (const auto& [name, s] : report.slopes)
    f << "#slope," << name << ',' << fmt(s.slope) << ',' << fmt(s.r2) << ',' << fmt(s.ci_low) << ','
      << fmt(s.ci_high) << ',' << s.first << ',' << s.count << '\n';
  if (report.has_slip_limit) {
    const Extrapolation& x = report.slip_limit;
    f << "#limit,slip_jump," << fmt(x.limit) << ',' << fmt(x.error) << ',' << fmt(x.order) << ','
      << (x.ok ? 1 : 0) << '\n';
  }
  if (!f) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

void write_sweep_json(const SweepReport& report, const std::string& path) {
  using nlohmann::json;
  json j;
  j["parameter"] = report.parameter;
  j["entries"] = json::array();
  for (const auto& e : report.entries) {
    json r;
    r["value"] = e.value;
    r["ok"] = e.ok;
    r["error"] = e.error;
    r["r_delta"] = e.r_delta;
    r["slip_jump"] = e.slip_jump;
    r["energy_slack_max"] = e.energy_slack_max;
    r["weak_residual"] = e.weak_residual;
    r["E0"] = e.E0;
    r["forcing_work"] = e.forcing_work;
    r["penal_bound_ratio"] = e.penal_bound_ratio;
    r["kinetic_end"] = e.kinetic_end;
    r["steps"] = e.steps;
    r["config"] = e.config_text;
    j["entries"].push_back(r);
  }
  j["slopes"] = json::array();
  for (const auto& [name, s] : report.slopes)
    j["slopes"].push_back({{"metric", name},
                           {"slope", s.slope},
                           {"r2", s.r2},
                           {"ci_low", s.ci_low},
                           {"ci_high", s.ci_high},
                           {"first", s.first},
                           {"count", s.count},
                           {"confirmed", s.confirmed()}});
  if (report.has_slip_limit)
    j["slip_limit"] = {{"limit", report.slip_limit.limit},
                       {"error", report.slip_limit.error},
                       {"order", report.slip_limit.order},
                       {"ok", report.slip_limit.ok}};
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  f << j.dump(2) << '\n';
}

}  // namespace slipfsi
