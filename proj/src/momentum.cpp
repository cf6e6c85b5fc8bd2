#include "slipfsi/momentum.hpp"

#include <Eigen/LU>
#include <cmath>

#include "slipfsi/error.hpp"

namespace slipfsi {

namespace {

// Orthonormal tangents to a unit normal (one in 2D, two in 3D).
std::vector<Vec3> tangents(int dim, const Vec3& n) {
  if (dim == 2) return {Vec3(-n[1], n[0], 0.0)};
  const Vec3 a = std::abs(n[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = n.cross(a).normalized();
  return {t1, n.cross(t1)};
}

// Raw vector int W raw_i from a single tensor, mapped to the orthonormal
// basis. Only modes of component `comp` contribute (comp < 0: all).
Eigen::VectorXd project_single(const SlipBasis& basis, const SingleTensor& S, int comp) {
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(basis.size());
  for (int i = 0; i < basis.size(); ++i)
    if (comp < 0 || basis.component(i) == comp) raw[i] = S(basis.raw_modes()[i].value);
  return basis.transform().transpose() * raw;
}

Vec3 quad_point(const TensorQuadrature& q, int dim, int i, int j, int k, double& w) {
  Vec3 x = Vec3::Zero();
  w = q.axes[0].w[i];
  x[0] = q.axes[0].x[i];
  if (dim > 1) {
    x[1] = q.axes[1].x[j];
    w *= q.axes[1].w[j];
  }
  if (dim > 2) {
    x[2] = q.axes[2].x[k];
    w *= q.axes[2].w[k];
  }
  return x;
}

}  // namespace

Eigen::VectorXd load_vector(const SlipBasis& basis, const std::array<Tensor3, 3>& weighted_components) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.size());
  for (int a = 0; a < basis.dim(); ++a)
    v += project_single(basis, basis.single_tensor(weighted_components[a]), a);
  return v;
}

double PressureLaw::pressure(double rho, double a) const {
  if (rho <= 0.0) return 0.0;
  return a * std::pow(rho, gamma) + delta * std::pow(rho, beta);
}

double PressureLaw::energy(double rho, double a) const {
  if (rho <= 0.0) return 0.0;
  return a * std::pow(rho, gamma) / (gamma - 1.0) + delta * std::pow(rho, beta) / (beta - 1.0);
}

double PressureLaw::energy_prime(double rho, double a) const {
  if (rho <= 0.0) return 0.0;
  return a * gamma * std::pow(rho, gamma - 1.0) / (gamma - 1.0) + delta * beta * std::pow(rho, beta - 1.0) / (beta - 1.0);
}

double evaluate_pressure(const PressureLaw& law, double rho, double chi) {
  return law.pressure(rho, law.coefficient(chi));
}

IndicatorField body_indicator(const SlipBasis& basis, const BodyShape& shape, const RigidPose& pose, double width) {
  const TensorQuadrature& q = basis.quadrature();
  const int d = basis.dim();
  const auto ext = q.extents();
  IndicatorField out;
  out.quad = Tensor3(static_cast<int>(ext[0]), static_cast<int>(ext[1]), static_cast<int>(ext[2]));
  const auto& cells = basis.domain().cells;
  out.cells = Tensor3(cells[0], d > 1 ? cells[1] : 1, d > 2 ? cells[2] : 1);
  Tensor3 wsum(out.cells.n, 0.0);
  const int ppc = q.axes[0].points_per_cell;
  const double reach = shape.circumradius() + shape.center_offset.norm() + 2.0 * width;
  const Vec3 center = pose.to_world(shape.center_offset);
  for (int i = 0; i < out.quad.n[0]; ++i)
    for (int j = 0; j < out.quad.n[1]; ++j)
      for (int k = 0; k < out.quad.n[2]; ++k) {
        double w = 0.0;
        const Vec3 x = quad_point(q, d, i, j, k, w);
        const double chi = (x - center).norm() > reach ? 0.0 : indicator(shape, pose, x, width);
        out.quad(i, j, k) = chi;
        const int ci = i / ppc, cj = d > 1 ? j / ppc : 0, ck = d > 2 ? k / ppc : 0;
        out.cells(ci, cj, ck) += w * chi;
        wsum(ci, cj, ck) += w;
      }
  for (std::size_t c = 0; c < out.cells.v.size(); ++c) out.cells.v[c] /= wsum.v[c];
  return out;
}

int rigid_dofs(int dim) { return dim == 2 ? 3 : 6; }

Vec3 rigid_field(int dim, int k, const Vec3& x, const Vec3& h) {
  if (k < dim) return Vec3::Unit(k);
  const int m = dim == 2 ? 2 : k - 3;
  return Vec3::Unit(m).cross(x - h);
}

Eigen::MatrixXd rigid_projection_map(const SlipBasis& basis, const BodyModel& body, const RigidPose& pose) {
  const int d = basis.dim();
  const auto pts = body.world_points(pose);
  const BodyInertia in = body.inertia(pose);
  const Eigen::MatrixXd V = basis.values(pts);
  const int np = static_cast<int>(pts.size());
  Eigen::VectorXd w(np);
  Eigen::MatrixXd wy(np, 3);
  for (int q = 0; q < np; ++q) {
    w[q] = body.mass[q];
    wy.row(q) = (body.mass[q] * (pts[q] - in.center)).transpose();
  }
  const Eigen::VectorXd P = V.transpose() * w;       // sum w e_j (its component)
  const Eigen::MatrixXd My = V.transpose() * wy;     // sum w e_j y
  Eigen::MatrixXd R(basis.size(), rigid_dofs(d));
  for (int j = 0; j < basis.size(); ++j) {
    const int c = basis.component(j);
    const Vec3 L = Vec3(My(j, 0), My(j, 1), My(j, 2)).cross(Vec3::Unit(c));
    const Vec3 r = in.solve(L);
    R.row(j).setZero();
    R(j, c) = P[j] / in.m;
    if (d == 2) {
      R(j, 2) = r[2];
    } else {
      for (int a = 0; a < 3; ++a) R(j, 3 + a) = r[a];
    }
  }
  return R;
}

Eigen::MatrixXd tangential_block(const SlipBasis& basis, const std::vector<SurfacePoint>& pts, double alpha,
                                 const Eigen::MatrixXd* rigid_map, const Vec3& center) {
  const int d = basis.dim();
  const int n = basis.size();
  if (alpha == 0.0 || pts.empty()) return Eigen::MatrixXd::Zero(n, n);
  std::vector<Vec3> x;
  for (const auto& p : pts) x.push_back(p.x);
  const Eigen::MatrixXd V = basis.values(x);
  const int nt = d - 1;
  Eigen::MatrixXd T(static_cast<int>(pts.size()) * nt, n);
  const int K = rigid_dofs(d);
  for (std::size_t s = 0; s < pts.size(); ++s) {
    const double sw = std::sqrt(alpha * pts[s].weight);
    const auto ts = tangents(d, pts[s].normal);
    for (int a = 0; a < nt; ++a) {
      const int row = static_cast<int>(s) * nt + a;
      for (int j = 0; j < n; ++j) T(row, j) = sw * ts[a][basis.component(j)] * V(s, j);
      if (rigid_map) {
        Eigen::RowVectorXd psi(K);
        for (int k = 0; k < K; ++k) psi[k] = sw * ts[a].dot(rigid_field(d, k, pts[s].x, center));
        T.row(row) -= psi * rigid_map->transpose();
      }
    }
  }
  return T.transpose() * T;
}

double tangential_dissipation(const std::vector<SurfacePoint>& pts, const VectorField& u, double alpha) {
  double s = 0.0;
  for (const auto& p : pts) {
    const Vec3 v = u(p.x);
    const double un = v.dot(p.normal);
    s += p.weight * (v.squaredNorm() - un * un);
  }
  return alpha * s;
}

MomentumAssembler::MomentumAssembler(const SlipBasis& basis, const MomentumParams& params)
    : basis_(basis), params_(params) {
  basis_.raw_viscous(basis_.pair_tensor(basis_.quadrature_weights()), vmu1_, vlam1_);
  wall_ = tangential_block(basis_, basis_.domain().wall, params_.alpha, nullptr, Vec3::Zero());
}

Eigen::MatrixXd MomentumAssembler::mass(const DensityField& rho) const { return weighted_mass_matrix(basis_, rho.rho); }

Tensor3 MomentumAssembler::cell_pressure(const DensityField& rho, const Tensor3& chi_cells) const {
  Tensor3 p(rho.rho.n, 0.0);
  const PressureLaw& law = params_.law;
  for (std::size_t c = 0; c < p.v.size(); ++c) p.v[c] = law.pressure(rho.rho.v[c], law.coefficient(chi_cells.v[c]));
  return p;
}

Eigen::VectorXd MomentumAssembler::pressure_force(const Tensor3& p) const {
  const int d = basis_.dim();
  const auto& cells = basis_.domain().cells;
  FaceField jump;
  for (int a = 0; a < d; ++a) {
    std::array<int, 3> ext{cells[0], d > 1 ? cells[1] : 1, d > 2 ? cells[2] : 1};
    ext[a] += 1;
    Tensor3 f(ext, 0.0);
    for (int i = 0; i < ext[0]; ++i)
      for (int j = 0; j < ext[1]; ++j)
        for (int k = 0; k < ext[2]; ++k) {
          std::array<int, 3> c{i, j, k};
          if (c[a] == 0 || c[a] == cells[a]) continue;
          std::array<int, 3> l = c;
          l[a] -= 1;
          f(i, j, k) = p(l[0], l[1], l[2]) - p(i, j, k);
        }
    jump.f[a] = std::move(f);
  }
  return basis_.face_adjoint(jump);
}

Eigen::MatrixXd MomentumAssembler::interface_block(const BodySnapshot& body, const Eigen::MatrixXd& R) const {
  if (params_.alpha == 0.0) return Eigen::MatrixXd::Zero(basis_.size(), basis_.size());
  const auto pts = body_surface_quadrature(body.model->shape, body.pose, body.surface_order, body.surface_panels);
  return tangential_block(basis_, pts, params_.alpha, &R, body.pose.h);
}

AssembledSystem MomentumAssembler::assemble(const Eigen::MatrixXd& A_old, const DensityField& rho_new,
                                            const Eigen::VectorXd& u_prev, const BodySnapshot& body, double dt,
                                            const VectorField& g_F, const VectorField& g_S) const {
  if (!body.model) throw Error(ErrorCode::InvariantViolation, "assembly needs a body model");
  wall_distance(body.model->shape, body.pose, basis_.domain());  // throws BodyOutsideDomain
  const int d = basis_.dim();
  const int n = basis_.size();
  const TensorQuadrature& q = basis_.quadrature();
  const int ppc = q.axes[0].points_per_cell;
  const MomentumParams& P = params_;

  AssembledSystem S;
  S.t = rho_new.t;
  S.A = A_old;
  S.A_new = mass(rho_new);
  S.D = (S.A_new - S.A) / dt;

  S.chi = body_indicator(basis_, body.model->shape, body.pose, body.width);
  const Tensor3 wq = basis_.quadrature_weights();
  Tensor3 chi_w = S.chi.quad;
  for (std::size_t i = 0; i < chi_w.v.size(); ++i) chi_w.v[i] *= wq.v[i];
  const PairTensor Tchi = basis_.pair_tensor(chi_w);

  // viscosity blended toward delta^2 inside the body
  Eigen::MatrixXd muc, lamc;
  basis_.raw_viscous(Tchi, muc, lamc);
  const double d2 = P.delta * P.delta;
  S.visc = basis_.to_basis(P.mu_F * vmu1_ - (P.mu_F - d2) * muc + P.lambda_F * vlam1_ - (P.lambda_F - d2) * lamc);

  // convection by rho u_prev plus the eps grad rho coupling
  const auto grad = density_gradient(rho_new);
  std::array<Tensor3, 3> ub;
  for (int b = 0; b < d; ++b) ub[b] = basis_.field_on_quadrature(u_prev, b);
  std::array<PairTensor, 3> Tb;
  for (int b = 0; b < d; ++b) {
    Tensor3 W(wq.n, 0.0);
    for (int i = 0; i < W.n[0]; ++i)
      for (int j = 0; j < W.n[1]; ++j)
        for (int k = 0; k < W.n[2]; ++k) {
          const int ci = i / ppc, cj = d > 1 ? j / ppc : 0, ck = d > 2 ? k / ppc : 0;
          W(i, j, k) = wq(i, j, k) * (rho_new.rho(ci, cj, ck) * ub[b](i, j, k) + P.epsilon * grad[b](ci, cj, ck));
        }
    Tb[b] = basis_.pair_tensor(W);
  }
  const Eigen::MatrixXd C = basis_.to_basis(basis_.raw_transport(Tb));
  S.skew = 0.5 * (C - C.transpose());

  // penalization (1/delta) int chi |u - P_S u|^2
  S.R = rigid_projection_map(basis_, *body.model, body.pose);
  const Vec3 h = body.pose.h;
  const int K = rigid_dofs(d);
  const Eigen::MatrixXd Schi = basis_.to_basis(basis_.raw_mass(Tchi));
  const Eigen::VectorXd c0 = project_single(basis_, basis_.single_tensor(chi_w), -1);
  std::array<Eigen::VectorXd, 3> cx;
  for (int a = 0; a < d; ++a) {
    Tensor3 Wx = chi_w;
    for (int i = 0; i < Wx.n[0]; ++i)
      for (int j = 0; j < Wx.n[1]; ++j)
        for (int k = 0; k < Wx.n[2]; ++k) {
          const double xa = q.axes[a].x[a == 0 ? i : (a == 1 ? j : k)];
          Wx(i, j, k) *= xa - h[a];
        }
    cx[a] = project_single(basis_, basis_.single_tensor(Wx), -1);
  }
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, K);
  for (int j = 0; j < n; ++j) {
    const int c = basis_.component(j);
    Q(j, c) = c0[j];
    const Vec3 I(cx[0][j], cx[1][j], d > 2 ? cx[2][j] : 0.0);
    // e_j . (e_m x y) = phi_j (e_m x y)_c
    for (int k = d; k < K; ++k) {
      const int m = d == 2 ? 2 : k - 3;
      Q(j, k) = Vec3::Unit(c).dot(Vec3::Unit(m).cross(I));
    }
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(K, K);
  for (int i = 0; i < S.chi.quad.n[0]; ++i)
    for (int j = 0; j < S.chi.quad.n[1]; ++j)
      for (int k = 0; k < S.chi.quad.n[2]; ++k) {
        const double chi = S.chi.quad(i, j, k);
        if (chi == 0.0) continue;
        double w = 0.0;
        const Vec3 x = quad_point(q, d, i, j, k, w);
        Eigen::MatrixXd psi(3, K);
        for (int a = 0; a < K; ++a) psi.col(a) = rigid_field(d, a, x, h);
        G += (w * chi) * psi.transpose() * psi;
      }
  const Eigen::MatrixXd QR = Q * S.R.transpose();
  S.penal = (Schi - QR - QR.transpose() + S.R * G * S.R.transpose()) / P.delta;

  S.wall = wall_;
  S.iface = interface_block(body, S.R);

  // forcing int rho g_delta . e_j
  S.F_force = Eigen::VectorXd::Zero(n);
  {
    std::array<Tensor3, 3> Wg;
    for (int a = 0; a < d; ++a) Wg[a] = Tensor3(wq.n, 0.0);
    bool any = false;
    for (int i = 0; i < wq.n[0]; ++i)
      for (int j = 0; j < wq.n[1]; ++j)
        for (int k = 0; k < wq.n[2]; ++k) {
          double w = 0.0;
          const Vec3 x = quad_point(q, d, i, j, k, w);
          const double chi = S.chi.quad(i, j, k);
          const Vec3 g = (1.0 - chi) * g_F(x) + chi * g_S(x);
          const int ci = i / ppc, cj = d > 1 ? j / ppc : 0, ck = d > 2 ? k / ppc : 0;
          const double rw = w * rho_new.rho(ci, cj, ck);
          for (int a = 0; a < d; ++a) {
            Wg[a](i, j, k) = rw * g[a];
            any = any || g[a] != 0.0;
          }
        }
    if (any) S.F_force = load_vector(basis_, Wg);
  }
  S.F_press = pressure_force(cell_pressure(rho_new, S.chi.cells));

  S.B = S.skew + 0.5 * S.D + S.visc + S.wall + S.iface + S.penal;
  S.F = S.F_force + S.F_press;
  return S;
}

Eigen::VectorXd step_velocity(const AssembledSystem& sys, const Eigen::VectorXd& g, double dt, double tol) {
  const Eigen::MatrixXd M = sys.A + dt * sys.B;
  const Eigen::VectorXd rhs = sys.A * g + dt * sys.F;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  Eigen::VectorXd x = lu.solve(rhs);
  const double scale = std::max(rhs.norm(), 1e-300);
  Eigen::VectorXd res = rhs - M * x;
  if (res.norm() > tol * scale) {
    x += lu.solve(res);
    res = rhs - M * x;
  }
  if (!x.allFinite() || (rhs.norm() > 0.0 && res.norm() > tol * scale))
    throw Error(ErrorCode::LinearSolveFailure,
                "momentum solve residual " + std::to_string(res.norm() / scale) + " above tolerance");
  return x;
}

SlipDissipation slip_dissipation(const SlipBasis& basis, const Eigen::VectorXd& g, const BodyModel& body,
                                 const RigidPose& pose, double alpha, int order, int panels) {
  SlipDissipation out;
  out.wall = tangential_dissipation(basis.domain().wall, [&](const Vec3& x) { return basis.evaluate(g, x); }, alpha);
  const auto pts = body.world_points(pose);
  std::vector<Vec3> u(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) u[q] = basis.evaluate(g, pts[q]);
  const RigidMotion m = project_rigid(pts, body.mass, u, body.inertia(pose));
  const auto surf = body_surface_quadrature(body.shape, pose, order, panels);
  out.interface =
      tangential_dissipation(surf, [&](const Vec3& x) { return Vec3(basis.evaluate(g, x) - m.at(x)); }, alpha);
  return out;
}

}  // namespace slipfsi
