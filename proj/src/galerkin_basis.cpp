#include "slipfsi/galerkin_basis.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "slipfsi/error.hpp"

namespace slipfsi {

namespace {
constexpr double kPi = std::numbers::pi;
}

SlipBasis::SlipBasis(const Domain& domain, int modes_per_axis, int points_per_cell)
    : domain_(domain), dim_(domain.dim), M_(modes_per_axis) {
  if (dim_ != 2 && dim_ != 3) throw Error(ErrorCode::UnsupportedDomain, "basis needs a 2D or 3D box");
  if (M_ < 1) throw Error(ErrorCode::InvariantViolation, "modes per axis must be >= 1");
  std::array<double, 3> lengths{domain.extents[0], domain.extents[1], domain.extents[2]};
  quad_ = tensor_quadrature(dim_, lengths, domain.cells, points_per_cell);

  for (int a = 0; a < dim_; ++a) {
    quad_atoms_[a] = atoms_at(a, quad_.axes[a].x);
    const int n = domain.cells[a];
    const double h = lengths[a] / n;
    std::vector<double> nodes(n + 1);
    for (int i = 0; i <= n; ++i) nodes[i] = i * h;
    node_atoms_[a] = atoms_at(a, nodes);
    Eigen::MatrixXd I(n, atoms_per_axis());
    for (int i = 0; i < n; ++i) {
      const double x0 = i * h, x1 = (i + 1) * h;
      for (int at = 0; at < atoms_per_axis(); ++at) {
        if (at == 0) {
          I(i, at) = h;
          continue;
        }
        const double kk = wavenumber(a, at);
        if (at <= M_) {
          I(i, at) = (std::sin(kk * x1) - std::sin(kk * x0)) / kk;
        } else {
          I(i, at) = (std::cos(kk * x0) - std::cos(kk * x1)) / kk;
        }
      }
    }
    cell_int_[a] = I;
  }

  int per_comp = 1;
  for (int a = 0; a < dim_; ++a) per_comp *= M_;
  modes_.reserve(static_cast<std::size_t>(dim_) * per_comp);
  for (int c = 0; c < dim_; ++c) {
    for (int flat = 0; flat < per_comp; ++flat) {
      RawMode m;
      m.c = c;
      int rem = flat;
      std::array<int, 3> kl{0, 0, 0};
      for (int a = dim_ - 1; a >= 0; --a) {
        kl[a] = rem % M_;
        rem /= M_;
      }
      for (int a = 0; a < dim_; ++a) {
        const bool sine = a == c;
        const int K = sine ? kl[a] + 1 : kl[a];
        m.k[a] = K;
        m.value.atom[a] = sine ? M_ + K : K;
      }
      for (int b = 0; b < 3; ++b) {
        m.grad[b] = m.value;
        if (b >= dim_) {
          m.grad[b].coef = 0.0;
          continue;
        }
        const int K = m.k[b];
        const double kk = K * kPi / lengths[b];
        if (b == c) {
          m.grad[b].coef = kk;
          m.grad[b].atom[b] = K;
        } else if (K == 0) {
          m.grad[b].coef = 0.0;
        } else {
          m.grad[b].coef = -kk;
          m.grad[b].atom[b] = M_ + K;
        }
      }
      modes_.push_back(m);
    }
  }

  const PairTensor Tw = pair_tensor(quadrature_weights());
  const Eigen::MatrixXd G = raw_mass(Tw);
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::IndefiniteMass, "raw Gram matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  C_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(size(), size()));
}

double SlipBasis::wavenumber(int axis, int atom) const {
  const int K = atom <= M_ ? atom : atom - M_;
  return K * kPi / domain_.extents[axis];
}

Eigen::MatrixXd SlipBasis::atoms_at(int axis, const std::vector<double>& x) const {
  const int A = atoms_per_axis();
  Eigen::MatrixXd out(static_cast<int>(x.size()), A);
  for (std::size_t q = 0; q < x.size(); ++q) {
    for (int at = 0; at < A; ++at) {
      const double kx = wavenumber(axis, at) * x[q];
      out(static_cast<int>(q), at) = at <= M_ ? std::cos(kx) : std::sin(kx);
    }
  }
  return out;
}

Eigen::MatrixXd SlipBasis::family(const Eigen::MatrixXd& atoms, int axis, int comp, bool derivative) const {
  Eigen::MatrixXd F(atoms.rows(), M_);
  for (int k = 0; k < M_; ++k) {
    if (axis == comp) {
      const int K = k + 1;
      if (derivative) {
        F.col(k) = wavenumber(axis, K) * atoms.col(K);
      } else {
        F.col(k) = atoms.col(M_ + K);
      }
    } else {
      const int K = k;
      if (derivative) {
        if (K == 0) {
          F.col(k).setZero();
        } else {
          F.col(k) = -wavenumber(axis, K) * atoms.col(M_ + K);
        }
      } else {
        F.col(k) = atoms.col(K);
      }
    }
  }
  return F;
}

Eigen::MatrixXd SlipBasis::values(const std::vector<Vec3>& pts, int deriv_axis) const {
  const int n = static_cast<int>(pts.size());
  const int A = atoms_per_axis();
  Eigen::MatrixXd raw(n, size());
  std::array<std::vector<double>, 3> at;
  for (int a = 0; a < dim_; ++a) at[a].resize(A);
  for (int p = 0; p < n; ++p) {
    for (int a = 0; a < dim_; ++a)
      for (int k = 0; k < A; ++k) {
        const double kx = wavenumber(a, k) * pts[p][a];
        at[a][k] = k <= M_ ? std::cos(kx) : std::sin(kx);
      }
    for (int i = 0; i < size(); ++i) {
      const AtomProduct& f = deriv_axis < 0 ? modes_[i].value : modes_[i].grad[deriv_axis];
      double v = f.coef;
      for (int a = 0; a < dim_; ++a) v *= at[a][f.atom[a]];
      raw(p, i) = v;
    }
  }
  return raw * C_;
}

Vec3 SlipBasis::evaluate(const Eigen::VectorXd& g, const Vec3& x) const {
  const Eigen::MatrixXd v = values({x});
  Vec3 u = Vec3::Zero();
  for (int j = 0; j < size(); ++j) u[modes_[j].c] += g[j] * v(0, j);
  return u;
}

Mat3 SlipBasis::evaluate_gradient(const Eigen::VectorXd& g, const Vec3& x) const {
  Mat3 G = Mat3::Zero();
  for (int b = 0; b < dim_; ++b) {
    const Eigen::MatrixXd v = values({x}, b);
    for (int j = 0; j < size(); ++j) G(modes_[j].c, b) += g[j] * v(0, j);
  }
  return G;
}

Mat3 SlipBasis::evaluate_sym_gradient(const Eigen::VectorXd& g, const Vec3& x) const {
  const Mat3 G = evaluate_gradient(g, x);
  return 0.5 * (G + G.transpose());
}

double SlipBasis::evaluate_divergence(const Eigen::VectorXd& g, const Vec3& x) const {
  return evaluate_gradient(g, x).trace();
}

Tensor3 SlipBasis::field_on_grid(const Eigen::VectorXd& g, int comp, const std::array<Eigen::MatrixXd, 3>& axis_atoms,
                                 int deriv_axis) const {
  const Eigen::VectorXd a = C_ * g;
  int per_comp = 1;
  for (int ax = 0; ax < dim_; ++ax) per_comp *= M_;
  Tensor3 K(M_, M_, dim_ == 3 ? M_ : 1);
  for (int f = 0; f < per_comp; ++f) K.v[f] = a[comp * per_comp + f];
  std::array<Eigen::MatrixXd, 3> F;
  std::array<const Eigen::MatrixXd*, 3> mats{nullptr, nullptr, nullptr};
  for (int ax = 0; ax < dim_; ++ax) {
    F[ax] = family(axis_atoms[ax], ax, comp, deriv_axis == ax);
    mats[ax] = &F[ax];
  }
  return multi_mode_product(K, dim_, mats);
}

Tensor3 SlipBasis::field_on_quadrature(const Eigen::VectorXd& g, int comp, int deriv_axis) const {
  return field_on_grid(g, comp, quad_atoms_, deriv_axis);
}

Tensor3 SlipBasis::quadrature_weights() const {
  return weighted([](const Vec3&) { return 1.0; });
}

PairTensor SlipBasis::pair_tensor(const Tensor3& W) const {
  const int A = atoms_per_axis();
  std::array<Eigen::MatrixXd, 3> X;
  std::array<const Eigen::MatrixXd*, 3> mats{nullptr, nullptr, nullptr};
  for (int a = 0; a < dim_; ++a) {
    const Eigen::MatrixXd& at = quad_atoms_[a];
    X[a].resize(A * A, at.rows());
    for (int p = 0; p < A; ++p)
      for (int q = 0; q < A; ++q) X[a].row(p * A + q) = at.col(p).cwiseProduct(at.col(q)).transpose();
    mats[a] = &X[a];
  }
  PairTensor T;
  T.dim = dim_;
  T.A = A;
  T.t = multi_mode_product(W, dim_, mats);
  return T;
}

SingleTensor SlipBasis::single_tensor(const Tensor3& W) const {
  std::array<Eigen::MatrixXd, 3> X;
  std::array<const Eigen::MatrixXd*, 3> mats{nullptr, nullptr, nullptr};
  for (int a = 0; a < dim_; ++a) {
    X[a] = quad_atoms_[a].transpose();
    mats[a] = &X[a];
  }
  SingleTensor S;
  S.dim = dim_;
  S.t = multi_mode_product(W, dim_, mats);
  return S;
}

Eigen::MatrixXd SlipBasis::raw_mass(const PairTensor& T) const {
  const int n = size();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (modes_[i].c != modes_[j].c) continue;
      const double v = T(modes_[i].value, modes_[j].value);
      R(i, j) = v;
      R(j, i) = v;
    }
  return R;
}

void SlipBasis::raw_viscous(const PairTensor& T, Eigen::MatrixXd& mu_part, Eigen::MatrixXd& lambda_part) const {
  const int n = size();
  mu_part.setZero(n, n);
  lambda_part.setZero(n, n);
  for (int i = 0; i < n; ++i) {
    const RawMode& mi = modes_[i];
    for (int j = i; j < n; ++j) {
      const RawMode& mj = modes_[j];
      double mu = T(mi.grad[mj.c], mj.grad[mi.c]);
      if (mi.c == mj.c)
        for (int b = 0; b < dim_; ++b) mu += T(mi.grad[b], mj.grad[b]);
      const double lam = T(mi.grad[mi.c], mj.grad[mj.c]);
      mu_part(i, j) = mu_part(j, i) = mu;
      lambda_part(i, j) = lambda_part(j, i) = lam;
    }
  }
}

Eigen::MatrixXd SlipBasis::raw_transport(const std::array<PairTensor, 3>& Tb) const {
  const int n = size();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (modes_[i].c != modes_[j].c) continue;
      double v = 0.0;
      for (int b = 0; b < dim_; ++b) v += Tb[b](modes_[i].value, modes_[j].grad[b]);
      R(i, j) = v;
    }
  return R;
}

Eigen::MatrixXd SlipBasis::to_basis(const Eigen::MatrixXd& raw) const { return C_.transpose() * raw * C_; }

FaceField SlipBasis::face_flux(const Eigen::VectorXd& g) const {
  FaceField out;
  for (int a = 0; a < dim_; ++a) {
    std::array<Eigen::MatrixXd, 3> tables;
    for (int b = 0; b < dim_; ++b) tables[b] = b == a ? node_atoms_[b] : cell_int_[b];
    Tensor3 f = field_on_grid(g, a, tables);
    // Walls carry no flux; sin vanishes there up to roundoff.
    for (int i = 0; i < f.n[0]; ++i)
      for (int j = 0; j < f.n[1]; ++j)
        for (int k = 0; k < f.n[2]; ++k) {
          const int ia = a == 0 ? i : (a == 1 ? j : k);
          if (ia == 0 || ia == domain_.cells[a]) f(i, j, k) = 0.0;
        }
    out.f[a] = std::move(f);
  }
  return out;
}

Eigen::VectorXd SlipBasis::face_adjoint(const FaceField& face) const {
  int per_comp = 1;
  for (int a = 0; a < dim_; ++a) per_comp *= M_;
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(size());
  for (int a = 0; a < dim_; ++a) {
    Tensor3 f = face.f[a];
    for (int i = 0; i < f.n[0]; ++i)
      for (int j = 0; j < f.n[1]; ++j)
        for (int k = 0; k < f.n[2]; ++k) {
          const int ia = a == 0 ? i : (a == 1 ? j : k);
          if (ia == 0 || ia == domain_.cells[a]) f(i, j, k) = 0.0;
        }
    std::array<Eigen::MatrixXd, 3> FT;
    std::array<const Eigen::MatrixXd*, 3> mats{nullptr, nullptr, nullptr};
    for (int b = 0; b < dim_; ++b) {
      FT[b] = family(b == a ? node_atoms_[b] : cell_int_[b], b, a, false).transpose();
      mats[b] = &FT[b];
    }
    const Tensor3 K = multi_mode_product(f, dim_, mats);
    for (int q = 0; q < per_comp; ++q) raw[a * per_comp + q] = K.v[q];
  }
  return C_.transpose() * raw;
}

Tensor3 cells_to_weighted_quadrature(const SlipBasis& basis, const Tensor3& cell_values) {
  const TensorQuadrature& q = basis.quadrature();
  const auto ext = q.extents();
  const int d = basis.dim();
  Tensor3 out(static_cast<int>(ext[0]), static_cast<int>(ext[1]), static_cast<int>(ext[2]));
  const int ppc = q.axes[0].points_per_cell;
  for (int i = 0; i < out.n[0]; ++i)
    for (int j = 0; j < out.n[1]; ++j)
      for (int k = 0; k < out.n[2]; ++k) {
        double w = q.axes[0].w[i];
        if (d > 1) w *= q.axes[1].w[j];
        if (d > 2) w *= q.axes[2].w[k];
        out(i, j, k) = w * cell_values(i / ppc, d > 1 ? j / ppc : 0, d > 2 ? k / ppc : 0);
      }
  return out;
}

Eigen::MatrixXd weighted_mass_matrix(const SlipBasis& basis, const Tensor3& rho_cells) {
  for (double r : rho_cells.v)
    if (r < 0.0 || !std::isfinite(r)) throw Error(ErrorCode::IndefiniteMass, "density must be nonnegative");
  const Eigen::MatrixXd A = basis.to_basis(basis.raw_mass(basis.pair_tensor(cells_to_weighted_quadrature(basis, rho_cells))));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()[0] < 1e-14)
    throw Error(ErrorCode::IndefiniteMass, "mass matrix smallest eigenvalue " + std::to_string(es.eigenvalues()[0]));
  return A;
}

}  // namespace slipfsi
