#include "slipfsi/continuity.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "slipfsi/error.hpp"

namespace slipfsi {

namespace {

std::array<int, 3> face_extents(const Grid& g, int a) {
  std::array<int, 3> e = g.n;
  e[a] += 1;
  return e;
}

// Visits every face of axis a as (face index, left cell or -1, right cell
// or -1) with flat cell indices.
template <class F>
void for_each_face(const Grid& g, int a, F&& f) {
  const auto e = face_extents(g, a);
  for (int i = 0; i < e[0]; ++i)
    for (int j = 0; j < e[1]; ++j)
      for (int k = 0; k < e[2]; ++k) {
        std::array<int, 3> c{i, j, k};
        const int ia = c[a];
        std::array<int, 3> lc = c;
        lc[a] = ia - 1;
        const int left = ia > 0 ? (lc[0] * g.n[1] + lc[1]) * g.n[2] + lc[2] : -1;
        const int right = ia < g.n[a] ? (c[0] * g.n[1] + c[1]) * g.n[2] + c[2] : -1;
        f(i, j, k, left, right);
      }
}

}  // namespace

double Grid::min_h() const {
  double m = h(0);
  for (int a = 1; a < dim; ++a) m = std::min(m, h(a));
  return m;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= h(a);
  return v;
}

Vec3 Grid::center(int i, int j, int k) const {
  Vec3 x = Vec3::Zero();
  const std::array<int, 3> c{i, j, k};
  for (int a = 0; a < dim; ++a) x[a] = (c[a] + 0.5) * h(a);
  return x;
}

double DensityField::total_mass() const {
  double s = 0.0;
  for (double r : rho.v) s += r;
  return s * grid.cell_volume();
}

double DensityField::min() const { return *std::min_element(rho.v.begin(), rho.v.end()); }
double DensityField::max() const { return *std::max_element(rho.v.begin(), rho.v.end()); }

FaceField zero_fluxes(const Grid& g) {
  FaceField f;
  for (int a = 0; a < g.dim; ++a) f.f[a] = Tensor3(face_extents(g, a), 0.0);
  return f;
}

Tensor3 flux_divergence(const Grid& g, const FaceField& flux) {
  Tensor3 div = g.zeros();
  const double vol = g.cell_volume();
  for (int a = 0; a < g.dim; ++a)
    for_each_face(g, a, [&](int i, int j, int k, int left, int right) {
      const double U = flux.f[a](i, j, k);
      if (left >= 0) div.v[left] += U / vol;
      if (right >= 0) div.v[right] -= U / vol;
    });
  return div;
}

DensityField step_density(const DensityField& rho, const FaceField& flux, double epsilon, double dt, double speed_sup,
                          double cfl_limit) {
  const Grid& g = rho.grid;
  if (!(dt > 0.0)) throw Error(ErrorCode::InvariantViolation, "dt must be positive");
  const double cfl = speed_sup * dt / g.min_h();
  if (cfl > cfl_limit)
    throw Error(ErrorCode::CflViolation, "max|u| dt / h = " + std::to_string(cfl) + " exceeds " + std::to_string(cfl_limit));
  const int n = g.cells();
  const double vol = g.cell_volume();
  std::vector<double> diag(n, vol / dt);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 7);
  for (int a = 0; a < g.dim; ++a) {
    const double D = epsilon * g.face_area(a) / g.h(a);
    for_each_face(g, a, [&](int i, int j, int k, int left, int right) {
      const double U = flux.f[a](i, j, k);
      if (left >= 0 && right >= 0) {
        if (U > 0.0) {
          diag[left] += U;
          trip.emplace_back(right, left, -U);
        } else if (U < 0.0) {
          diag[right] -= U;
          trip.emplace_back(left, right, U);
        }
        diag[left] += D;
        diag[right] += D;
        trip.emplace_back(left, right, -D);
        trip.emplace_back(right, left, -D);
      } else if (left >= 0) {
        diag[left] += U;  // outward flux carries the cell value
      } else if (right >= 0) {
        diag[right] -= U;
      }
    });
  }
  for (int c = 0; c < n; ++c) trip.emplace_back(c, c, diag[c]);
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::LinearSolveFailure, "density system factorization failed");
  Eigen::VectorXd b(n);
  for (int c = 0; c < n; ++c) b[c] = rho.rho.v[c] * vol / dt;
  const Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw Error(ErrorCode::LinearSolveFailure, "density solve failed");
  DensityField out = rho;
  out.t = rho.t + dt;
  for (int c = 0; c < n; ++c) out.rho.v[c] = x[c];
  return out;
}

DensityField step_density(const DensityField& rho, const SlipBasis& basis, const Eigen::VectorXd& g, double epsilon,
                          double dt, double cfl_limit) {
  double sup = 0.0;
  Tensor3 speed2;
  for (int c = 0; c < basis.dim(); ++c) {
    const Tensor3 uc = basis.field_on_quadrature(g, c);
    if (c == 0) speed2 = Tensor3(uc.n, 0.0);
    for (std::size_t i = 0; i < uc.v.size(); ++i) speed2.v[i] += uc.v[i] * uc.v[i];
  }
  for (double s : speed2.v) sup = std::max(sup, s);
  return step_density(rho, basis.face_flux(g), epsilon, dt, std::sqrt(sup), cfl_limit);
}

std::array<Tensor3, 3> density_gradient(const DensityField& rho) {
  const Grid& g = rho.grid;
  std::array<Tensor3, 3> grad;
  for (int a = 0; a < 3; ++a) grad[a] = g.zeros();
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) {
        const std::array<int, 3> c{i, j, k};
        for (int a = 0; a < g.dim; ++a) {
          std::array<int, 3> lo = c, hi = c;
          lo[a] = std::max(0, c[a] - 1);
          hi[a] = std::min(g.n[a] - 1, c[a] + 1);
          grad[a](i, j, k) = (rho.rho(hi[0], hi[1], hi[2]) - rho.rho(lo[0], lo[1], lo[2])) / (2.0 * g.h(a));
        }
      }
  return grad;
}

double face_dissipation(const DensityField& rho, double epsilon, const std::function<double(double)>& fprime) {
  const Grid& g = rho.grid;
  double s = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    const double D = epsilon * g.face_area(a) / g.h(a);
    for_each_face(g, a, [&](int, int, int, int left, int right) {
      if (left < 0 || right < 0) return;
      const double rl = rho.rho.v[left], rr = rho.rho.v[right];
      s += D * (fprime(rr) - fprime(rl)) * (rr - rl);
    });
  }
  return s;
}

EnvelopeReport check_envelope(const DensityField& rho, const std::vector<EnvelopeStep>& history, double rho_min0,
                              double rho_max0) {
  EnvelopeReport rep;
  double lo = rho_min0, hi = rho_max0;
  for (const EnvelopeStep& s : history) {
    lo /= 1.0 + s.dt * s.div_sup;
    const double q = 1.0 - s.dt * s.div_sup;
    hi = q > 0.0 ? hi / q : std::numeric_limits<double>::infinity();
  }
  const double h = rho.grid.min_h();
  rep.lower = lo;
  rep.upper = hi;
  rep.tolerance = 1e-8 + h * h;
  const Grid& g = rho.grid;
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) {
        const double v = rho.rho(i, j, k);
        if (v < lo - rep.tolerance || v > hi + rep.tolerance) rep.violations.push_back({{i, j, k}, v, lo, hi});
      }
  return rep;
}

Renormalization Renormalization::identity() {
  return {"identity", [](double z) { return z; }, [](double) { return 1.0; }, -1e300, true};
}

Renormalization Renormalization::constant(double c) {
  return {"constant", [c](double) { return c; }, [](double) { return 0.0; }, -1e300, true};
}

Renormalization Renormalization::z_log_z() {
  return {"zlogz", [](double z) { return z * std::log(z); }, [](double z) { return std::log(z) + 1.0; }, 0.0, false};
}

double renormalization_residual(const DensityField& before, const DensityField& after, const FaceField& flux,
                                const Renormalization& b, double epsilon, double dt) {
  for (const DensityField* f : {&before, &after})
    for (double r : f->rho.v) {
      if (!std::isfinite(r) || r < b.lower || (!b.closed && r == b.lower))
        throw Error(ErrorCode::DomainError, b.name + " is undefined at density " + std::to_string(r));
    }
  const Grid& g = after.grid;
  const double vol = g.cell_volume();
  double dbdt = 0.0;
  for (std::size_t c = 0; c < after.rho.v.size(); ++c) dbdt += vol * (b.b(after.rho.v[c]) - b.b(before.rho.v[c]));
  dbdt /= dt;
  // per face: U [b(rho_up) - b(rho_K) + b'(rho_K) rho_K] for both cells,
  // i.e. div(b u) + (b' rho - b) div u with upwind b
  auto part = [&](int K, double U, int up) {
    const double rK = after.rho.v[K];
    return U * (b.b(after.rho.v[up]) - b.b(rK) + b.bprime(rK) * rK);
  };
  double source = 0.0;
  for (int a = 0; a < g.dim; ++a)
    for_each_face(g, a, [&](int i, int j, int k, int left, int right) {
      const double U = flux.f[a](i, j, k);
      if (left >= 0 && right >= 0) {
        const int up = U >= 0.0 ? left : right;
        source += part(left, U, up) + part(right, -U, up);
      } else if (left >= 0) {
        source += part(left, U, left);
      } else if (right >= 0) {
        source += part(right, -U, right);
      }
    });
  return dbdt + source + face_dissipation(after, epsilon, b.bprime);
}

}  // namespace slipfsi
