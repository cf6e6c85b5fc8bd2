#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "slipfsi/geometry.hpp"
#include "slipfsi/quadrature.hpp"
#include "slipfsi/tensor.hpp"

namespace slipfsi {

/// Scalar product of one 1D trigonometric atom per axis times a constant.
/// Atom a on an axis with M modes: a <= M is cos(a pi x / L), a > M is
/// sin((a - M) pi x / L).
struct AtomProduct {
  double coef = 1.0;
  std::array<int, 3> atom{0, 0, 0};
};

/// Unnormalized tensor mode: single nonzero component c, sine factor along
/// axis c (k = 1..M), cosine factors along the other axes (k = 0..M-1).
struct RawMode {
  int c = 0;
  std::array<int, 3> k{0, 0, 0};
  AtomProduct value;
  std::array<AtomProduct, 3> grad;
};

/// Contraction of a weight on the volume quadrature against products of
/// atom pairs, one pair index per axis. Lookups give int W f g for any two
/// atom products f and g.
struct PairTensor {
  int dim = 2;
  int A = 0;  // atoms per axis
  Tensor3 t;

  double operator()(const AtomProduct& f, const AtomProduct& g) const {
    const int p0 = f.atom[0] * A + g.atom[0];
    const int p1 = dim > 1 ? f.atom[1] * A + g.atom[1] : 0;
    const int p2 = dim > 2 ? f.atom[2] * A + g.atom[2] : 0;
    return f.coef * g.coef * t(p0, p1, p2);
  }
};

/// Same for single atoms: int W f.
struct SingleTensor {
  int dim = 2;
  Tensor3 t;
  double operator()(const AtomProduct& f) const {
    return f.coef * t(f.atom[0], dim > 1 ? f.atom[1] : 0, dim > 2 ? f.atom[2] : 0);
  }
};

/// Face-normal quantities on the density grid: for axis a the array has
/// extent cells_a + 1 along a (grid nodes) and cells_b along the others.
struct FaceField {
  std::array<Tensor3, 3> f;
};

/// Slip-compatible trigonometric basis on a box, orthonormalized in the
/// discrete L^2 product of the volume quadrature.
class SlipBasis {
 public:
  SlipBasis(const Domain& domain, int modes_per_axis, int points_per_cell = 3);

  int dim() const { return dim_; }
  int modes_per_axis() const { return M_; }
  int size() const { return static_cast<int>(modes_.size()); }
  int atoms_per_axis() const { return 2 * M_ + 1; }
  int component(int j) const { return modes_[j].c; }
  const std::vector<RawMode>& raw_modes() const { return modes_; }
  const Domain& domain() const { return domain_; }
  const TensorQuadrature& quadrature() const { return quad_; }
  /// Raw-to-orthonormal map: e_j = sum_i raw_i C(i, j). Block diagonal per
  /// component and upper triangular.
  const Eigen::MatrixXd& transform() const { return C_; }

  /// Atom values at arbitrary abscissae on an axis (rows: points).
  Eigen::MatrixXd atoms_at(int axis, const std::vector<double>& x) const;
  const Eigen::MatrixXd& quad_atoms(int axis) const { return quad_atoms_[axis]; }

  /// Values (or the derivative along `deriv_axis`) of all orthonormal basis
  /// functions at points; column j holds component component(j).
  Eigen::MatrixXd values(const std::vector<Vec3>& pts, int deriv_axis = -1) const;

  Vec3 evaluate(const Eigen::VectorXd& g, const Vec3& x) const;
  /// G(c, b) = d u_c / d x_b.
  Mat3 evaluate_gradient(const Eigen::VectorXd& g, const Vec3& x) const;
  Mat3 evaluate_sym_gradient(const Eigen::VectorXd& g, const Vec3& x) const;
  double evaluate_divergence(const Eigen::VectorXd& g, const Vec3& x) const;

  /// Component `comp` of u (or its derivative along deriv_axis) on the
  /// tensor grid given by per-axis atom tables.
  Tensor3 field_on_grid(const Eigen::VectorXd& g, int comp, const std::array<Eigen::MatrixXd, 3>& axis_atoms,
                        int deriv_axis = -1) const;
  /// Same on the volume quadrature grid.
  Tensor3 field_on_quadrature(const Eigen::VectorXd& g, int comp, int deriv_axis = -1) const;

  /// Tensor of quadrature weights on the volume grid.
  Tensor3 quadrature_weights() const;
  /// Values of a function at the volume quadrature points times the weights.
  template <class F>
  Tensor3 weighted(F&& f) const;

  PairTensor pair_tensor(const Tensor3& weighted_values) const;
  SingleTensor single_tensor(const Tensor3& weighted_values) const;

  /// Raw matrices from a pair tensor.
  Eigen::MatrixXd raw_mass(const PairTensor& T) const;
  /// Viscous parts: mu-part (grad:grad + transposed) and lambda-part (div div).
  void raw_viscous(const PairTensor& T, Eigen::MatrixXd& mu_part, Eigen::MatrixXd& lambda_part) const;
  /// int W_b d_b(raw_j) raw_i summed over b with one pair tensor per axis.
  Eigen::MatrixXd raw_transport(const std::array<PairTensor, 3>& Tb) const;
  /// Orthonormal-basis version of a raw matrix: C^T R C.
  Eigen::MatrixXd to_basis(const Eigen::MatrixXd& raw) const;

  /// Exact normal fluxes int_sigma u . n_+ through every grid face.
  FaceField face_flux(const Eigen::VectorXd& g) const;
  /// Adjoint of face_flux: v_j = sum_sigma face(sigma) int_sigma e_j . n_+.
  Eigen::VectorXd face_adjoint(const FaceField& face) const;

  /// Exact cell integrals of atoms on the density grid (rows: cells).
  const Eigen::MatrixXd& cell_integrals(int axis) const { return cell_int_[axis]; }
  const Eigen::MatrixXd& node_atoms(int axis) const { return node_atoms_[axis]; }

 private:
  Eigen::MatrixXd family(const Eigen::MatrixXd& atoms, int axis, int comp, bool derivative) const;
  double wavenumber(int axis, int atom) const;

  Domain domain_;
  int dim_ = 2;
  int M_ = 1;
  std::vector<RawMode> modes_;
  Eigen::MatrixXd C_;
  TensorQuadrature quad_;
  std::array<Eigen::MatrixXd, 3> quad_atoms_;
  std::array<Eigen::MatrixXd, 3> node_atoms_;
  std::array<Eigen::MatrixXd, 3> cell_int_;
};

template <class F>
Tensor3 SlipBasis::weighted(F&& f) const {
  const auto ext = quad_.extents();
  Tensor3 out(static_cast<int>(ext[0]), static_cast<int>(ext[1]), static_cast<int>(ext[2]));
  for (int i = 0; i < out.n[0]; ++i)
    for (int j = 0; j < out.n[1]; ++j)
      for (int k = 0; k < out.n[2]; ++k) {
        Vec3 x = Vec3::Zero();
        double w = quad_.axes[0].w[i];
        x[0] = quad_.axes[0].x[i];
        if (dim_ > 1) {
          x[1] = quad_.axes[1].x[j];
          w *= quad_.axes[1].w[j];
        }
        if (dim_ > 2) {
          x[2] = quad_.axes[2].x[k];
          w *= quad_.axes[2].w[k];
        }
        out(i, j, k) = w * f(x);
      }
  return out;
}

/// int rho e_i . e_j for a piecewise-constant density on the grid (cells
/// matching the quadrature cells). Throws IndefiniteMass if the smallest
/// eigenvalue is below 1e-14.
Eigen::MatrixXd weighted_mass_matrix(const SlipBasis& basis, const Tensor3& rho_cells);

/// Expands cell values onto the volume quadrature grid and multiplies by the
/// quadrature weights.
Tensor3 cells_to_weighted_quadrature(const SlipBasis& basis, const Tensor3& cell_values);

}  // namespace slipfsi
