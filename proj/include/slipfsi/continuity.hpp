#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slipfsi/galerkin_basis.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/tensor.hpp"

namespace slipfsi {

/// Uniform cell grid on the box.
struct Grid {
  int dim = 2;
  std::array<int, 3> n{1, 1, 1};
  Vec3 L = Vec3(1, 1, 0);

  static Grid from_domain(const Domain& d) { return {d.dim, d.cells, d.extents}; }
  double h(int a) const { return L[a] / n[a]; }
  double min_h() const;
  double cell_volume() const;
  /// Area (length in 2D) of a face normal to axis a.
  double face_area(int a) const { return cell_volume() / h(a); }
  int cells() const { return n[0] * n[1] * n[2]; }
  Vec3 center(int i, int j, int k) const;
  Tensor3 zeros() const { return Tensor3(n, 0.0); }
};

/// Cell averages of the fluid density.
struct DensityField {
  Grid grid;
  Tensor3 rho;
  double t = 0.0;

  double total_mass() const;
  double min() const;
  double max() const;
};

/// Volumetric fluxes int_sigma u . n_+ on grid faces. Boundary faces are
/// zero for slip velocities; manufactured tests may set them.
FaceField zero_fluxes(const Grid& g);

/// Cell-average divergence from face fluxes.
Tensor3 flux_divergence(const Grid& g, const FaceField& flux);

/// Backward Euler step of rho_t + div(rho u) = eps Lap rho with upwind
/// convective fluxes and zero diffusive wall flux. `speed_sup` is max |u|
/// used for the CFL contract max|u| dt / h <= cfl_limit.
DensityField step_density(const DensityField& rho, const FaceField& flux, double epsilon, double dt, double speed_sup,
                          double cfl_limit = 0.5);

/// Same with the flux and speed taken from a Galerkin velocity.
DensityField step_density(const DensityField& rho, const SlipBasis& basis, const Eigen::VectorXd& g, double epsilon,
                          double dt, double cfl_limit = 0.5);

/// Per-cell gradient by central differences with a Neumann ghost.
std::array<Tensor3, 3> density_gradient(const DensityField& rho);

/// eps * sum_faces |sigma|/d (f(rho_L) - f(rho_K)) (rho_L - rho_K) over
/// interior faces.
double face_dissipation(const DensityField& rho, double epsilon, const std::function<double(double)>& fprime);

struct EnvelopeStep {
  double dt = 0.0;
  double div_sup = 0.0;
};

struct EnvelopeViolation {
  std::array<int, 3> cell{0, 0, 0};
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct EnvelopeReport {
  double lower = 0.0;
  double upper = 0.0;
  double tolerance = 0.0;
  std::vector<EnvelopeViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Maximum-principle envelope. The factors are the backward Euler forms
/// prod 1/(1 + dt d) and prod 1/(1 - dt d) of exp(-/+ int |div u|).
EnvelopeReport check_envelope(const DensityField& rho, const std::vector<EnvelopeStep>& history, double rho_min0,
                              double rho_max0);

struct Renormalization {
  std::string name;
  std::function<double(double)> b;
  std::function<double(double)> bprime;
  double lower = -1e300;  // b is defined for z > lower (or z >= lower if closed)
  bool closed = true;

  static Renormalization identity();
  static Renormalization constant(double c);
  static Renormalization z_log_z();
};

/// Integrated residual of d_t b(rho) + div(b u) + (b' rho - b) div u with
/// the eps-diffusion bookkeeping included.
double renormalization_residual(const DensityField& before, const DensityField& after, const FaceField& flux,
                                const Renormalization& b, double epsilon, double dt);

}  // namespace slipfsi
