#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "slipfsi/continuity.hpp"
#include "slipfsi/galerkin_basis.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/rigid_body.hpp"

namespace slipfsi {

/// p = a_F (1 - chi) rho^gamma + delta rho^beta.
struct PressureLaw {
  double a_F = 1.0;
  double gamma = 2.0;
  double delta = 0.1;
  double beta = 8.0;

  double pressure(double rho, double a) const;
  /// Helmholtz-type energy density with p = rho H' - H.
  double energy(double rho, double a) const;
  /// H'(rho).
  double energy_prime(double rho, double a) const;
  double coefficient(double chi) const { return a_F * (1.0 - chi); }
};

double evaluate_pressure(const PressureLaw& law, double rho, double chi);

/// Material parameters entering the blocks of B.
struct MomentumParams {
  double mu_F = 0.1;
  double lambda_F = 0.0;
  double alpha = 0.0;
  double delta = 0.1;
  double epsilon = 0.01;
  PressureLaw law;
};

/// Body data for one assembly: mass points at the current pose plus the
/// smoothed indicator on the volume quadrature and per cell.
struct BodySnapshot {
  const BodyModel* model = nullptr;
  RigidPose pose;
  double width = 0.0;
  int surface_order = 4;
  int surface_panels = 64;
};

/// Indicator on the volume quadrature (not weighted) and its cell averages.
struct IndicatorField {
  Tensor3 quad;
  Tensor3 cells;
};
IndicatorField body_indicator(const SlipBasis& basis, const BodyShape& shape, const RigidPose& pose, double width);

/// Rigid dofs of P_S e_j (rows j; columns V then r components used by the
/// dimension: 2D V_x, V_y, r_z; 3D V, r).
Eigen::MatrixXd rigid_projection_map(const SlipBasis& basis, const BodyModel& body, const RigidPose& pose);
/// Values of the rigid basis field k at x about center h.
Vec3 rigid_field(int dim, int k, const Vec3& x, const Vec3& h);
int rigid_dofs(int dim);

/// Pieces of the linear system solved per step:
/// (A + dt B) g_new = A g + dt F.
struct AssembledSystem {
  double t = 0.0;
  Eigen::MatrixXd A;       // mass at the previous density
  Eigen::MatrixXd A_new;   // mass at the updated density
  Eigen::MatrixXd B;
  Eigen::VectorXd F;
  // blocks of B and F kept for the energy ledger
  Eigen::MatrixXd skew;    // convection + eps coupling, skew part
  Eigen::MatrixXd D;       // (A_new - A) / dt
  Eigen::MatrixXd visc;
  Eigen::MatrixXd wall;
  Eigen::MatrixXd iface;
  Eigen::MatrixXd penal;
  Eigen::VectorXd F_force;
  Eigen::VectorXd F_press;
  Eigen::MatrixXd R;       // rigid projection map
  IndicatorField chi;
};

using VectorField = std::function<Vec3(const Vec3&)>;

/// v_j = int W . e_j for per-component values already multiplied by the
/// volume quadrature weights.
Eigen::VectorXd load_vector(const SlipBasis& basis, const std::array<Tensor3, 3>& weighted_components);

/// Quantities fixed for a run: basis, constant viscous blocks, wall friction.
class MomentumAssembler {
 public:
  MomentumAssembler(const SlipBasis& basis, const MomentumParams& params);

  const SlipBasis& basis() const { return basis_; }
  const MomentumParams& params() const { return params_; }
  const Eigen::MatrixXd& wall_block() const { return wall_; }

  /// Mass matrix int rho e_i . e_j for cell densities.
  Eigen::MatrixXd mass(const DensityField& rho) const;

  /// Assembles for the step rho_old -> rho_new with convecting velocity
  /// u_prev. g_F, g_S give the forcing at a point.
  AssembledSystem assemble(const Eigen::MatrixXd& A_old, const DensityField& rho_new, const Eigen::VectorXd& u_prev,
                           const BodySnapshot& body, double dt, const VectorField& g_F,
                           const VectorField& g_S) const;

  /// Cell pressures for the updated density.
  Tensor3 cell_pressure(const DensityField& rho, const Tensor3& chi_cells) const;
  /// int p div e_j from cell pressures (exact for piecewise-constant p).
  Eigen::VectorXd pressure_force(const Tensor3& p_cells) const;
  /// Interface friction block from surface points of the body.
  Eigen::MatrixXd interface_block(const BodySnapshot& body, const Eigen::MatrixXd& R) const;

 private:
  const SlipBasis& basis_;
  MomentumParams params_;
  Eigen::MatrixXd vmu1_, vlam1_;
  Eigen::MatrixXd wall_;
};

/// Friction block alpha sum_s w_s |v_tan|^2 over surface points.
Eigen::MatrixXd tangential_block(const SlipBasis& basis, const std::vector<SurfacePoint>& pts, double alpha,
                                 const Eigen::MatrixXd* rigid_map, const Vec3& center);

/// Implicit step (A + dt B) g_new = A g + dt F. Throws LinearSolveFailure if
/// the relative residual exceeds tol.
Eigen::VectorXd step_velocity(const AssembledSystem& sys, const Eigen::VectorXd& g, double dt, double tol = 1e-12);

struct SlipDissipation {
  double wall = 0.0;
  double interface = 0.0;
};

/// alpha sum_s w_s (|u|^2 - (u . nu)^2) over surface points.
double tangential_dissipation(const std::vector<SurfacePoint>& pts, const VectorField& u, double alpha);

/// alpha int_{dOmega} |u_tan|^2 and alpha int_{dS} |(u - P_S u)_tan|^2 by
/// direct surface quadrature of the field.
SlipDissipation slip_dissipation(const SlipBasis& basis, const Eigen::VectorXd& g, const BodyModel& body,
                                 const RigidPose& pose, double alpha, int order = 4, int panels = 64);

}  // namespace slipfsi
