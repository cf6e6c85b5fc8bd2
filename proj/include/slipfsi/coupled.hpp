#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slipfsi/config.hpp"
#include "slipfsi/momentum.hpp"

namespace slipfsi {

struct CoupledState {
  int step = 0;
  double t = 0.0;
  DensityField rho;
  Eigen::VectorXd g;
  RigidPose pose;
  RigidMotion motion;
  Eigen::MatrixXd A;  // mass matrix at rho (reused as A^n of the next step)
  Tensor3 chi_cells;  // cell indicator at pose
};

/// One row of energy.csv. Dissipation and power entries are rates at the
/// committed state; the step budget multiplies them by dt.
struct EnergyLedger {
  double t = 0.0;
  double E_kin = 0.0;
  double E_elastic = 0.0;
  double D_visc = 0.0;
  double D_rho = 0.0;
  double D_wall = 0.0;
  double D_interface = 0.0;
  double D_penal = 0.0;
  double P_force = 0.0;
  double slack = 0.0;
  // not written to energy.csv
  double P_press = 0.0;
  int picard_iterations = 0;
  double picard_residual = 0.0;
};

inline constexpr const char* kEnergyHeader = "t,E_kin,E_elastic,D_visc,D_rho,D_wall,D_interface,D_penal,P_force,slack";

/// Everything fixed for a run: config, basis, body model, assembler.
class Simulation {
 public:
  explicit Simulation(const SimulationConfig& config);

  const SimulationConfig& config() const { return config_; }
  const SlipBasis& basis() const { return *basis_; }
  const BodyModel& body() const { return body_; }
  const MomentumAssembler& assembler() const { return *assembler_; }
  const PressureLaw& law() const { return assembler_->params().law; }

  /// Mollified density plus delta, momentum scaled to it, projected on X_N.
  CoupledState initial_state() const;
  /// Rebuilds the cached matrices of a state read from a snapshot.
  CoupledState restore(const Snapshot& snap) const;
  Snapshot snapshot(const CoupledState& s) const;

  /// Energy at a committed state.
  double kinetic(const CoupledState& s) const;
  double elastic(const DensityField& rho, const Tensor3& chi_cells) const;
  /// eps sum_faces |sigma|/d [abar (h'(rho_L) - h'(rho_K)) + delta (q'(rho_L) - q'(rho_K))] (rho_L - rho_K).
  double density_dissipation(const DensityField& rho, const Tensor3& chi_cells) const;

  /// Fixed-point step. Throws CollisionHalt before committing a pose with
  /// wall distance below 3 sigma / 2, PicardDivergence after maxiter.
  CoupledState picard_step(const CoupledState& s, EnergyLedger& ledger) const;

  /// Rigid motion P_S u of the coefficient vector at a pose.
  RigidMotion rigid_part(const Eigen::VectorXd& g, const RigidPose& pose) const;
  BodySnapshot body_snapshot(const RigidPose& pose) const;
  double wall_distance_of(const RigidPose& pose) const;

  VectorField forcing_fluid() const;
  VectorField forcing_body() const;
  /// Initial velocity field before projection (rigid inside the body).
  Vec3 initial_velocity(const Vec3& x) const;

 private:
  SimulationConfig config_;
  Domain domain_;
  std::unique_ptr<SlipBasis> basis_;
  BodyModel body_;
  std::unique_ptr<MomentumAssembler> assembler_;
  Eigen::VectorXd mode_coeffs_;  // for u0 = "mode"
};

struct HaltReport {
  bool halted = false;
  int step = 0;        // step that would have been committed
  double t = 0.0;
  std::string reason;
  double wall_distance = 0.0;  // at the last committed state
};

struct RunSummary {
  int steps = 0;
  double t = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  int picard_total = 0;
  double max_slack_violation = 0.0;  // max(0, -slack / (1 + E0))
  double E0 = 0.0;
  double mass0 = 0.0;
  double mass_drift_max_step = 0.0;
  double mass_drift_total = 0.0;
  double body_mass_drift = 0.0;
  double min_wall_distance = 0.0;
  double collision_bound_T = 0.0;
  bool collision_bound_warning = false;
  double seconds = 0.0;
  HaltReport halt;
  std::vector<EnergyLedger> ledger;
  CoupledState final_state;
  CoupledState prev_state;  // state one step before final_state
  double forcing_work = 0.0;   // int P_force dt
  // time integrals for the limit metrics
  double penal_integral = 0.0;   // int_0^T int chi |u - P_S u|^2
  double slip_jump_mean = 0.0;   // time average of the interface jump
};

struct RunOptions {
  std::string out_dir;  // empty: no files
  bool write_fields = true;
  bool quiet = true;
};

RunSummary run(const SimulationConfig& config, const RunOptions& options = {});

void write_energy_csv(const std::vector<EnergyLedger>& rows, const std::string& path);
void write_fields_csv(const Simulation& sim, const CoupledState& s, const std::string& path);
std::string body_csv_header(int dim);
std::string body_csv_row(const Simulation& sim, const CoupledState& s);
void write_summary_json(const RunSummary& summary, const SimulationConfig& config, const std::string& path);

/// Certified no-collision time from the initial data.
CollisionBound certified_bound(const Simulation& sim, const CoupledState& s0);

}  // namespace slipfsi
