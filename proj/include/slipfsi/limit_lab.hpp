#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slipfsi/coupled.hpp"

namespace slipfsi {

using MatrixField = std::function<Mat3(const Vec3&)>;

/// Vector field with its Jacobian J(c, b) = d phi_c / d x_b. An empty
/// jacobian means fourth-order central differences.
struct TestField {
  VectorField value;
  MatrixField jacobian;
  Mat3 gradient(const Vec3& x) const;
  static TestField zero();
  static TestField galerkin(const SlipBasis& basis, const Eigen::VectorXd& c);
};

/// Fourth-order central-difference Jacobian.
Mat3 fd_jacobian(const VectorField& f, const Vec3& x, int dim, double h);

/// C^2 truncation: 1 on [-1/2, 1/2], quintic smoothstep down to 0 at |s| = 1.
double truncation_profile(double s);

/// Test function matched to the body: phi_F in the fluid, the rigid phi_S
/// deep inside the body and a tangential blend in a layer of depth
/// delta^vartheta, corrected to be divergence free inside the body.
class BlendedTestFunction {
 public:
  BlendedTestFunction(TestField phi_F, RigidMotion phi_S, BodyShape shape, RigidPose pose, double delta,
                      double vartheta, double indicator_width, int angular = 64);

  double layer() const { return ell_; }
  /// (1 - chi) phi_F + chi Phi_S with the smoothed body indicator chi.
  Vec3 operator()(const Vec3& x) const;
  /// phi_S + truncated tangential jump + gradient correction.
  Vec3 solid_part(const Vec3& x) const;
  /// Gradient of the Neumann potential that restores div = 0 in the body.
  Vec3 correction(const Vec3& x) const;
  /// Source of the potential problem, -div of the truncated blend.
  double source(const Vec3& x) const;
  TestField field() const;
  const RigidMotion& rigid() const { return phi_S_; }
  const TestField& fluid() const { return phi_F_; }
  const BodyShape& shape() const { return shape_; }
  const RigidPose& pose() const { return pose_; }

  /// ||1_S (Phi_S - phi_S)||_{L^p} by polar quadrature over the body.
  double solid_deviation_norm(double p, int radial_panels = 24, int angular = 256) const;
  /// max |div Phi_S| over polar sample points inside the body (fd).
  double max_solid_divergence(int radial = 24, int angular = 32) const;

 private:
  Vec3 tangential_jump(const Vec3& x) const;
  // Fourier coefficients (cos, sin) of the source on the circle of radius s.
  void source_modes(double s, std::vector<double>& a, std::vector<double>& b) const;
  // int_{R - ell}^{r} of (s/R)^{1-k} f_k, (s/R)^{1+k} f_k and s f_0.
  void radial_integrals(double r, std::vector<double>& J1a, std::vector<double>& J1b, std::vector<double>& J2a,
                        std::vector<double>& J2b, double& K0) const;

  TestField phi_F_;
  RigidMotion phi_S_;
  BodyShape shape_;
  RigidPose pose_;
  double delta_ = 0.0, vartheta_ = 0.0, width_ = 0.0, ell_ = 0.0, R_ = 0.0;
  int K_ = 64;    // angular samples
  int kmax_ = 0;  // highest Fourier mode
  std::vector<double> Ca_, Cb_;  // Neumann constants per mode
  // radial panels over the layer with Gauss nodes and the sampled integrands
  std::vector<double> edges_;
  std::vector<std::vector<double>> nodes_, weights_;
  std::vector<std::vector<std::vector<double>>> g1a_, g1b_, g2a_, g2b_;
  std::vector<std::vector<double>> g0_;
  // integrals from the layer start to each panel edge
  std::vector<std::vector<double>> cum1a_, cum1b_, cum2a_, cum2b_;
  std::vector<double> cum0_;
};

/// Checks phi_F . nu = phi_S . nu on the body surface (IncompatiblePair).
void check_compatible(const TestField& phi_F, const RigidMotion& phi_S, const BodyShape& shape, const RigidPose& pose,
                      double tol = 1e-10);

/// Reference pair used by the audits: phi_S rigid, phi_F = cutoff times
/// (phi_S + tangential polynomial) vanishing near the walls.
BlendedTestFunction reference_test_function(const Simulation& sim, const RigidPose& pose, double delta,
                                            double vartheta);

struct WeakResidual {
  double value = 0.0;  // signed defect
  double scale = 0.0;  // sum of |terms|
  std::vector<std::pair<std::string, double>> terms;
  double relative() const { return scale > 0.0 ? std::abs(value) / scale : 0.0; }
};

/// Every term of the discrete momentum balance between two committed states
/// tested against phi (time derivative, convection and eps coupling,
/// viscosity, wall and interface friction, penalization, forcing, pressure).
WeakResidual weak_residual(const Simulation& sim, const CoupledState& before, const CoupledState& after,
                           const TestField& phi);

struct PenalizationMetrics {
  double r_delta = 0.0;    // (int_0^T int chi |u - P_S u|^2)^{1/2}
  double slip_jump = 0.0;  // time average of the interface tangential jump
};
PenalizationMetrics penalization_metrics(const RunSummary& run);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double stderr_slope = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 95 %
  int first = 0;                       // tail start index
  int count = 0;
  bool confirmed() const { return count >= 2 && r2 >= 0.98; }
};
/// Least squares on (log x, log y) over all points.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);
/// Same over the longest tail (ordered toward the limit, at least min_points)
/// whose local slopes stay within `spread` of the tail fit.
SlopeFit fit_tail(const std::vector<double>& x, const std::vector<double>& y, int min_points = 3, double spread = 0.25);

struct Extrapolation {
  double limit = 0.0;
  double error = 0.0;
  double order = 0.0;
  bool ok = false;
};
/// y(x) = y0 + C x^s fitted through three points ordered toward x -> 0.
Extrapolation richardson(const std::vector<double>& x, const std::vector<double>& y);

struct SweepEntry {
  double value = 0.0;
  std::string config_text;
  bool ok = false;
  std::string error;
  double r_delta = 0.0;
  double slip_jump = 0.0;
  double energy_slack_max = 0.0;
  double weak_residual = 0.0;
  double E0 = 0.0;
  double forcing_work = 0.0;  // int |P_force| dt
  double penal_bound_ratio = 0.0;  // (r_delta^2 / delta) / (E0 + int P_force dt)
  double kinetic_end = 0.0;
  int steps = 0;
  DensityField rho_end;
};

struct SweepReport {
  std::string parameter;
  std::vector<SweepEntry> entries;
  std::vector<std::pair<std::string, SlopeFit>> slopes;
  Extrapolation slip_limit;  // delta sweeps only
  bool has_slip_limit = false;
};

/// One run per value, concurrently on `threads` workers. A failed run is
/// recorded with its message.
SweepReport run_sweep(const SimulationConfig& base, const std::string& parameter, const std::vector<double>& values,
                      int threads = 1, const std::string& out_dir = "");

void write_rates_csv(const SweepReport& report, const std::string& path);
void write_sweep_json(const SweepReport& report, const std::string& path);

/// L1 distance of two densities on the same grid.
double density_l1(const DensityField& a, const DensityField& b);

}  // namespace slipfsi
