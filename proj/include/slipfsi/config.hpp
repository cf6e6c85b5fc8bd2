#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slipfsi/continuity.hpp"
#include "slipfsi/geometry.hpp"
#include "slipfsi/rigid_body.hpp"

namespace slipfsi {

/// Named field recipe, e.g. "cos 1 0.2 1 0" or "rigid 0 0 0.5".
struct FieldSpec {
  std::string kind = "zero";
  std::vector<double> args;

  static FieldSpec parse(const std::string& text);
  std::string str() const;
  bool operator==(const FieldSpec&) const = default;
};

struct SimulationConfig {
  // [domain]
  int dimension = 2;
  Vec3 extents = Vec3(1, 1, 0);
  int grid = 64;  // cells per axis

  // [body]
  ShapeKind shape = ShapeKind::Disc;
  Vec3 semi_axes = Vec3(0.2, 0.2, 0);
  Vec3 center0 = Vec3(0.5, 0.5, 0);
  Vec3 orientation0 = Vec3::Zero();  // rotation vector (z angle in 2D)
  Vec3 ell0 = Vec3::Zero();
  Vec3 omega0 = Vec3::Zero();
  FieldSpec rho_S0{"const", {1.0}};
  double sigma = 0.05;

  // [fluid]
  FieldSpec rho_F0{"const", {1.0}};
  FieldSpec u0{"zero", {}};
  double gamma = 0.0;
  double beta = 0.0;
  double a_F = 0.0;
  double mu_F = 0.0;
  double lambda_F = 0.0;
  double alpha = 0.0;

  // [approximation]
  double delta = 0.0;
  double epsilon = 0.0;
  double vartheta = 1.5;
  int N = 10;  // modes per axis and component
  int points_per_cell = 3;
  double indicator_width = 0.0;  // 0: one grid cell

  // [time]
  double dt = 1e-3;
  double t_end = 0.2;

  // [forcing]
  FieldSpec g_F{"zero", {}};
  FieldSpec g_S{"zero", {}};

  // [solver]
  double picard_tol = 1e-10;
  int picard_maxiter = 50;
  double ode_tol = 1e-12;
  double cfl = 0.5;

  // [output]
  int snapshot_every = 50;
  std::uint64_t seed = 0;

  Domain domain() const;
  BodyShape body_shape() const;
  RigidPose pose0() const;
  Grid grid_spec() const { return Grid::from_domain(domain()); }
  double chi_width() const;
  int steps() const;

  bool operator==(const SimulationConfig&) const = default;
};

/// One row of the documented key table.
struct ConfigKey {
  const char* section;
  const char* name;
  const char* type;
  const char* default_value;  // nullptr when required
  const char* meaning;
};

const std::vector<ConfigKey>& config_keys();

/// Parses "[section]" headers and "key = value" lines ('#' starts a comment)
/// and validates the result.
SimulationConfig parse_config(const std::string& text);
SimulationConfig load_config(const std::string& path);
std::string serialize_config(const SimulationConfig& c);
/// Throws InvariantViolation naming the first violated constraint.
void validate_config(const SimulationConfig& c);

/// Applies "section.key=value" style overrides (used by sweeps and seeds).
SimulationConfig with_override(const SimulationConfig& c, const std::string& key, const std::string& value);

struct Snapshot {
  int step = 0;
  double t = 0.0;
  DensityField rho;
  Eigen::VectorXd g;
  RigidPose pose;
  RigidMotion motion;
  bool operator==(const Snapshot& o) const;
};

inline constexpr int kSnapshotSchema = 1;

void write_snapshot(const Snapshot& s, const std::string& path);
Snapshot read_snapshot(const std::string& path);

/// Scalar field recipes: "const v", "cos base amp kx ky [kz]" (cosines of
/// k pi x / L), "gauss base amp cx cy [cz] width", "linear c gx gy [gz]".
double eval_scalar(const FieldSpec& f, const Vec3& x, const Vec3& extents, int dim);
/// Vector field recipes: "zero", "const vx vy [vz]", "cellular A",
/// "shear A", "rigid Vx Vy w" (3D: "rigid Vx Vy Vz wx wy wz") about the
/// body center. "mode" is resolved by the caller.
Vec3 eval_vector(const FieldSpec& f, const Vec3& x, const Vec3& extents, int dim, const Vec3& center);

/// Lossless text form of a double.
std::string hexfloat(double v);

}  // namespace slipfsi
