#include "slipfsi/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "slipfsi/error.hpp"

namespace slipfsi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double to_real(const std::string& key, const std::string& w) {
  char* end = nullptr;
  const double v = std::strtod(w.c_str(), &end);
  if (w.empty() || *end != '\0' || !std::isfinite(v))
    throw Error(ErrorCode::TypeMismatch, key + ": expected a number, got '" + w + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& w) {
  char* end = nullptr;
  const long long v = std::strtoll(w.c_str(), &end, 10);
  if (w.empty() || *end != '\0') throw Error(ErrorCode::TypeMismatch, key + ": expected an integer, got '" + w + "'");
  return v;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vec3 to_vec(const std::string& key, const std::string& text) {
  const auto w = words(text);
  if (w.empty() || w.size() > 3) throw Error(ErrorCode::TypeMismatch, key + ": expected 1 to 3 numbers");
  Vec3 v = Vec3::Zero();
  for (std::size_t i = 0; i < w.size(); ++i) v[i] = to_real(key, w[i]);
  return v;
}

std::string vec_str(const Vec3& v, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + num(v[i]);
  return s;
}

struct Entry {
  ConfigKey key;
  std::function<void(SimulationConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const SimulationConfig&)> get;
};

#define REAL(sec, field, def, doc)                                                                  \
  Entry {                                                                                           \
    {sec, #field, "real", def, doc},                                                                \
        [](SimulationConfig& c, const std::string& k, const std::string& v) { c.field = to_real(k, v); }, \
        [](const SimulationConfig& c) { return num(c.field); }                                       \
  }
#define INT(sec, field, def, doc)                                                                              \
  Entry {                                                                                                      \
    {sec, #field, "int", def, doc},                                                                            \
        [](SimulationConfig& c, const std::string& k, const std::string& v) {                                 \
          c.field = static_cast<decltype(c.field)>(to_integer(k, v));                                          \
        },                                                                                                     \
        [](const SimulationConfig& c) { return std::to_string(c.field); }                                      \
  }
#define VEC(sec, field, def, doc)                                                                  \
  Entry {                                                                                          \
    {sec, #field, "vector", def, doc},                                                             \
        [](SimulationConfig& c, const std::string& k, const std::string& v) { c.field = to_vec(k, v); }, \
        [](const SimulationConfig& c) { return vec_str(c.field, 3); }                               \
  }
#define FIELD(sec, field, def, doc)                                                                           \
  Entry {                                                                                                     \
    {sec, #field, "field", def, doc},                                                                         \
        [](SimulationConfig& c, const std::string&, const std::string& v) { c.field = FieldSpec::parse(v); }, \
        [](const SimulationConfig& c) { return c.field.str(); }                                                \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      INT("domain", dimension, "2", "spatial dimension (2 or 3)"),
      VEC("domain", extents, "1 1", "box side lengths"),
      INT("domain", grid, "64", "density cells per axis"),
      Entry{{"body", "shape", "shape", "disc", "disc, ellipse, sphere or ellipsoid"},
            [](SimulationConfig& c, const std::string& k, const std::string& v) {
              try {
                c.shape = parse_shape_kind(trim(v));
              } catch (const Error&) {
                throw Error(ErrorCode::TypeMismatch, k + ": unknown shape '" + v + "'");
              }
            },
            [](const SimulationConfig& c) { return to_string(c.shape); }},
      VEC("body", semi_axes, "0.2 0.2", "semi-axes (a disc or sphere uses the first)"),
      VEC("body", center0, "0.5 0.5", "initial center of mass"),
      VEC("body", orientation0, "0", "initial rotation (angle in 2D, rotation vector in 3D)"),
      VEC("body", ell0, "0 0", "initial linear velocity"),
      VEC("body", omega0, "0", "initial angular velocity (z component in 2D)"),
      FIELD("body", rho_S0, "const 1", "body density"),
      REAL("body", sigma, "0.05", "safety distance"),
      FIELD("fluid", rho_F0, "const 1", "initial fluid density"),
      FIELD("fluid", u0, "zero", "initial velocity"),
      REAL("fluid", gamma, nullptr, "adiabatic exponent"),
      REAL("fluid", beta, nullptr, "artificial pressure exponent"),
      REAL("fluid", a_F, nullptr, "pressure coefficient"),
      REAL("fluid", mu_F, nullptr, "shear viscosity"),
      REAL("fluid", lambda_F, nullptr, "bulk viscosity"),
      REAL("fluid", alpha, nullptr, "slip friction coefficient"),
      REAL("approximation", delta, nullptr, "penalization and artificial pressure parameter"),
      REAL("approximation", epsilon, nullptr, "density diffusion"),
      REAL("approximation", vartheta, "1.5", "blending exponent of test functions"),
      INT("approximation", N, "10", "modes per axis and component"),
      INT("approximation", points_per_cell, "3", "Gauss points per cell and axis"),
      REAL("approximation", indicator_width, "0", "body indicator ramp half-width (0: 1.5 cells)"),
      REAL("time", dt, "0.001", "time step"),
      REAL("time", t_end, "0.2", "final time"),
      FIELD("forcing", g_F, "zero", "fluid body force"),
      FIELD("forcing", g_S, "zero", "body force on the solid"),
      REAL("solver", picard_tol, "1e-10", "relative Picard increment tolerance"),
      INT("solver", picard_maxiter, "50", "Picard iteration cap"),
      REAL("solver", ode_tol, "1e-12", "relative linear residual tolerance"),
      REAL("solver", cfl, "0.5", "max |u| dt / h"),
      INT("output", snapshot_every, "50", "steps between field snapshots"),
      Entry{{"output", "seed", "u64", "0", "seed for randomized diagnostics"},
            [](SimulationConfig& c, const std::string& k, const std::string& v) {
              char* end = nullptr;
              const std::string t = trim(v);
              c.seed = std::strtoull(t.c_str(), &end, 10);
              if (t.empty() || *end != '\0' || t[0] == '-')
                throw Error(ErrorCode::TypeMismatch, k + ": expected an unsigned integer");
            },
            [](const SimulationConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

#undef REAL
#undef INT
#undef VEC
#undef FIELD

std::string full_name(const ConfigKey& k) { return std::string(k.section) + "." + k.name; }

const Entry& find_entry(const std::string& key) {
  const Entry* hit = nullptr;
  for (const Entry& e : entries()) {
    if (full_name(e.key) == key) return e;
    if (key == e.key.name) hit = &e;
  }
  if (!hit) throw Error(ErrorCode::TypeMismatch, "unknown key '" + key + "'");
  return *hit;
}

void fail(const std::string& what, double value) {
  throw Error(ErrorCode::InvariantViolation, what + " (got " + num(value) + ")");
}

std::size_t expected_args(const std::string& kind, int dim, bool& known) {
  known = true;
  if (kind == "zero") return 0;
  if (kind == "const") return 1;  // scalar; vectors checked separately
  if (kind == "cellular" || kind == "shear") return 1;
  if (kind == "cos") return 2 + dim;
  if (kind == "gauss") return 3 + dim;
  if (kind == "linear") return 1 + dim;
  if (kind == "rigid") return dim == 2 ? 3 : 6;
  if (kind == "mode") return 2 + dim;
  known = false;
  return 0;
}

void check_field(const char* name, const FieldSpec& f, int dim, bool vector, const std::set<std::string>& kinds) {
  if (!kinds.count(f.kind)) throw Error(ErrorCode::InvariantViolation, std::string(name) + ": unsupported kind '" + f.kind + "'");
  bool known = false;
  std::size_t n = expected_args(f.kind, dim, known);
  if (vector && f.kind == "const") n = dim;
  if (f.args.size() != n)
    throw Error(ErrorCode::InvariantViolation,
                std::string(name) + ": '" + f.kind + "' takes " + std::to_string(n) + " numbers in " +
                    std::to_string(dim) + "D");
}

}  // namespace

FieldSpec FieldSpec::parse(const std::string& text) {
  const auto w = words(text);
  if (w.empty()) throw Error(ErrorCode::TypeMismatch, "empty field specification");
  FieldSpec f;
  f.kind = w[0];
  for (std::size_t i = 1; i < w.size(); ++i) f.args.push_back(to_real(f.kind, w[i]));
  return f;
}

std::string FieldSpec::str() const {
  std::string s = kind;
  for (double a : args) s += " " + num(a);
  return s;
}

Domain SimulationConfig::domain() const {
  return Domain::box(dimension, extents, {grid, dimension > 1 ? grid : 1, dimension > 2 ? grid : 1});
}

BodyShape SimulationConfig::body_shape() const {
  switch (shape) {
    case ShapeKind::Disc: return BodyShape::disc(semi_axes[0]);
    case ShapeKind::Ellipse: return BodyShape::ellipse(semi_axes[0], semi_axes[1]);
    case ShapeKind::Sphere: return BodyShape::sphere(semi_axes[0]);
    case ShapeKind::Ellipsoid: return BodyShape::ellipsoid(semi_axes[0], semi_axes[1], semi_axes[2]);
  }
  throw Error(ErrorCode::UnsupportedShape, "unknown shape");
}

RigidPose SimulationConfig::pose0() const {
  if (dimension == 2) return RigidPose::planar(center0, orientation0[0]);
  RigidPose p;
  p.h = center0;
  const double a = orientation0.norm();
  if (a > 0.0) p.R = Eigen::AngleAxisd(a, orientation0 / a).toRotationMatrix();
  return p;
}

double SimulationConfig::chi_width() const {
  return indicator_width > 0.0 ? indicator_width : 1.5 * extents.head(dimension).minCoeff() / grid;
}

int SimulationConfig::steps() const { return static_cast<int>(std::ceil(t_end / dt - 1e-9)); }

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Entry& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void validate_config(const SimulationConfig& c) {
  if (c.dimension != 2 && c.dimension != 3) fail("dimension must be 2 or 3", c.dimension);
  for (int a = 0; a < c.dimension; ++a)
    if (!(c.extents[a] > 0.0)) fail("domain extents must be positive", c.extents[a]);
  if (c.grid < 4) fail("grid must have at least 4 cells per axis", c.grid);
  if (c.gamma <= 1.5) fail("gamma must exceed 3/2", c.gamma);
  if (c.beta < std::max(8.0, c.gamma)) fail("beta must be at least max(8, gamma)", c.beta);
  if (c.a_F < 0.0) fail("a_F must be nonnegative", c.a_F);
  if (c.mu_F <= 0.0) fail("mu_F must be positive", c.mu_F);
  if (3.0 * c.lambda_F + 2.0 * c.mu_F < 0.0) fail("3 lambda_F + 2 mu_F must be nonnegative", 3 * c.lambda_F + 2 * c.mu_F);
  if (c.alpha < 0.0) fail("alpha must be nonnegative", c.alpha);
  if (c.delta <= 0.0) fail("delta must be positive", c.delta);
  if (c.epsilon <= 0.0) fail("epsilon must be positive", c.epsilon);
  if (!(c.vartheta > 1.0 && c.vartheta < 2.0)) fail("vartheta must lie strictly inside (1, 2)", c.vartheta);
  if (c.N < 1) fail("N must be at least 1", c.N);
  if (c.points_per_cell < 1) fail("points_per_cell must be at least 1", c.points_per_cell);
  if (c.indicator_width < 0.0) fail("indicator_width must be nonnegative", c.indicator_width);
  if (!(c.dt > 0.0)) fail("dt must be positive", c.dt);
  if (!(c.t_end > 0.0)) fail("t_end must be positive", c.t_end);
  if (!(c.sigma > 0.0)) fail("sigma must be positive", c.sigma);
  if (!(c.picard_tol > 0.0)) fail("picard_tol must be positive", c.picard_tol);
  if (c.picard_maxiter < 1) fail("picard_maxiter must be at least 1", c.picard_maxiter);
  if (!(c.ode_tol > 0.0)) fail("ode_tol must be positive", c.ode_tol);
  if (!(c.cfl > 0.0)) fail("cfl must be positive", c.cfl);
  if (c.snapshot_every < 1) fail("snapshot_every must be at least 1", c.snapshot_every);

  const BodyShape s = c.body_shape();
  if (s.dim() != c.dimension)
    throw Error(ErrorCode::InvariantViolation, "shape " + to_string(c.shape) + " does not match dimension");
  for (int a = 0; a < c.dimension; ++a)
    if (!(s.semi_axes[a] > 0.0)) fail("semi_axes must be positive", s.semi_axes[a]);

  const int d = c.dimension;
  check_field("rho_F0", c.rho_F0, d, false, {"const", "cos", "gauss"});
  check_field("rho_S0", c.rho_S0, d, false, {"const", "linear"});
  check_field("u0", c.u0, d, true, {"zero", "const", "cellular", "shear", "rigid", "mode"});
  check_field("g_F", c.g_F, d, true, {"zero", "const", "shear", "cellular"});
  check_field("g_S", c.g_S, d, true, {"zero", "const", "shear", "cellular"});
  if (c.rho_F0.kind == "const" && !(c.rho_F0.args[0] >= 0.0)) fail("rho_F0 must be nonnegative", c.rho_F0.args[0]);
  if (c.rho_S0.kind == "const" && !(c.rho_S0.args[0] > 0.0)) fail("rho_S0 must be positive", c.rho_S0.args[0]);

  double dist = 0.0;
  try {
    dist = wall_distance(s, c.pose0(), c.domain());
  } catch (const Error&) {
    throw Error(ErrorCode::InvariantViolation, "initial body must lie inside the domain");
  }
  if (!(dist > 2.0 * c.sigma)) fail("initial wall distance must exceed 2 sigma = " + num(2 * c.sigma), dist);
}

SimulationConfig parse_config(const std::string& text) {
  SimulationConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::TypeMismatch, "line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::TypeMismatch, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    const Entry& e = find_entry(full);
    if (!section.empty() && section != e.key.section)
      throw Error(ErrorCode::TypeMismatch, "key '" + key + "' does not belong to section [" + section + "]");
    if (value.empty()) throw Error(ErrorCode::TypeMismatch, full_name(e.key) + ": empty value");
    e.set(c, full_name(e.key), value);
    seen.insert(full_name(e.key));
  }
  for (const Entry& e : entries())
    if (!e.key.default_value && !seen.count(full_name(e.key)))
      throw Error(ErrorCode::MissingKey, "required key " + full_name(e.key) + " is missing");
  if (c.dimension == 2) {
    c.extents[2] = 0.0;
    c.center0[2] = 0.0;
    c.ell0[2] = 0.0;
    c.semi_axes[2] = 0.0;
    // planar rotation and spin are the single given number
    if (c.omega0[1] == 0.0 && c.omega0[2] == 0.0) c.omega0 = Vec3(0, 0, c.omega0[0]);
    if (c.orientation0[1] == 0.0 && c.orientation0[2] == 0.0) c.orientation0 = Vec3(c.orientation0[0], 0, 0);
  }
  if (c.shape == ShapeKind::Disc) c.semi_axes[1] = c.semi_axes[0];
  if (c.shape == ShapeKind::Sphere) c.semi_axes = Vec3::Constant(c.semi_axes[0]);
  validate_config(c);
  return c;
}

SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const SimulationConfig& c) {
  std::string out, section;
  for (const Entry& e : entries()) {
    if (section != e.key.section) {
      section = e.key.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    std::string v = e.get(c);
    // planar runs store spin and angle as a single number
    if (c.dimension == 2 && (std::string(e.key.name) == "omega0")) v = num(c.omega0[2]);
    if (c.dimension == 2 && (std::string(e.key.name) == "orientation0")) v = num(c.orientation0[0]);
    out += std::string(e.key.name) + " = " + v + "\n";
  }
  return out;
}

SimulationConfig with_override(const SimulationConfig& c, const std::string& key, const std::string& value) {
  std::string text = serialize_config(c);
  const Entry& e = find_entry(key);
  const std::string prefix = std::string(e.key.name) + " = ";
  std::istringstream in(text);
  std::string out, line, section;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '[') section = line.substr(1, line.size() - 2);
    if (section == e.key.section && line.rfind(prefix, 0) == 0) line = prefix + value;
    out += line + "\n";
  }
  return parse_config(out);
}

double eval_scalar(const FieldSpec& f, const Vec3& x, const Vec3& L, int dim) {
  using std::numbers::pi;
  const auto& a = f.args;
  if (f.kind == "const") return a[0];
  if (f.kind == "cos") {
    double p = 1.0;
    for (int i = 0; i < dim; ++i) p *= std::cos(a[2 + i] * pi * x[i] / L[i]);
    return a[0] + a[1] * p;
  }
  if (f.kind == "gauss") {
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) r2 += (x[i] - a[2 + i]) * (x[i] - a[2 + i]);
    const double w = a[2 + dim];
    return a[0] + a[1] * std::exp(-r2 / (w * w));
  }
  if (f.kind == "linear") {
    double v = a[0];
    for (int i = 0; i < dim; ++i) v += a[1 + i] * x[i];
    return v;
  }
  throw Error(ErrorCode::InvariantViolation, "unsupported scalar field '" + f.kind + "'");
}

Vec3 eval_vector(const FieldSpec& f, const Vec3& x, const Vec3& L, int dim, const Vec3& center) {
  using std::numbers::pi;
  const auto& a = f.args;
  Vec3 v = Vec3::Zero();
  if (f.kind == "zero") return v;
  if (f.kind == "const") {
    for (int i = 0; i < dim; ++i) v[i] = a[i];
    return v;
  }
  if (f.kind == "cellular") {
    const double sx = std::sin(pi * x[0] / L[0]), cx = std::cos(pi * x[0] / L[0]);
    const double sy = std::sin(pi * x[1] / L[1]), cy = std::cos(pi * x[1] / L[1]);
    v[0] = a[0] * sx * cy;
    v[1] = -a[0] * L[1] / L[0] * cx * sy;
    return v;
  }
  if (f.kind == "shear") {
    v[0] = a[0] * std::cos(pi * x[1] / L[1]);
    return v;
  }
  if (f.kind == "rigid") {
    if (dim == 2) return Vec3(a[0], a[1], 0) + Vec3(0, 0, a[2]).cross(x - center);
    return Vec3(a[0], a[1], a[2]) + Vec3(a[3], a[4], a[5]).cross(x - center);
  }
  throw Error(ErrorCode::InvariantViolation, "unsupported vector field '" + f.kind + "'");
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

bool Snapshot::operator==(const Snapshot& o) const {
  auto same = [](double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; };
  if (step != o.step || !same(t, o.t) || rho.grid.n != o.rho.grid.n || rho.grid.dim != o.rho.grid.dim) return false;
  if (rho.rho.v.size() != o.rho.rho.v.size() || g.size() != o.g.size()) return false;
  for (std::size_t i = 0; i < rho.rho.v.size(); ++i)
    if (!same(rho.rho.v[i], o.rho.rho.v[i])) return false;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (!same(g[i], o.g[i])) return false;
  for (int i = 0; i < 3; ++i) {
    if (!same(rho.grid.L[i], o.rho.grid.L[i]) || !same(pose.h[i], o.pose.h[i]) || !same(motion.V[i], o.motion.V[i]) ||
        !same(motion.r[i], o.motion.r[i]) || !same(motion.a[i], o.motion.a[i]))
      return false;
    for (int j = 0; j < 3; ++j)
      if (!same(pose.R(i, j), o.pose.R(i, j))) return false;
  }
  return true;
}

void write_snapshot(const Snapshot& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  const Grid& g = s.rho.grid;
  out << "slipfsi-snapshot " << kSnapshotSchema << " step " << s.step << " dim " << g.dim << " grid " << g.n[0] << " "
      << g.n[1] << " " << g.n[2] << " ncoef " << s.g.size() << "\n";
  out << "t " << hexfloat(s.t) << "\n";
  out << "L " << hexfloat(g.L[0]) << " " << hexfloat(g.L[1]) << " " << hexfloat(g.L[2]) << "\n";
  auto vec = [&](const char* tag, const Vec3& v) {
    out << tag << " " << hexfloat(v[0]) << " " << hexfloat(v[1]) << " " << hexfloat(v[2]) << "\n";
  };
  vec("h", s.pose.h);
  for (int i = 0; i < 3; ++i) vec("R", s.pose.R.row(i).transpose());
  vec("V", s.motion.V);
  vec("r", s.motion.r);
  vec("a", s.motion.a);
  for (double v : s.rho.rho.v) out << "rho " << hexfloat(v) << "\n";
  for (Eigen::Index i = 0; i < s.g.size(); ++i) out << "g " << hexfloat(s.g[i]) << "\n";
  out << "end\n";
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  auto bad = [&](const std::string& why) { return Error(ErrorCode::IoFailure, path + ": " + why); };
  std::string line;
  if (!std::getline(in, line)) throw bad("empty file");
  std::istringstream hdr(line);
  std::string magic, w_step, w_dim, w_grid, w_ncoef;
  int schema = 0;
  Snapshot s;
  Grid g;
  long ncoef = 0;
  hdr >> magic >> schema;
  if (magic != "slipfsi-snapshot") throw bad("not a snapshot");
  if (schema != kSnapshotSchema)
    throw Error(ErrorCode::SchemaVersionMismatch, path + ": schema " + std::to_string(schema) + ", expected " +
                                                      std::to_string(kSnapshotSchema));
  hdr >> w_step >> s.step >> w_dim >> g.dim >> w_grid >> g.n[0] >> g.n[1] >> g.n[2] >> w_ncoef >> ncoef;
  if (!hdr || w_step != "step" || w_grid != "grid" || w_ncoef != "ncoef" || g.n[0] < 1 || g.n[1] < 1 || g.n[2] < 1 ||
      ncoef < 0)
    throw bad("malformed header");

  auto next = [&](const char* tag, int count) {
    std::vector<double> v;
    if (!std::getline(in, line)) throw bad(std::string("truncated before '") + tag + "'");
    std::istringstream ls(line);
    std::string t;
    ls >> t;
    if (t != tag) throw bad(std::string("expected '") + tag + "', found '" + t + "'");
    for (int i = 0; i < count; ++i) {
      std::string w;
      if (!(ls >> w)) throw bad(std::string("short '") + tag + "' line");
      char* end = nullptr;
      v.push_back(std::strtod(w.c_str(), &end));
      if (*end != '\0') throw bad("bad number '" + w + "'");
    }
    return v;
  };
  auto vec = [&](const char* tag) {
    const auto v = next(tag, 3);
    return Vec3(v[0], v[1], v[2]);
  };
  s.t = next("t", 1)[0];
  g.L = vec("L");
  s.pose.h = vec("h");
  for (int i = 0; i < 3; ++i) s.pose.R.row(i) = vec("R").transpose();
  s.motion.V = vec("V");
  s.motion.r = vec("r");
  s.motion.a = vec("a");
  s.rho = DensityField{g, g.zeros(), s.t};
  for (double& v : s.rho.rho.v) v = next("rho", 1)[0];
  s.g.resize(ncoef);
  for (long i = 0; i < ncoef; ++i) s.g[i] = next("g", 1)[0];
  if (!std::getline(in, line) || trim(line) != "end") throw bad("missing end marker");
  return s;
}

}  // namespace slipfsi
