#include "qclab/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "qclab/beltrami_solver.hpp"
#include "qclab/dimension.hpp"
#include "qclab/gauges.hpp"
#include "qclab/grid_io.hpp"
#include "qclab/walk_on_spheres.hpp"

namespace fs = std::filesystem;

namespace qclab {

// ---- scenarios ----

double smooth_cutoff(double r, double r_in, double r_out) {
  if (r <= r_in) return 1.0;
  if (r >= r_out) return 0.0;
  const double t = (r - r_in) / (r_out - r_in);
  auto f = [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; };
  return f(1.0 - t) / (f(1.0 - t) + f(t));
}

double HeadlineMatrix::weight(Point z) const {
  double w = smooth_cutoff(std::abs(z), r_in, r_out);
  if (pole_radius > 0) w *= 1.0 - smooth_cutoff(std::abs(z - pole), pole_radius, 2.0 * pole_radius);
  return w;
}

Mat2 HeadlineMatrix::operator()(Point z) const { return interpolate_det1(a, weight(z)); }

Complex HeadlineMatrix::mu(Point z) const { return beltrami_pair((*this)(z)).first; }

ClosedForm kchi_closed_form(double k) {
  ClosedForm cf;
  cf.name = "kchi";
  cf.mu = [k](Point z) { return std::abs(z) < 1.0 ? Complex(k) : Complex(0.0); };
  cf.exact = [k](Point z) { return std::abs(z) <= 1.0 ? z + k * std::conj(z) : z + k / z; };
  return cf;
}

ClosedForm radial_closed_form(double K) {
  const double kk = (K - 1.0) / (K + 1.0);
  ClosedForm cf;
  cf.name = "radial";
  cf.mu = [kk](Point z) {
    const double r = std::abs(z);
    return r < 1.0 && r > 0 ? -kk * z / std::conj(z) : Complex(0.0);
  };
  cf.exact = [K](Point z) {
    const double r = std::abs(z);
    if (r == 0) return Point(0.0);
    return r < 1.0 ? z * std::pow(r, 1.0 / K - 1.0) : z;
  };
  return cf;
}

double closed_form_error(const QCMap& phi, const ClosedForm& cf) {
  const Grid2D& g = phi.grid;
  const Point c = 0.5 * (g.origin + g.upper());
  const double q = 0.25 * (g.upper().real() - g.origin.real());
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point z = g.node(k);
    if (std::abs(z.real() - c.real()) > q || std::abs(z.imag() - c.imag()) > q) continue;
    err = std::max(err, std::abs(phi.forward.values[k] - cf.exact(z)));
  }
  return err;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

HeadlineResult run_headline(const HeadlineParams& p) {
  HeadlineResult res;
  auto t0 = std::chrono::steady_clock::now();
  res.source = make_disk(0.0, 1.0, p.disk_vertices);
  const BoundaryPartition partition = boundary_partition(res.source, p.arcs);
  const HeadlineMatrix m = p.matrix;
  res.phi = principal_solution(
      sample_beltrami(Grid2D::box(p.box_side, p.box_n), [&](Point z) { return m.mu(z); }, 2, Sampling::LowPass));
  res.image = map_domain(res.source, res.phi, partition);
  res.seconds_map = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const MatrixField a = MatrixField::from_function(Grid2D::covering(res.source.lo(), res.source.hi(), p.h, 2), m);
  res.pde = elliptic_measure(a, res.source, p.pole, partition, p.h);
  res.seconds_pde = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  res.wos = harmonic_measure_wos(res.image.domain, res.phi(p.pole), res.image.partition, p.walks, p.seed);
  res.seconds_wos = seconds_since(t0);
  res.comparison = pushforward_compare(res.pde, res.phi, res.wos, p.tolerance);
  return res;
}

// ---- configuration ----

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "field '" + field + "': " + what);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "kind", "out", "seed", "h", "samples", "domain", "domain.radius", "domain.vertices", "domain.side",
      "domain.per_side", "snowflake.d", "snowflake.levels", "cantor.level", "matrix", "matrix.a11", "matrix.a12",
      "matrix.a21", "matrix.a22", "matrix.r_in", "matrix.r_out", "matrix.pole_radius", "beltrami", "beltrami.k",
      "beltrami.K", "box.side", "box.n", "pole", "arcs", "tolerance", "pairs", "duality.C", "radial.C", "c0", "r0",
      "centers", "radii", "cells", "refine", "bourgain.h", "bourgain.radii", "bourgain.floor", "set", "points",
      "expected", "gauge.rho", "gauge.C", "gauge.K", "gauge.r0", "gauge.kmin", "gauge.kmax", "gauge.alpha_gap",
      "gauge.T"};
  return keys;
}

void parse_into(std::istream& is, const std::string& origin, const std::string& base_dir, bool allow_include,
                std::map<std::string, std::string>& out) {
  std::map<std::string, std::string> own;
  std::map<std::string, std::string> included;
  bool seen_include = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.rfind("include", 0) == 0 && (line.size() == 7 || line[7] == ' ' || line[7] == '\t')) {
      if (!allow_include) throw Error(ErrorCode::ConfigError, where + ": nested include is not allowed");
      if (seen_include) throw Error(ErrorCode::ConfigError, where + ": only one include directive is allowed");
      seen_include = true;
      const fs::path inc = fs::path(base_dir) / trim(line.substr(7));
      std::ifstream f(inc);
      if (!f) throw Error(ErrorCode::ConfigError, where + ": cannot open include " + inc.string());
      parse_into(f, inc.string(), inc.parent_path().string(), false, included);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) throw Error(ErrorCode::ConfigError, where + ": unknown key '" + key + "'");
    if (own.count(key)) throw Error(ErrorCode::ConfigError, where + ": duplicate key '" + key + "'");
    own[key] = value;
  }
  for (auto& [k, v] : included) out[k] = v;
  for (auto& [k, v] : own) out[k] = v;
}

}  // namespace

std::string Config::str(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

std::string Config::str(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) config_error(key, "missing");
  return it->second;
}

double Config::num(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    config_error(key, "expected a number, got '" + it->second + "'");
  }
}

long long Config::integer(const std::string& key, long long fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    config_error(key, "expected an integer, got '" + it->second + "'");
  }
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(trim(cell)));
    } catch (const std::exception&) {
      config_error(key, "expected a comma-separated list of numbers, got '" + it->second + "'");
    }
  }
  if (out.empty()) config_error(key, "empty list");
  return out;
}

Point Config::point(const std::string& key, Point fallback) const {
  if (!has(key)) return fallback;
  const auto v = list(key, {});
  if (v.size() != 2) config_error(key, "expected x,y");
  return {v[0], v[1]};
}

std::string Config::echo() const {
  std::ostringstream os;
  for (const auto& [k, v] : values) os << k << " = " << v << '\n';
  return os.str();
}

std::string Config::hash() const { return sha256_hex(echo()); }

Config parse_config(std::istream& is, const std::string& origin, const std::string& base_dir) {
  Config c;
  c.path = origin;
  parse_into(is, origin, base_dir, true, c.values);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  return parse_config(f, path, fs::path(path).parent_path().string());
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"solve-beltrami", "measure-compare", "green-audit",
                                                 "cdc-audit",      "dimension-report", "gauge-table"};
  return kinds;
}

bool RunResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IOError, "sha256 failed");
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IOError, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return sha256_hex(ss.str());
}

// ---- running ----

namespace {

std::string fmt(double v, int digits = 10) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

Check make_check(const std::string& name, double value, const std::string& op, double threshold) {
  Check c{name, value, op, threshold, false};
  if (op == "<=")
    c.pass = value <= threshold;
  else if (op == ">=")
    c.pass = value >= threshold;
  else if (op == "<")
    c.pass = value < threshold;
  else if (op == ">")
    c.pass = value > threshold;
  else
    c.pass = value == threshold;
  return c;
}

class Bundle {
 public:
  Bundle(const Config& cfg, std::string dir) : cfg_(cfg), dir_(std::move(dir)) {
    hash_ = cfg.hash();
    seed_ = cfg.str("seed", "0");
  }

  const std::string& dir() const { return dir_; }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  std::map<std::string, std::string> flags() const { return {{"config_sha256", hash_}, {"seed", seed_}}; }

  /// Opens a text output whose first line ties it to the config.
  std::ofstream csv(const std::string& name) {
    files_.push_back(name);
    std::ofstream os(path(name));
    if (!os) throw Error(ErrorCode::IOError, "cannot write " + path(name));
    os.precision(17);
    os << "# config_sha256=" << hash_ << " seed=" << seed_ << '\n';
    return os;
  }

  void add_file(const std::string& name) { files_.push_back(name); }
  void check(const Check& c) { checks_.push_back(c); }
  const std::vector<Check>& checks() const { return checks_; }
  const std::vector<std::string>& files() const { return files_; }

  void finish() {
    {
      std::ofstream os(path("config.txt"));
      os << cfg_.echo();
    }
    {
      std::ofstream os(path("report.txt"));
      os << "# config_sha256=" << hash_ << " seed=" << seed_ << '\n';
      os << "kind " << cfg_.str("kind") << '\n';
      for (const auto& c : checks_)
        os << "check " << c.name << " value=" << fmt(c.value) << " op=" << c.op << " threshold=" << fmt(c.threshold)
           << " status=" << (c.pass ? "PASS" : "FAIL") << '\n';
    }
    files_.push_back("config.txt");
    files_.push_back("report.txt");
    std::sort(files_.begin(), files_.end());
    std::ofstream os(path("MANIFEST.sha256"));
    for (const auto& f : files_) os << sha256_file(path(f)) << "  " << f << '\n';
  }

 private:
  const Config& cfg_;
  std::string dir_, hash_, seed_;
  std::vector<std::string> files_;
  std::vector<Check> checks_;
};

DomainSpec build_domain(const Config& cfg) {
  const std::string d = cfg.str("domain", "disk");
  if (d == "disk") return make_disk(0.0, cfg.num("domain.radius", 1.0), static_cast<int>(cfg.integer("domain.vertices", 1024)));
  if (d == "punctured-disk")
    return make_punctured_disk(0.0, cfg.num("domain.radius", 1.0), static_cast<int>(cfg.integer("domain.vertices", 1024)));
  if (d == "square") return make_square(0.0, cfg.num("domain.side", 2.0), static_cast<int>(cfg.integer("domain.per_side", 64)));
  if (d == "snowflake") return make_snowflake(cfg.num("snowflake.d", std::log(4.0) / std::log(3.0)), static_cast<int>(cfg.integer("snowflake.levels", 4)));
  if (d == "cantor") return make_cantor_complement(static_cast<int>(cfg.integer("cantor.level", 3)));
  if (d.rfind("file:", 0) == 0) {
    const fs::path p = fs::path(cfg.path).parent_path() / d.substr(5);
    std::ifstream f(p);
    if (!f) config_error("domain", "cannot open " + p.string());
    return read_domain(f);
  }
  config_error("domain", "unknown domain '" + d + "'");
}

Mat2 constant_matrix(const Config& cfg, const Mat2& fallback) {
  Mat2 m;
  m << cfg.num("matrix.a11", fallback(0, 0)), cfg.num("matrix.a12", fallback(0, 1)), cfg.num("matrix.a21", fallback(1, 0)),
      cfg.num("matrix.a22", fallback(1, 1));
  return m;
}

HeadlineMatrix headline_matrix(const Config& cfg) {
  HeadlineMatrix m;
  m.a = constant_matrix(cfg, m.a);
  m.r_in = cfg.num("matrix.r_in", m.r_in);
  m.r_out = cfg.num("matrix.r_out", m.r_out);
  m.pole = cfg.point("pole", Point(0.25, 0.15));
  m.pole_radius = cfg.num("matrix.pole_radius", 0.0);
  return m;
}

/// The coefficient field as a function of z and a short identifier.
std::pair<std::function<Mat2(Point)>, std::string> build_matrix(const Config& cfg) {
  const std::string m = cfg.str("matrix", "identity");
  if (m == "identity") return {[](Point) { return Mat2::Identity().eval(); }, "identity"};
  if (m == "constant") {
    const Mat2 a = constant_matrix(cfg, Mat2::Identity());
    return {[a](Point) { return a; }, "constant"};
  }
  if (m == "headline") {
    const HeadlineMatrix h = headline_matrix(cfg);
    return {[h](Point z) { return h(z); }, "headline"};
  }
  if (m.rfind("file:", 0) == 0) {
    const fs::path p = fs::path(cfg.path).parent_path() / m.substr(5);
    auto field = std::make_shared<MatrixField>(read_matrix_field(p.string()));
    return {[field](Point z) { return field->eval(z); }, "file:" + p.filename().string()};
  }
  config_error("matrix", "unknown matrix '" + m + "'");
}

double grid_h(const Config& cfg, double fallback) {
  const double h = cfg.num("h", fallback);
  if (!(h >= std::ldexp(1.0, -12) && h <= std::ldexp(1.0, -4)))
    config_error("h", "value " + fmt(h) + " outside [2^-12, 2^-4]");
  return h;
}

std::uint64_t seed_of(const Config& cfg) {
  const long long s = cfg.integer("seed", 1);
  if (s < 0) config_error("seed", "must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

void run_solve_beltrami(const Config& cfg, Bundle& b) {
  const std::string which = cfg.str("beltrami", "matrix");
  const Grid2D box = Grid2D::box(cfg.num("box.side", 8.0), static_cast<int>(cfg.integer("box.n", 1024)));
  std::optional<ClosedForm> cf;
  std::function<Complex(Point)> mu;
  if (which == "kchi") {
    cf = kchi_closed_form(cfg.num("beltrami.k", 0.3));
  } else if (which == "radial") {
    cf = radial_closed_form(cfg.num("beltrami.K", 2.0));
  } else if (which == "matrix") {
    auto [a, id] = build_matrix(cfg);
    mu = [a](Point z) {
      const auto [m, n] = beltrami_pair(a(z));
      if (std::abs(n) > 1e-9)
        throw Error(ErrorCode::NotApplicable, "nu != 0: principal solutions cover symmetric det-1 fields only");
      return m;
    };
  } else {
    config_error("beltrami", "expected matrix, kchi or radial");
  }
  if (cf) mu = cf->mu;
  const BeltramiField bf = sample_beltrami(box, mu, 2, Sampling::LowPass);
  const QCMap phi = principal_solution(bf, 1e-10, 500);
  write_qcmap(phi, b.path("map.grid"), b.flags());
  b.add_file("map.grid");
  {
    auto os = b.csv("residuals.csv");
    os << "iteration,residual\n";
    for (std::size_t k = 0; k < phi.report.residual_history.size(); ++k)
      os << k << ',' << phi.report.residual_history[k] << '\n';
  }
  b.check(make_check("neumann_residual", phi.report.residual, "<=", 1e-10));
  b.check(make_check("coefficient_sup", bf.mu.values.empty() ? 0.0 : bf.sup_mu(), "<=", 1.0 - 1e-9));
  b.check(make_check("jacobian_positive_fraction", phi.positive_jacobian_fraction(), ">=", 0.999));
  if (cf) {
    const double tol = cfg.num("tolerance", cf->name == "kchi" ? 1e-3 : 5e-3);
    b.check(make_check("closed_form_sup_error", closed_form_error(phi, *cf), "<=", tol));
  }
}

void write_measure(Bundle& b, const std::string& name, const BoundaryMeasure& m) {
  auto os = b.csv(name);
  write_measure_csv(m, os);
}

void run_measure_compare(const Config& cfg, Bundle& b) {
  if (cfg.str("domain", "disk") != "disk") config_error("domain", "measure-compare runs on the unit disk");
  if (cfg.str("matrix", "headline") != "headline") config_error("matrix", "measure-compare uses matrix = headline");
  HeadlineParams p;
  p.matrix = headline_matrix(cfg);
  p.h = grid_h(cfg, p.h);
  p.arcs = static_cast<int>(cfg.integer("arcs", p.arcs));
  const long long walks = cfg.integer("samples", static_cast<long long>(p.walks));
  if (walks <= 0) config_error("samples", "must be positive");
  p.walks = static_cast<std::size_t>(walks);
  p.seed = seed_of(cfg);
  p.pole = cfg.point("pole", p.pole);
  p.box_side = cfg.num("box.side", p.box_side);
  p.box_n = static_cast<int>(cfg.integer("box.n", p.box_n));
  p.disk_vertices = static_cast<int>(cfg.integer("domain.vertices", p.disk_vertices));
  p.tolerance = cfg.num("tolerance", p.tolerance);
  const HeadlineResult r = run_headline(p);
  write_measure(b, "elliptic.csv", r.pde);
  write_measure(b, "harmonic.csv", r.wos);
  {
    auto os = b.csv("comparison.csv");
    os << "arc_index,elliptic,harmonic,difference\n";
    for (std::size_t j = 0; j < r.comparison.difference.size(); ++j)
      os << j << ',' << r.pde.weights[j] << ',' << r.pde.weights[j] - r.comparison.difference[j] << ','
         << r.comparison.difference[j] << '\n';
  }
  {
    auto os = b.csv("image_domain.txt");
    write_domain(r.image.domain, os);
  }
  b.check(make_check("tv_distance", r.comparison.tv, "<=", p.tolerance));
  b.check(make_check("wos_abandoned_fraction", static_cast<double>(r.wos.abandoned) / static_cast<double>(p.walks), "<=", 1e-3));
  b.check(make_check("pde_raw_mass_defect", std::abs(r.pde.raw_sum - 1.0), "<=", 1e-3));
}

void run_green_audit(const Config& cfg, Bundle& b) {
  const DomainSpec omega = build_domain(cfg);
  auto [fn, id] = build_matrix(cfg);
  const double h = grid_h(cfg, 1.0 / 128);
  const Point pole = cfg.point("pole", Point(0.0, 0.0));
  const Grid2D g = Grid2D::covering(omega.lo(), omega.hi(), h, 2);
  const MatrixField a = MatrixField::from_function(g, fn);
  const EllipticProblem prob(a, omega, h);
  const GreenField green = green_function(prob, pole, id);
  {
    GridFile f;
    f.kind = "green";
    f.grid = green.g.grid;
    f.flags = b.flags();
    f.flags["pole"] = fmt(pole.real(), 17) + "," + fmt(pole.imag(), 17);
    f.flags["matrix"] = id;
    f.blocks.emplace_back("g", green.g.values);
    write_grid_file(f, b.path("green.grid"));
    b.add_file("green.grid");
  }
  const double gmin = *std::min_element(green.g.values.begin(), green.g.values.end());
  b.check(make_check("green_min", gmin, ">=", -1e-10));

  if (omega.name.rfind("disk", 0) == 0 && omega.punctures().empty() && id == "identity" && pole == Point(0.0)) {
    const double radius = cfg.num("domain.radius", 1.0);
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point z = g.node(k);
      const double r = std::abs(z);
      if (r < 8 * h || !omega.contains(z)) continue;
      err = std::max(err, std::abs(green.g.values[k] - std::log(radius / r) / (2 * kPi)));
    }
    b.check(make_check("radial_error_over_h", err / h, "<=", cfg.num("radial.C", 1.0)));
  }

  const int pairs = static_cast<int>(cfg.integer("pairs", 20));
  if (pairs > 0) {
    const EllipticProblem adj(a.transposed(), omega, h);
    std::mt19937_64 rng(seed_of(cfg));
    std::uniform_real_distribution<double> ux(omega.lo().real(), omega.hi().real()), uy(omega.lo().imag(), omega.hi().imag());
    auto draw = [&] {
      for (;;) {
        const Point z(ux(rng), uy(rng));
        if (omega.contains(z) && omega.distance(z) > 8 * h) return z;
      }
    };
    auto os = b.csv("duality.csv");
    os << "p_x,p_y,x_x,x_y,g_p_at_x,g_adj_x_at_p,difference\n";
    double worst = 0.0;
    for (int n = 0; n < pairs; ++n) {
      const Point p = draw(), x = draw();
      if (std::abs(p - x) < 16 * h) {
        --n;
        continue;
      }
      const double gp = green_function(prob, p).value(x), gx = green_function(adj, x).value(p);
      worst = std::max(worst, std::abs(gp - gx));
      os << p.real() << ',' << p.imag() << ',' << x.real() << ',' << x.imag() << ',' << gp << ',' << gx << ','
         << gp - gx << '\n';
    }
    b.check(make_check("duality_max_over_h", worst / h, "<=", cfg.num("duality.C", 1.0)));
  }
}

void run_cdc_audit(const Config& cfg, Bundle& b) {
  const DomainSpec omega = build_domain(cfg);
  const double c0 = cfg.num("c0", 1.0), r0 = cfg.num("r0", 0.25);
  const int cells = static_cast<int>(cfg.integer("cells", 32));
  const CDCReport rep = cdc_audit(omega, c0, r0, static_cast<int>(cfg.integer("centers", 16)),
                                  static_cast<int>(cfg.integer("radii", 4)), cells);
  {
    auto os = b.csv("cdc.csv");
    os << "x,y,r,ratio,puncture\n";
    for (const auto& e : rep.entries)
      os << e.x0.real() << ',' << e.x0.imag() << ',' << e.r << ',' << e.ratio << ',' << (e.puncture ? 1 : 0) << '\n';
  }
  b.check(make_check("cdc_min_ratio", rep.min_ratio, ">=", c0));

  std::vector<int> refine;
  for (double c : cfg.list("refine", {16, 32, 64})) refine.push_back(static_cast<int>(c));
  std::vector<Point> probes(omega.punctures().begin(), omega.punctures().end());
  probes.push_back(omega.point_at(0, 0.0));
  int vanishing = 0;
  auto os = b.csv("cdc_refinement.csv");
  os << "x,y,r,cells,ratio,inverse_slope,vanishing\n";
  for (const Point& x0 : probes) {
    const CDCRefinement ref = cdc_refinement(omega, x0, r0, refine);
    vanishing += ref.vanishing ? 1 : 0;
    for (std::size_t k = 0; k < ref.cells.size(); ++k)
      os << x0.real() << ',' << x0.imag() << ',' << r0 << ',' << ref.cells[k] << ',' << ref.ratios[k] << ','
         << ref.inverse_slope << ',' << (ref.vanishing ? 1 : 0) << '\n';
  }
  b.check(make_check("zero_capacity_points", vanishing, "==", 0));

  if (cfg.has("bourgain.h")) {
    const double h = cfg.num("bourgain.h", 1.0 / 128);
    if (!(h >= std::ldexp(1.0, -12) && h <= std::ldexp(1.0, -4))) config_error("bourgain.h", "outside [2^-12, 2^-4]");
    auto [fn, id] = build_matrix(cfg);
    const MatrixField a = MatrixField::from_function(Grid2D::covering(omega.lo(), omega.hi(), h, 2), fn);
    const EllipticProblem prob(a, omega, h);
    const BourgainReport br = bourgain_sweep(prob, omega.point_at(0, 0.0), cfg.list("bourgain.radii", {0.2, 0.1, 0.05}),
                                             cfg.num("bourgain.floor", 0.05));
    auto bs = b.csv("bourgain.csv");
    bs << "r,tau,tau_disjoint,poles\n";
    for (const auto& row : br.rows) bs << row.r << ',' << row.tau << ',' << row.tau_disjoint << ',' << row.poles << '\n';
    b.check(make_check("bourgain_tau_min", br.tau_min, ">=", br.floor));
  }
}

std::vector<Point> sample_set(const Config& cfg, DimensionOptions& opts, double& expected_default) {
  const std::string set = cfg.str("set", "circle");
  const long long n = cfg.integer("points", 20000);
  if (n <= 0) config_error("points", "must be positive");
  std::mt19937_64 rng(seed_of(cfg));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts;
  if (set == "circle") {
    for (long long k = 0; k < n; ++k) pts.push_back(std::polar(1.0, 2 * kPi * u(rng)));
    expected_default = 1.0;
  } else if (set == "square") {
    for (long long k = 0; k < n; ++k) pts.emplace_back(u(rng), u(rng));
    expected_default = 2.0;
  } else if (set == "snowflake") {
    const double d = cfg.num("snowflake.d", 1.2);
    const DomainSpec sf = make_snowflake(d, static_cast<int>(cfg.integer("snowflake.levels", 6)));
    const double seg = std::abs(sf.loops()[0][1] - sf.loops()[0][0]);
    pts = sf.boundary_samples(seg / 8);
    opts.h_eff = seg;
    expected_default = d;
  } else if (set == "image-circle") {
    const double K = cfg.num("beltrami.K", 2.0);
    const ClosedForm cf = radial_closed_form(K);
    const QCMap phi = principal_solution(sample_beltrami(Grid2D::box(cfg.num("box.side", 8.0), static_cast<int>(cfg.integer("box.n", 1024))),
                                                         cf.mu, 2, Sampling::LowPass));
    for (long long k = 0; k < n; ++k) pts.push_back(phi(Point(0.25, 0.0) + std::polar(0.5, 2 * kPi * u(rng))));
    expected_default = 1.0;
  } else {
    config_error("set", "expected circle, square, snowflake or image-circle");
  }
  return pts;
}

void run_dimension_report(const Config& cfg, Bundle& b) {
  DimensionOptions opts;
  opts.seed = seed_of(cfg);
  double expected = 0.0;
  WeightedPoints wp;
  wp.points = sample_set(cfg, opts, expected);
  const DimensionEstimate e = measure_dimension(wp, {}, opts);
  const DimensionEstimate box = box_counting_dimension(wp.points, e.scales);
  {
    auto os = b.csv("dimension.txt");
    write_dimension_record(os, "local", e);
    write_dimension_record(os, "box", box);
  }
  {
    auto os = b.csv("box_counts.csv");
    os << "side,boxes\n";
    for (double s : e.scales) os << s << ',' << box_count(wp.points, s) << '\n';
  }
  if (cfg.str("set", "circle") == "image-circle") {
    const Interval iv = dim_distortion_interval(1.0, cfg.num("beltrami.K", 2.0));
    b.check(make_check("dimension_above_lower", e.value, ">=", iv.lo));
    b.check(make_check("dimension_below_upper", e.value, "<=", iv.hi));
  } else {
    expected = cfg.num("expected", expected);
    b.check(make_check("dimension_error", std::abs(e.value - expected), "<=", cfg.num("tolerance", 0.05)));
  }
}

void run_gauge_table(const Config& cfg, Bundle& b) {
  const double C = cfg.num("gauge.C", 1.0), K = cfg.num("gauge.K", 2.0);
  double r0 = cfg.num("gauge.r0", 0.0);
  if (r0 <= 0) r0 = gauge_admissibility(C, K).r0;
  const int kmin = static_cast<int>(cfg.integer("gauge.kmin", 6)), kmax = static_cast<int>(cfg.integer("gauge.kmax", 12));
  if (kmin < 1 || kmax <= kmin) config_error("gauge.kmax", "need 1 <= gauge.kmin < gauge.kmax");
  const double gap = cfg.num("gauge.alpha_gap", 0.5);
  const double T = cfg.num("gauge.T", 2.0);
  {
    auto os = b.csv("gauge.csv");
    os << "rho,C,r0,k,r,phi,phi_over_r_alpha\n";
    for (double rho : cfg.list("gauge.rho", {1.0, 2.0})) {
      const double alpha = 2.0 / (rho + 1.0) - gap;
      double prev = std::numeric_limits<double>::infinity(), worst_step = 0.0;
      for (int k = kmin; k <= kmax; ++k) {
        const double u = k * std::log(10.0);
        const double lphi = log_makarov_gauge(rho, C, r0, u);
        const double ratio = std::exp(lphi + alpha * u);
        os << rho << ',' << C << ',' << r0 << ',' << k << ',' << std::pow(10.0, -k) << ',' << std::exp(lphi) << ','
           << ratio << '\n';
        if (std::isfinite(prev)) worst_step = std::max(worst_step, ratio / prev);
        prev = ratio;
      }
      b.check(make_check("phi_over_r_alpha_step_rho" + fmt(rho), worst_step, "<=", 1.0));

      // doubling phi(4r) <= 1.1 * 4^{2/(rho+1)} phi(r), in log space over
      // u = log(1/r) in [log 4, 1e12]
      double worst = 0.0;
      for (int j = 0; j <= 4000; ++j) {
        const double u = std::exp(std::log(std::log(4.0)) + (std::log(1e12) - std::log(std::log(4.0))) * j / 4000.0);
        const double d = log_makarov_ratio(rho, C, r0, u, 4.0);
        worst = std::max(worst, std::exp(d - 2.0 / (rho + 1.0) * std::log(4.0)));
      }
      b.check(make_check("doubling_factor_rho" + fmt(rho), worst, "<=", 1.1));
    }
  }
  {
    auto os = b.csv("q_t.csv");
    os << "T,k,r,q_closed,q_product,limit_driver\n";
    double prev = std::numeric_limits<double>::infinity(), worst_step = 0.0, agree = 0.0;
    for (int k = std::max(kmin, 6); k <= kmax; ++k) {
      const double u = k * std::log(10.0);
      const double q = q_t_u(T, u), qp = q_t_product_u(T, u);
      os << T << ',' << k << ',' << std::pow(10.0, -k) << ',' << q << ',' << qp << ',' << q_t_limit_driver(T, u) << '\n';
      agree = std::max(agree, std::abs(q - qp));
      if (std::isfinite(prev)) worst_step = std::max(worst_step, (q - 1.0) / (prev - 1.0));
      prev = q;
    }
    b.check(make_check("q_t_minus_one_step", worst_step, "<=", 1.0));
    b.check(make_check("q_t_forms_agree", agree, "<=", 1e-12));
  }
  b.check(make_check("r0", r0, "<", std::exp(-std::numbers::e)));
}

}  // namespace

RunResult run_experiment(const Config& cfg) {
  const std::string kind = cfg.str("kind");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) config_error("kind", "unknown kind '" + kind + "'");
  const std::string out = cfg.str("out");
  if (cfg.has("h")) grid_h(cfg, 0.0);
  seed_of(cfg);

  fs::create_directories(out);
  const fs::path lock = fs::path(out) / ".lock";
  std::FILE* lf = std::fopen(lock.c_str(), "wx");
  if (!lf) throw Error(ErrorCode::IOError, "bundle " + out + " is locked by another run");
  std::fclose(lf);
  std::error_code ec;
  fs::remove(fs::path(out) / "MANIFEST.sha256", ec);

  Bundle b(cfg, out);
  try {
    if (kind == "solve-beltrami")
      run_solve_beltrami(cfg, b);
    else if (kind == "measure-compare")
      run_measure_compare(cfg, b);
    else if (kind == "green-audit")
      run_green_audit(cfg, b);
    else if (kind == "cdc-audit")
      run_cdc_audit(cfg, b);
    else if (kind == "dimension-report")
      run_dimension_report(cfg, b);
    else
      run_gauge_table(cfg, b);
    b.finish();
  } catch (const Error& e) {
    fs::remove(lock, ec);
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(e.code(), kind + ": " + e.what());
  } catch (...) {
    fs::remove(lock, ec);
    throw;
  }
  fs::remove(lock, ec);
  RunResult r;
  r.out_dir = out;
  r.checks = b.checks();
  r.files = b.files();
  return r;
}

BundleReport report_bundle(const std::string& dir) {
  const fs::path root(dir);
  if (fs::exists(root / ".lock")) throw Error(ErrorCode::IncompleteBundle, dir + ": run in progress (lock present)");
  std::ifstream man(root / "MANIFEST.sha256");
  if (!man) throw Error(ErrorCode::IncompleteBundle, dir + ": missing MANIFEST.sha256");
  BundleReport rep;
  std::string line;
  bool has_report = false;
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    const auto sp = line.find("  ");
    if (sp == std::string::npos) throw Error(ErrorCode::IncompleteBundle, dir + ": malformed manifest line");
    const std::string hash = line.substr(0, sp), name = line.substr(sp + 2);
    const fs::path p = root / name;
    if (!fs::exists(p)) throw Error(ErrorCode::IncompleteBundle, dir + ": missing " + name);
    if (sha256_file(p.string()) != hash) throw Error(ErrorCode::IncompleteBundle, dir + ": hash mismatch for " + name);
    if (name == "report.txt") has_report = true;
    if (p.extension() == ".csv") rep.plot_files.push_back(p.string());
  }
  if (!has_report) throw Error(ErrorCode::IncompleteBundle, dir + ": manifest lists no report.txt");

  std::ifstream rf(root / "report.txt");
  std::string kind;
  while (std::getline(rf, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "kind") ls >> kind;
    if (tag != "check") continue;
    Check c;
    ls >> c.name;
    std::string kv;
    while (ls >> kv) {
      const auto eq = kv.find('=');
      const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "value") c.value = std::stod(v);
      if (k == "op") c.op = v;
      if (k == "threshold") c.threshold = std::stod(v);
      if (k == "status") c.pass = v == "PASS";
    }
    rep.checks.push_back(c);
  }

  std::ostringstream os;
  os << "bundle " << dir << " (" << kind << ")\n";
  std::size_t w = 5;
  for (const auto& c : rep.checks) w = std::max(w, c.name.size());
  for (const auto& c : rep.checks)
    os << "  " << std::left << std::setw(static_cast<int>(w)) << c.name << "  " << (c.pass ? "PASS" : "FAIL") << "  "
       << fmt(c.value) << ' ' << c.op << ' ' << fmt(c.threshold) << '\n';
  if (!rep.plot_files.empty()) {
    os << "plot data:\n";
    for (const auto& f : rep.plot_files) os << "  " << f << '\n';
  }
  std::vector<std::string> failing;
  for (const auto& c : rep.checks)
    if (!c.pass) failing.push_back(c.name);
  if (failing.empty()) {
    os << "all checks PASS\n";
    rep.exit_code = 0;
  } else {
    os << "FAIL:";
    for (const auto& f : failing) os << ' ' << f;
    os << '\n';
    rep.exit_code = 1;
  }
  rep.text = os.str();
  return rep;
}

}  // namespace qclab
