#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qclab/domain.hpp"
#include "qclab/matrix_field.hpp"
#include "qclab/measure_engine.hpp"
#include "qclab/qc_map.hpp"

namespace qclab {

// ---- scenarios shared by the CLI and the acceptance suite ----

/// C-infinity step: 1 for r <= r_in, 0 for r >= r_out.
double smooth_cutoff(double r, double r_in, double r_out);

/// A constant matrix blended towards Id through interpolate_det1 with the
/// cutoff |z| in [r_in, r_out]. With pole_radius > 0 the blend is also
/// switched off smoothly on B(pole, pole_radius) (Id there, full A outside
/// twice that radius).
struct HeadlineMatrix {
  Mat2 a = (Mat2() << 2.0, 0.0, 0.0, 0.5).finished();
  double r_in = 1.1, r_out = 1.8;
  Point pole;
  double pole_radius = 0.0;

  double weight(Point z) const;
  Mat2 operator()(Point z) const;
  Complex mu(Point z) const;
};

/// Beltrami coefficients with closed-form principal solutions.
struct ClosedForm {
  std::string name;
  std::function<Complex(Point)> mu;
  std::function<Point(Point)> exact;
};

/// mu = k on the unit disk: z + k conj(z) inside, z + k / z outside.
ClosedForm kchi_closed_form(double k);
/// mu = -((K-1)/(K+1)) z / conj(z) on the unit disk: z |z|^(1/K - 1) inside.
ClosedForm radial_closed_form(double K);
/// Max |phi - exact| over grid nodes in the middle half of the box.
double closed_form_error(const QCMap& phi, const ClosedForm& cf);

struct HeadlineParams {
  HeadlineMatrix matrix;
  double h = 1.0 / 512;
  int arcs = 256;
  std::size_t walks = 1000000;
  std::uint64_t seed = 1;
  Point pole{0.25, 0.15};
  double box_side = 16.0;
  int box_n = 1024;
  int disk_vertices = 4096;
  double tolerance = 0.02;
};

struct HeadlineResult {
  DomainSpec source;
  QCMap phi;
  MappedDomain image;
  BoundaryMeasure pde, wos;
  PushforwardReport comparison;
  double seconds_map = 0.0, seconds_pde = 0.0, seconds_wos = 0.0;
};

/// Elliptic measure of A on the unit disk against walk-on-spheres harmonic
/// measure on the image of the disk under the principal solution for mu_A.
HeadlineResult run_headline(const HeadlineParams& p);

// ---- configuration ----

/// Flat `key = value` text. `#` starts a comment; one `include <path>` line
/// (relative to the including file) is allowed, and keys of the including
/// file override the included ones.
class Config {
 public:
  std::map<std::string, std::string> values;
  std::string path;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string str(const std::string& key, const std::string& fallback) const;
  std::string str(const std::string& key) const;  // ConfigError when missing
  double num(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;
  Point point(const std::string& key, Point fallback) const;

  /// Sorted `key = value` lines; the bundle's config echo.
  std::string echo() const;
  std::string hash() const;
};

Config parse_config(std::istream& is, const std::string& origin, const std::string& base_dir);
Config load_config(const std::string& path);

const std::vector<std::string>& experiment_kinds();

struct Check {
  std::string name;
  double value = 0.0;
  std::string op;  // <=, >=, ==
  double threshold = 0.0;
  bool pass = false;
};

struct RunResult {
  std::string out_dir;
  std::vector<Check> checks;
  std::vector<std::string> files;
  bool all_pass() const;
};

/// Runs the configured experiment into config["out"]: echoed config, outputs,
/// report.txt, and MANIFEST.sha256 written last. The directory is locked by
/// out/.lock for the duration of the run.
RunResult run_experiment(const Config& cfg);

struct BundleReport {
  std::vector<Check> checks;
  std::vector<std::string> plot_files;
  std::string text;
  int exit_code = 0;
};

/// Verifies the manifest (IncompleteBundle for a missing manifest, a missing
/// file, a hash mismatch or a live lock) and tabulates the checks.
BundleReport report_bundle(const std::string& dir);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

}  // namespace qclab
