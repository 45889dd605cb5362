#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qclab/domain.hpp"
#include "qclab/elliptic_operator.hpp"
#include "qclab/matrix_field.hpp"

namespace qclab {

struct QCMap;

/// Probability weights on the arcs of a boundary partition.
struct BoundaryMeasure {
  BoundaryPartition partition;
  std::vector<double> weights;
  std::vector<double> std_error;  // zero for pde
  Point pole;
  std::string method;  // pde, wos, pushforward
  /// Arc mass before renormalization, and mass lost to punctures or to walks
  /// that hit the step limit.
  double raw_sum = 1.0;
  double leakage = 0.0;
  std::size_t samples = 0;
  std::size_t abandoned = 0;
  double mean_steps = 0.0;

  double total() const;
};

void write_measure_csv(const BoundaryMeasure& m, std::ostream& os);
BoundaryMeasure read_measure_csv(std::istream& is);

struct DirichletSolution {
  RealField u;
  std::vector<std::uint8_t> inside;  // interior unknowns of the grid
  LinearSolveStats stats;
  double data_min = 0.0, data_max = 0.0;
};

DirichletSolution solve_dirichlet(const MatrixField& a, const DomainSpec& omega,
                                  const std::function<double(const BoundaryLocation&)>& f, double h);
DirichletSolution solve_dirichlet(const EllipticProblem& problem, const std::function<double(const BoundaryLocation&)>& f);

/// Partition-of-unity ramps of total width `width` across every arc breakpoint:
/// the mollified arc indicators evaluated at a boundary point.
std::vector<std::pair<int, double>> arc_ramps(const BoundaryPartition& partition, const DomainSpec& omega,
                                              const BoundaryLocation& where, double width);

/// Boundary weights c with u(pole) = sum_b c_b u_b for every discrete
/// L_A-harmonic u: one adjoint solve M_II^T w = (bilinear pole weights),
/// then c = -M_IB^T w.
Eigen::VectorXd pole_boundary_weights(const EllipticProblem& problem, Point pole);

BoundaryMeasure elliptic_measure(const MatrixField& a, const DomainSpec& omega, Point pole,
                                 const BoundaryPartition& partition, double h);
BoundaryMeasure elliptic_measure(const EllipticProblem& problem, Point pole, const BoundaryPartition& partition);

struct GreenField {
  RealField g;
  Point pole;
  double mollifier_radius = 0.0;
  std::string matrix_id;

  double value(Point z) const;
};

/// Zero boundary values and a unit source spread over the 3x3 nodes around the
/// pole with cone weights max(0, 1 - |x - p| / (1.5 h)).
GreenField green_function(const MatrixField& a, const DomainSpec& omega, Point pole, double h);
GreenField green_function(const EllipticProblem& problem, Point pole, const std::string& matrix_id = "");

struct PushforwardReport {
  std::vector<double> difference;  // elliptic minus harmonic, per source arc
  std::vector<double> ratio;       // elliptic over harmonic
  double linf = 0.0;
  double tv = 0.0;
  double tolerance = 0.0;
  double mc_floor = 0.0;  // expected TV of pure sampling noise
  bool pass = false;
};

/// Compares the elliptic measure on the source partition with the harmonic
/// measure on the image partition arc by arc through the provenance links.
PushforwardReport pushforward_compare(const BoundaryMeasure& omega_a, const QCMap& phi, const BoundaryMeasure& omega_harm,
                                      double tolerance = 0.02);

struct BourgainRow {
  double r = 0.0;
  double tau = 0.0;         // min over poles of w(E), E = boundary within 2r
  double tau_disjoint = 0.0;  // 1 - max over poles of w(boundary outside 2r)
  std::size_t poles = 0;
};

struct BourgainReport {
  Point x0;
  std::vector<BourgainRow> rows;
  double tau_min = 0.0;
  double floor = 0.0;
  bool pass = false;
};

/// Poles are the interior grid nodes of B(x0, r).
BourgainRow bourgain_audit(const EllipticProblem& problem, Point x0, double r);
BourgainReport bourgain_sweep(const EllipticProblem& problem, Point x0, const std::vector<double>& radii,
                              double floor = 0.05);

struct ComparabilityRow {
  double r = 0.0;
  double omega_b = 0.0, max_g_2b = 0.0, ratio_upper = 0.0;  // w(B) / max_{2B} g
  double max_g_b = 0.0, omega_4b = 0.0, ratio_lower = 0.0;  // max_B g / w(4B)
};

struct ComparabilityReport {
  std::vector<ComparabilityRow> rows;
  double upper_lo = 0.0, upper_hi = 0.0, lower_lo = 0.0, lower_hi = 0.0;
  double spread_limit = 0.0;
  bool pass = false;
};

/// Both Green/measure ratios at the boundary point x0 for each radius. g is the
/// Green function of A^T with pole p, which is exactly the adjoint state of
/// the pole evaluation.
ComparabilityReport green_measure_comparability(const MatrixField& a, const DomainSpec& omega, Point x0,
                                                const std::vector<double>& radii, Point pole, double h,
                                                double spread_limit = 16.0);

/// Values of g_y on the circle of radius dist(y, boundary)/2 about y.
std::vector<double> ring_values(const EllipticProblem& problem, Point y, int samples = 32);

struct CDCEntry {
  Point x0;
  double r = 0.0;
  double ratio = 0.0;
  bool puncture = false;
};

struct CDCReport {
  std::vector<CDCEntry> entries;
  double min_ratio = 0.0;
  double c0 = 0.0;
  bool pass = false;
};

/// Cap(closed B(x0, r) minus the domain, B(x0, 2r)) at boundary points x0
/// spread by arclength plus every puncture, for r = r0 2^-k, on a local grid of
/// spacing r / cells_per_radius.
CDCReport cdc_audit(const DomainSpec& omega, double c0, double r0, int n_centers, int n_radii, int cells_per_radius = 32);
double cdc_ratio(const DomainSpec& omega, Point x0, double r, int cells_per_radius = 32);

/// The ratio at one centre under grid refinement. A single point of the
/// complement has discrete capacity about 2 pi / log(cells), so 1/ratio grows
/// like log(cells) / (2 pi). `vanishing` flags a strictly decreasing sequence
/// whose 1/ratio grows at least half that fast: the ratio tends to 0 as h -> 0.
struct CDCRefinement {
  Point x0;
  double r = 0.0;
  std::vector<int> cells;
  std::vector<double> ratios;
  double inverse_slope = 0.0;  // d(1/ratio) / d log(cells)
  bool vanishing = false;
};

CDCRefinement cdc_refinement(const DomainSpec& omega, Point x0, double r, const std::vector<int>& cells);

}  // namespace qclab
