#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qclab/grid.hpp"

namespace qclab {

struct QCMap;

/// Nearest boundary point. loop >= 0 indexes a polyline and s is the arclength
/// from its first vertex; loop = -1 - k marks puncture k.
struct BoundaryLocation {
  Point point;
  int loop = 0;
  double s = 0.0;
  double dist = 0.0;
};

/// Planar domain bounded by closed polylines: the first loop is the outer
/// boundary (counterclockwise), the others are holes (clockwise). Punctures are
/// isolated boundary points removed from the interior.
class DomainSpec {
 public:
  std::string name;

  DomainSpec() = default;
  DomainSpec(std::string name, std::vector<std::vector<Point>> loops, std::vector<Point> punctures = {});

  const std::vector<std::vector<Point>>& loops() const { return loops_; }
  const std::vector<Point>& punctures() const { return punctures_; }
  Point lo() const { return lo_; }
  Point hi() const { return hi_; }
  double diameter() const { return std::abs(hi_ - lo_); }

  bool contains(Point p) const;
  /// Negative inside, positive outside.
  double signed_distance(Point p) const;
  /// Unsigned distance to the boundary (loops and punctures).
  double distance(Point p) const;
  BoundaryLocation closest_point(Point p) const;
  /// Cheap lower bound of distance() from the cached grid; exact near the boundary.
  double safe_distance(Point p) const;

  double loop_length(int loop) const { return lengths_[loop].back(); }
  double perimeter() const;
  Point point_at(int loop, double s) const;
  /// Signed area of a loop (positive for counterclockwise) and of the domain.
  double loop_area(int loop) const;
  double area() const;

  /// First crossing of the open segment (a, b] with the boundary, as a fraction
  /// of the segment. Returns false when there is none.
  bool first_crossing(Point a, Point b, double& t, BoundaryLocation& where) const;

  /// Segment intersection sweep; true when no two non-adjacent edges meet.
  bool is_simple() const;
  bool orientation_ok() const;

  /// Vertices sampled on the boundary at spacing <= ds.
  std::vector<Point> boundary_samples(double ds) const;

  const RealField& sdf_grid() const { return sdf_; }

 private:
  struct Segment {
    Point a, b;
    int loop;
    double s0;
  };

  std::vector<std::vector<Point>> loops_;
  std::vector<Point> punctures_;
  std::vector<std::vector<double>> lengths_;  // cumulative arclength per vertex, closing edge last
  std::vector<Segment> segs_;
  Point lo_, hi_;
  double cell_ = 1.0;
  int bx_ = 1, by_ = 1;
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> items_;
  RealField sdf_;

  void build();
  int bucket_x(double x) const;
  int bucket_y(double y) const;
  double segment_distance(const Segment& s, Point p, Point& q, double& t) const;
};

/// Arclength interval [s0, s1) on a loop. `source` is the provenance link of
/// image arcs (index of the source arc), -1 otherwise.
struct Arc {
  int loop = 0;
  double s0 = 0.0;
  double s1 = 0.0;
  int source = -1;
};

struct BoundaryPartition {
  std::vector<Arc> arcs;
  /// Arc containing (loop, s), or -1.
  int arc_of(int loop, double s) const;
  std::size_t size() const { return arcs.size(); }
};

/// m equal-arclength arcs, allocated to loops in proportion to length
/// (largest remainder, at least one per loop).
BoundaryPartition boundary_partition(const DomainSpec& omega, int m);

struct MappedDomain {
  DomainSpec domain;
  BoundaryPartition partition;
};

/// Image polylines of phi with source breakpoints kept as vertices and edges
/// subdivided where their image bends by more than 5 degrees.
MappedDomain map_domain(const DomainSpec& omega, const QCMap& phi, const BoundaryPartition& partition);
DomainSpec map_domain(const DomainSpec& omega, const QCMap& phi);

// Generators.
DomainSpec make_disk(Point center, double radius, int n_vertices);
DomainSpec make_square(Point center, double side, int per_side = 1);
DomainSpec make_punctured_disk(Point center, double radius, int n_vertices);
/// Koch-type curve on an equilateral triangle whose generator has similarity
/// dimension d; the classical curve is d = log 4 / log 3.
DomainSpec make_snowflake(double d, int levels);
/// Generator angle (radians) for dimension d, by bisection.
double snowflake_angle(double d);
/// Frame [-1/2, 3/2]^2 minus the level-n four-corner Cantor squares of [0, 1]^2.
DomainSpec make_cantor_complement(int level);

void write_domain(const DomainSpec& omega, std::ostream& os);
DomainSpec read_domain(std::istream& is);
void write_partition(const BoundaryPartition& p, std::ostream& os);
BoundaryPartition read_partition(std::istream& is);

}  // namespace qclab
