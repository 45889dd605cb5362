#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "qclab/common.hpp"
#include "qclab/gauges.hpp"

namespace qclab {

struct BoundaryMeasure;
class DomainSpec;

/// Numerical proxy for the dimension of a measure: the mass-weighted average
/// of local log-log slopes of mu(B(x, r)), not an infimum over full-measure sets.
struct DimensionEstimate {
  double value = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  std::vector<double> scales;
  std::size_t centers = 0;
};

struct WeightedPoints {
  std::vector<Point> points;
  std::vector<double> weights;  // empty means uniform
};

struct DimensionOptions {
  double h_eff = 0.0;  // 0: median nearest-neighbour spacing of the sample
  int n_centers = 1000;
  int bootstrap = 400;
  std::uint64_t seed = 1;
};

/// Dyadic radii hi, hi/2, ... down to lo.
std::vector<double> dyadic_scales(double lo, double hi);

/// With empty scales, uses the dyadic radii in [5 h_eff, diam/10]. Either way
/// at least four scales are required.
DimensionEstimate measure_dimension(const WeightedPoints& mu, std::vector<double> scales = {},
                                    const DimensionOptions& opts = {});
/// Arc weights placed at arc midpoints; h_eff defaults to the largest arc length.
DimensionEstimate measure_dimension(const BoundaryMeasure& mu, const DomainSpec& omega, std::vector<double> scales = {},
                                    const DimensionOptions& opts = {});

/// Slope of log N(eps) against log(1/eps) for occupied boxes of side eps.
DimensionEstimate box_counting_dimension(const std::vector<Point>& points, const std::vector<double>& scales);
std::size_t box_count(const std::vector<Point>& points, double side);

/// Greedy cover: clusters are split at the largest gap along the longer bbox
/// axis, searched in the middle half of the sorted order, until each fits in a ball of radius <= delta; returns the sum of
/// gauge(radius). An upper bound for the spherical delta-content.
double spherical_content(const std::vector<Point>& points, const std::function<double(double)>& gauge, double delta);

void write_gauge_csv(std::ostream& os, const GaugeFunction& g, const std::vector<double>& radii);
void write_dimension_record(std::ostream& os, const std::string& name, const DimensionEstimate& e);

}  // namespace qclab
