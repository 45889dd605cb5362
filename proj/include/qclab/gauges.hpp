#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qclab/common.hpp"

namespace qclab {

/// Dimension after a K-quasiconformal map: 2Kt / (2 + (K - 1)t).
double t_prime(double t, double K);
/// Same formula with no domain checks (used for the K <-> 1/K identity).
double t_prime_unchecked(double t, double K);

struct Interval {
  double lo = 0.0, hi = 0.0;
};

/// All d' with (1/K)(1/d - 1/2) <= 1/d' - 1/2 <= K(1/d - 1/2).
Interval dim_distortion_interval(double d, double K);

/// Log(s) = log s * log log log s, written in terms of u = log s.
double bblog_u(double u);
/// Truncated version: Log(s0) for s <= s0, with u0 = log s0 > e.
double bblog_trunc_u(double u0, double u);

/// Makarov's gauge r^{2/(rho+1)} exp(C 2rho/(rho+1) sqrt(Log_{1/r0}(r^-rho))).
double makarov_gauge(double rho, double C, double r0, double r);
/// Natural log of the gauge at r = e^{-u}; usable far below the double range.
double log_makarov_gauge(double rho, double C, double r0, double u);
/// log(phi(S r) / phi(r)) at r = e^{-u}, without the cancellation of
/// differencing two log_makarov_gauge values.
double log_makarov_ratio(double rho, double C, double r0, double u, double S);
/// eps(r) = exp(C sqrt(Log_{1/r0}(1/r))), as its log at r = e^{-u}.
double log_eps_gauge(double C, double r0, double u);

struct Admissibility {
  double r0 = 0.0;
  int k = 0;  // r0 = 2^-k
  /// Largest value of d/du log(r^{1/2K} eps(r)) and of
  /// log eps(r/2) - log eps(r) - log 2 over the dense check (both <= 0).
  double margin_monotone = 0.0;
  double margin_doubling = 0.0;
};

/// Largest dyadic r0 < e^-e such that r^{1/2K} eps(r) is nondecreasing and
/// eps(r/2) <= 2 eps(r) for r <= r0. Checked on a log-spaced grid of
/// u = log(1/r), then re-verified on a grid ten times denser.
Admissibility gauge_admissibility(double C, double K);

/// Q_T(r) as a ratio of Log values and in the expanded product form.
double q_t(double T, double r);
double q_t_product(double T, double r);
double q_t_u(double T, double u);
double q_t_product_u(double T, double u);
/// Guard value below which Q_T is evaluated.
double q_t_guard(double T);
/// (sqrt(Q_T) - 1) sqrt(log(1/r) logloglog(1/r)) at r = e^{-u}.
double q_t_limit_driver(double T, double u);

struct AuxGauges {
  double g = 0.0;         // t / log(1/t)
  double h = 0.0;         // t log(1/t)
  double composed = 0.0;  // makarov(1, C, r0) applied to h
};

AuxGauges aux_gauges(double r, double C, double r0);

struct PerturbationBound {
  double lambda_prime = 1.0;
  double k_symmetric = 1.0, k_general = 1.0;
  double dim_upper_symmetric = 1.0, dim_upper_general = 1.0;
};

PerturbationBound perturbation_bound(double eps, double lambda, int n = 1);

/// Gauge functions used by the content and distortion code.
struct GaugeFunction {
  enum class Kind { Power, Makarov, TLog, TOverLog, Composed };
  Kind kind = Kind::Power;
  double alpha = 1.0;               // Power
  double rho = 1.0, C = 0.0, r0 = 0.0;  // Makarov
  std::shared_ptr<const GaugeFunction> outer, inner;

  static GaugeFunction power(double alpha);
  static GaugeFunction makarov(double rho, double C, double r0);
  static GaugeFunction t_log();
  static GaugeFunction t_over_log();
  static GaugeFunction composed(const GaugeFunction& outer, const GaugeFunction& inner);

  double operator()(double r) const;
  /// Right end of the interval where the gauge is declared monotone.
  double monotone_limit() const;
  std::string describe() const;
};

}  // namespace qclab
