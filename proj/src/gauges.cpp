#include "qclab/gauges.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace qclab {

namespace {

constexpr double kE = std::numbers::e;

void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

}  // namespace

double t_prime_unchecked(double t, double K) { return 2.0 * K * t / (2.0 + (K - 1.0) * t); }

double t_prime(double t, double K) {
  require(t > 0 && t <= 2 && K >= 1, ErrorCode::DomainError, "t_prime needs 0 < t <= 2 and K >= 1");
  return t_prime_unchecked(t, K);
}

Interval dim_distortion_interval(double d, double K) {
  require(d > 0 && d <= 2 && K >= 1, ErrorCode::DomainError, "dim_distortion_interval needs 0 < d <= 2 and K >= 1");
  const double off = 1.0 / d - 0.5;
  return {1.0 / (0.5 + K * off), 1.0 / (0.5 + off / K)};
}

double bblog_u(double u) { return u * std::log(std::log(u)); }

double bblog_trunc_u(double u0, double u) { return bblog_u(u > u0 ? u : u0); }

double log_eps_gauge(double C, double r0, double u) {
  return C * std::sqrt(bblog_trunc_u(-std::log(r0), u));
}

double log_makarov_gauge(double rho, double C, double r0, double u) {
  require(r0 > 0 && r0 < std::exp(-kE), ErrorCode::BadR0, "r0 must lie in (0, e^-e)");
  require(rho > 0, ErrorCode::DomainError, "rho must be positive");
  const double u0 = -std::log(r0);
  return -2.0 / (rho + 1.0) * u + C * 2.0 * rho / (rho + 1.0) * std::sqrt(bblog_trunc_u(u0, rho * u));
}

double log_makarov_ratio(double rho, double C, double r0, double u, double S) {
  require(r0 > 0 && r0 < std::exp(-kE), ErrorCode::BadR0, "r0 must lie in (0, e^-e)");
  require(rho > 0 && S > 0, ErrorCode::DomainError, "rho and S must be positive");
  const double u0 = -std::log(r0), ls = std::log(S);
  return 2.0 / (rho + 1.0) * ls + C * 2.0 * rho / (rho + 1.0) *
                                      (std::sqrt(bblog_trunc_u(u0, rho * (u - ls))) - std::sqrt(bblog_trunc_u(u0, rho * u)));
}

double makarov_gauge(double rho, double C, double r0, double r) {
  require(r > 0, ErrorCode::DomainError, "gauge argument must be positive");
  return std::exp(log_makarov_gauge(rho, C, r0, -std::log(r)));
}

namespace {

// d/du of -u/(2K) + log eps at u > u0
double monotone_slope(double C, double K, double u) {
  const double ll = std::log(u), lll = std::log(ll);
  return -1.0 / (2.0 * K) + C * (lll + 1.0 / ll) / (2.0 * std::sqrt(u * lll));
}

struct Margins {
  double mono, dbl;
};

Margins check(double C, double K, double u0, int points) {
  Margins m{-1e300, -1e300};
  // u from u0 to 1e12, log spaced; beyond that the slope is visibly negative
  const double a = std::log(u0), b = std::log(1e12);
  for (int k = 0; k <= points; ++k) {
    const double u = std::exp(a + (b - a) * k / points);
    m.mono = std::max(m.mono, monotone_slope(C, K, u * (1 + 1e-12)));
    // r <= r0 means u >= u0; r/2 sits at u + log 2
    const double d = C * (std::sqrt(bblog_trunc_u(u0, u + std::log(2.0))) - std::sqrt(bblog_trunc_u(u0, u))) - std::log(2.0);
    m.dbl = std::max(m.dbl, d);
  }
  return m;
}

}  // namespace

Admissibility gauge_admissibility(double C, double K) {
  require(C > 0 && K >= 1, ErrorCode::DomainError, "gauge_admissibility needs C > 0 and K >= 1");
  for (int k = 4; k <= 1070; ++k) {
    const double u0 = k * std::log(2.0);
    if (!(u0 > kE)) continue;
    const Margins coarse = check(C, K, u0, 2000);
    if (coarse.mono > 0 || coarse.dbl > 0) continue;
    const Margins dense = check(C, K, u0, 20000);
    if (dense.mono > 0 || dense.dbl > 0) continue;
    Admissibility a;
    a.k = k;
    a.r0 = std::ldexp(1.0, -k);
    a.margin_monotone = dense.mono;
    a.margin_doubling = dense.dbl;
    return a;
  }
  throw Error(ErrorCode::NotFound, "no admissible dyadic r0 above the double range");
}

double q_t_guard(double T) { return std::min(std::exp(-kE * kE) / T, std::exp(-kE)); }

double q_t_u(double T, double u) {
  require(T > 0, ErrorCode::DomainError, "T must be positive");
  require(u > -std::log(q_t_guard(T)), ErrorCode::DomainError,
          "Q_T needs r < " + std::to_string(q_t_guard(T)));
  return bblog_u(u + std::log(T)) / bblog_u(u);
}

double q_t_product_u(double T, double u) {
  require(T > 0, ErrorCode::DomainError, "T must be positive");
  require(u > -std::log(q_t_guard(T)), ErrorCode::DomainError,
          "Q_T needs r < " + std::to_string(q_t_guard(T)));
  const double a = std::log(T) / u;
  const double ll = std::log(u), lll = std::log(ll);
  return (a + 1.0) * (std::log(std::log1p(a) / ll + 1.0) / lll + 1.0);
}

double q_t(double T, double r) {
  require(r > 0, ErrorCode::DomainError, "r must be positive");
  return q_t_u(T, -std::log(r));
}

double q_t_product(double T, double r) {
  require(r > 0, ErrorCode::DomainError, "r must be positive");
  return q_t_product_u(T, -std::log(r));
}

double q_t_limit_driver(double T, double u) {
  return (std::sqrt(q_t_u(T, u)) - 1.0) * std::sqrt(bblog_u(u));
}

AuxGauges aux_gauges(double r, double C, double r0) {
  require(r > 0 && r < 1.0 / kE + 1e-15, ErrorCode::DomainError, "aux gauges need 0 < r < 1/e");
  AuxGauges a;
  const double l = std::log(1.0 / r);
  a.g = r / l;
  a.h = r * l;
  a.composed = makarov_gauge(1.0, C, r0, a.h);
  return a;
}

PerturbationBound perturbation_bound(double eps, double lambda, int n) {
  require(eps >= 0 && lambda >= 1 && n >= 1, ErrorCode::DomainError, "need eps >= 0, lambda >= 1, n >= 1");
  require(eps < 1.0 / ((n + 1) * lambda), ErrorCode::PerturbationTooLarge, "eps must be below 1/((n+1) lambda)");
  PerturbationBound b;
  b.lambda_prime = 1.0 / (1.0 - (n + 1) * eps * lambda);
  const double lp = b.lambda_prime;
  b.k_symmetric = lp;
  b.k_general = lp + std::sqrt(std::max(0.0, lp * lp - 1.0));
  b.dim_upper_symmetric = 2.0 * b.k_symmetric / (b.k_symmetric + 1.0);
  b.dim_upper_general = 2.0 * b.k_general / (b.k_general + 1.0);
  return b;
}

GaugeFunction GaugeFunction::power(double alpha) {
  require(alpha > 0, ErrorCode::DomainError, "power gauge needs alpha > 0");
  GaugeFunction g;
  g.kind = Kind::Power;
  g.alpha = alpha;
  return g;
}

GaugeFunction GaugeFunction::makarov(double rho, double C, double r0) {
  require(r0 > 0 && r0 < std::exp(-kE), ErrorCode::BadR0, "r0 must lie in (0, e^-e)");
  GaugeFunction g;
  g.kind = Kind::Makarov;
  g.rho = rho;
  g.C = C;
  g.r0 = r0;
  return g;
}

GaugeFunction GaugeFunction::t_log() {
  GaugeFunction g;
  g.kind = Kind::TLog;
  return g;
}

GaugeFunction GaugeFunction::t_over_log() {
  GaugeFunction g;
  g.kind = Kind::TOverLog;
  return g;
}

GaugeFunction GaugeFunction::composed(const GaugeFunction& outer, const GaugeFunction& inner) {
  GaugeFunction g;
  g.kind = Kind::Composed;
  g.outer = std::make_shared<GaugeFunction>(outer);
  g.inner = std::make_shared<GaugeFunction>(inner);
  return g;
}

double GaugeFunction::operator()(double r) const {
  if (r <= 0) return 0.0;
  switch (kind) {
    case Kind::Power:
      return std::pow(r, alpha);
    case Kind::Makarov:
      return makarov_gauge(rho, C, r0, r);
    case Kind::TLog:
      return r * std::log(1.0 / r);
    case Kind::TOverLog:
      return r / std::log(1.0 / r);
    case Kind::Composed:
      return (*outer)((*inner)(r));
  }
  return 0.0;
}

double GaugeFunction::monotone_limit() const {
  switch (kind) {
    case Kind::Power:
      return std::numeric_limits<double>::infinity();
    case Kind::Makarov:
      return r0;
    case Kind::TLog:
      return 1.0 / kE;
    case Kind::TOverLog:
      return 1.0 / kE;
    case Kind::Composed: {
      // inner must stay inside its own range and map into the outer one
      double lim = inner->monotone_limit();
      const double out = outer->monotone_limit();
      while (lim > 1e-300 && (*inner)(lim) > out) lim *= 0.5;
      return lim;
    }
  }
  return 0.0;
}

std::string GaugeFunction::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Power: os << "r^" << alpha; break;
    case Kind::Makarov: os << "makarov(rho=" << rho << ",C=" << C << ",r0=" << r0 << ")"; break;
    case Kind::TLog: os << "t*log(1/t)"; break;
    case Kind::TOverLog: os << "t/log(1/t)"; break;
    case Kind::Composed: os << outer->describe() << " o " << inner->describe(); break;
  }
  return os.str();
}

}  // namespace qclab
