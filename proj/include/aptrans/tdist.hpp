#pragma once

// Student-t distribution with continuous degrees of freedom.
//
// cdf via the regularized incomplete beta function (Lentz continued fraction),
// quantile via a safeguarded Newton iteration inside a bracket that is valid for
// every df > 1: the standard normal quantile bounds |x| from below and the
// Cauchy quantile (or the power-tail asymptote) from above. df = 1 (Cauchy) uses
// the closed forms. For df > kMaxDf the standard normal law is used.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "aptrans/errors.hpp"

namespace aptrans {

/// Degrees of freedom above this are evaluated with the normal limit.
inline constexpr double kMaxDf = 1e6;

namespace detail {

inline constexpr double kTiny = 1e-300;

/// Continued fraction part of I_x(a, b); converges fast for x < (a+1)/(a+b+2).
inline double beta_continued_fraction(double x, double a, double b) noexcept {
  constexpr int kMaxIter = 20000;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double log_beta(double a, double b) noexcept {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// log B(a, 1/2); the large-a branch avoids cancelling two large lgamma values.
inline double log_beta_half(double a) noexcept {
  if (a < 25.0) return log_beta(a, 0.5);
  // log Gamma(a + 1/2) - log Gamma(a), asymptotic in 1/a
  const double inv = 1.0 / a;
  const double inv2 = inv * inv;
  const double ratio_log =
      0.5 * std::log(a) + inv * (-1.0 / 8.0 + inv2 * (1.0 / 192.0 + inv2 * (-1.0 / 640.0 + inv2 * 17.0 / 14336.0)));
  return 0.5 * std::log(std::numbers::pi) - ratio_log;
}

/// Regularized incomplete beta I_x(a, b). Takes both x and y = 1 - x so callers
/// can pass a complement computed without cancellation.
inline double incomplete_beta(double x, double y, double a, double b, double lbeta) noexcept {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log(y) - lbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(y, b, a) / b;
}

template <class G>
double uniform_open01(G& g) {
  if constexpr (requires { g.uniform(); }) {
    return g.uniform();
  } else {
    static_assert(G::max() == std::numeric_limits<std::uint64_t>::max() && G::min() == 0,
                  "expects a full-range 64-bit generator");
    return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
  }
}

// Starting values for the quantile iteration, both for p < 0.5 (negative result).
// Rational approximation of the normal quantile, relative error about 1e-9.
inline double approx_normal_lower_quantile(double p) noexcept {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Hill's series/asymptotic approximation to the t quantile.
inline double hill_lower_quantile(double p, double n) noexcept {
  const double p2 = 2.0 * p;
  const double a = 1.0 / (n - 0.5);
  const double b = 48.0 / (a * a);
  double c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
  const double d = ((94.5 / (b + c) - 3.0) / b + 1.0) * std::sqrt(a * std::numbers::pi / 2.0) * n;
  double y = std::pow(d * p2, 2.0 / n);
  if (y > 0.05 + a) {
    const double x = approx_normal_lower_quantile(p);
    y = x * x;
    if (n < 5.0) c += 0.3 * (n - 4.5) * (x + 0.6);
    c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
    y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
    y = std::expm1(a * y * y);
  } else {
    y = ((1.0 / (((n + 6.0) / (n * y) - 0.089 * d - 0.822) * (n + 2.0) * 3.0) + 0.5 / (n + 4.0)) * y - 1.0) *
            (n + 1.0) / (n + 2.0) +
        1.0 / y;
  }
  return -std::sqrt(n * y);
}

}  // namespace detail

inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

class StudentT {
 public:
  explicit StudentT(double df) : df_(df) {
    if (!std::isfinite(df) || !(df >= 1.0)) {
      std::ostringstream os;
      os << "degrees of freedom must be finite and >= 1, got " << df;
      throw ParameterError(os.str());
    }
    normal_ = df > kMaxDf;
    cauchy_ = df == 1.0;
    if (!normal_) {
      lbeta_ = detail::log_beta_half(0.5 * df_);
      log_norm_ = -0.5 * std::log(df_) - lbeta_;
    } else {
      log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi);
    }
  }

  /// A standard normal engine (df = +inf limit).
  static StudentT normal() { return StudentT(std::numeric_limits<double>::max()); }

  double df() const noexcept { return df_; }
  bool is_normal() const noexcept { return normal_; }

  double log_pdf(double x) const noexcept {
    if (normal_) return log_norm_ - 0.5 * x * x;
    return log_norm_ - 0.5 * (df_ + 1.0) * std::log1p(x * x / df_);
  }

  double pdf(double x) const noexcept { return std::exp(log_pdf(x)); }

  double cdf(double x) const noexcept {
    if (std::isnan(x)) return x;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (normal_) return normal_cdf(x);
    if (cauchy_) {
      const double tail = std::atan2(1.0, std::abs(x)) / std::numbers::pi;
      return x < 0.0 ? tail : 1.0 - tail;
    }
    const double x2 = x * x;
    // tail = P(T < -|x|) = I_z(df/2, 1/2) / 2 with z = df / (df + x^2)
    const double z = df_ / (df_ + x2);
    const double zc = x2 / (df_ + x2);
    const double tail = 0.5 * detail::incomplete_beta(z, zc, 0.5 * df_, 0.5, lbeta_);
    return x < 0.0 ? tail : 1.0 - tail;
  }

  /// F(b) - F(a) for a <= b, evaluated on whichever side of 0 keeps precision.
  double cdf_diff(double a, double b) const noexcept {
    if (a >= 0.0) return std::max(0.0, cdf(-a) - cdf(-b));
    return std::max(0.0, cdf(b) - cdf(a));
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      std::ostringstream os;
      os << "quantile requires p in (0,1), got " << p;
      throw DomainError(os.str());
    }
    if (p == 0.5) return 0.0;
    if (p > 0.5) return -lower_quantile(1.0 - p);
    return lower_quantile(p);
  }

  template <class G>
  double sample(G& g) const {
    return quantile(detail::uniform_open01(g));
  }

 private:
  // x < 0 with F(x) = p, p < 0.5.
  double lower_quantile(double p) const {
    constexpr int kMaxIter = 200;
    if (cauchy_) return -1.0 / std::tan(std::numbers::pi * p);
    if (p >= 0.1) {
      // Halley steps from the approximate start, safeguarded by the bracket.
      double lo = -1.0 / std::tan(std::numbers::pi * p);
      double hi = 0.0;
      double x = normal_ ? detail::approx_normal_lower_quantile(p) : detail::hill_lower_quantile(p, df_);
      if (!(x > lo && x < hi)) x = 0.0;
      for (int it = 0; it < kMaxIter; ++it) {
        const double r = cdf(x) - p;
        if (r == 0.0) return x;
        (r > 0.0 ? hi : lo) = x;
        const double f = pdf(x);
        double next = x - 2.0 * r * f / (2.0 * f * f - r * f * score(x));
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 4e-15 * std::abs(next) || hi - lo <= 1e-15 * std::abs(lo)) return next;
        x = next;
      }
      return x;
    }
    // Tail: Halley on H(y) = log F(-e^y) - log p, nearly linear in y for power tails.
    const double log_p = std::log(p);
    double y_lo = std::log(1.2815515655446004);  // |normal quantile at 0.1|
    double y_hi = std::log(1.0 / std::tan(std::numbers::pi * p));
    double y;
    if (normal_) {
      y_hi = std::min(y_hi, 0.5 * std::log(-2.0 * log_p));
      y = std::log(-detail::approx_normal_lower_quantile(p));
    } else {
      // F(x) <= pdf-asymptote integral, so this |x| is an upper bound.
      const double log_tail_bound =
          (log_norm_ + 0.5 * (df_ + 1.0) * std::log(df_) - std::log(df_) - log_p) / df_;
      y_hi = std::min(y_hi, log_tail_bound);
      y = std::log(-detail::hill_lower_quantile(p, df_));
    }
    if (!(y > y_lo && y < y_hi)) y = y_hi;
    for (int it = 0; it < kMaxIter; ++it) {
      const double x = -std::exp(y);
      const double fx = cdf(x);
      if (fx == p) return x;
      const double h = std::log(fx) - log_p;
      (h > 0.0 ? y_lo : y_hi) = y;
      const double f = pdf(x);
      const double slope = f * x / fx;  // dH/dy, negative
      const double curvature = x * (f * (score(x) * x + 1.0) / fx - f * f * x / (fx * fx));
      double next = y - 2.0 * h * slope / (2.0 * slope * slope - h * curvature);
      if (!(next > y_lo && next < y_hi) || !std::isfinite(next)) next = 0.5 * (y_lo + y_hi);
      if (std::abs(next - y) <= 1e-15 * std::max(1.0, std::abs(y)) || y_hi - y_lo <= 1e-16) return -std::exp(next);
      y = next;
    }
    return -std::exp(y);
  }

  // d/dx log pdf
  double score(double x) const noexcept { return normal_ ? -x : -(df_ + 1.0) * x / (df_ + x * x); }

  double df_;
  bool normal_ = false;
  bool cauchy_ = false;
  double lbeta_ = 0.0;
  double log_norm_ = 0.0;
};

inline double t_pdf(double x, double df) { return StudentT(df).pdf(x); }
inline double t_log_pdf(double x, double df) { return StudentT(df).log_pdf(x); }
inline double t_cdf(double x, double df) { return StudentT(df).cdf(x); }
inline double t_quantile(double p, double df) { return StudentT(df).quantile(p); }

/// Inverse-cdf draw; deterministic for a given generator state.
template <class G>
double t_sample(double df, G& g) {
  return StudentT(df).sample(g);
}

inline double normal_quantile(double p) { return StudentT::normal().quantile(p); }

}  // namespace aptrans
