#pragma once

// Independent reference implementations used by the tests. Nothing here calls
// into the library's own t engine: distributions come from Boost.Math, sampling
// from <random>, integration from Boost's Gauss-Kronrod rule.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline double t_cdf(double x, double df) { return boost::math::cdf(boost::math::students_t(df), x); }
inline double t_pdf(double x, double df) { return boost::math::pdf(boost::math::students_t(df), x); }
inline double t_quantile(double p, double df) { return boost::math::quantile(boost::math::students_t(df), p); }
inline double normal_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }
inline double normal_pdf(double x) { return boost::math::pdf(boost::math::normal(), x); }

/// Adaptive Gauss-Kronrod integral of f over [a, b].
template <class F>
double integrate(F f, double a, double b, double tol = 1e-9) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 8, tol);
}

/// Single 61-point Kronrod pass, no subdivision. For short pieces of a smooth integrand.
template <class F>
double integrate_fixed(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 0, 0.0);
}

/// Root of an increasing function by plain bisection.
template <class F>
double bisect(F f, double lo, double hi, int iterations = 200) {
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Conditional next-period PD written directly from the process definition:
/// AP_t = -(Finv(pd_now) + a0) / a1, AP_{t+1} = a0 + a1 AP_t + r, PD = F(-a0 - a1 AP_{t+1}).
/// Returns 1.0 for a default (AP_{t+1} < 0).
inline double next_pd(double pd_now, double a0, double a1, double df, double r) {
  const double ap_now = -(t_quantile(pd_now, df) + a0) / a1;
  const double ap_next = a0 + a1 * ap_now + r;
  if (ap_next < 0.0) return 1.0;
  return t_cdf(-a0 - a1 * ap_next, df);
}

/// Draws of the one-period shock from the standard library's t generator.
class ShockSampler {
 public:
  ShockSampler(double df, std::uint64_t seed) : gen_(seed), dist_(df) {}
  double operator()() { return dist_(gen_); }

 private:
  std::mt19937_64 gen_;
  std::student_t_distribution<double> dist_;
};

/// Binomial standard error of a frequency under probability p.
inline double binomial_se(double p, double n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); }

}  // namespace oracle
