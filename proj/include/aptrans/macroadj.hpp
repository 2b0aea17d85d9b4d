#pragma once

// Macroeconomic adjustment of the intercept a0 so that the portfolio's implied
// upgrade (PD decrease) or downgrade (PD increase) rate hits a target.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "aptrans/errors.hpp"
#include "aptrans/masterscale.hpp"
#include "aptrans/process.hpp"

namespace aptrans {

enum class RateDirection { upgrade, downgrade };

/// obligor: plain mean over obligors. rating: mean within each rating band,
/// then mean over populated bands (needs a scale).
enum class RateWeighting { obligor, rating };

struct MacroTarget {
  double target_rate = 0.5;
  RateDirection direction = RateDirection::upgrade;
  std::vector<double> portfolio_pds;
};

inline void validate(const MacroTarget& t) {
  if (!(t.target_rate > 0.0 && t.target_rate < 1.0)) throw ParameterError("target rate must lie in (0,1)");
  if (t.portfolio_pds.empty()) throw ParameterError("portfolio must contain at least one obligor");
  for (std::size_t i = 0; i < t.portfolio_pds.size(); ++i) {
    const double pd = t.portfolio_pds[i];
    if (!(pd > 0.0 && pd < 1.0)) {
      std::ostringstream os;
      os << "obligor " << i + 1 << ": pd=" << pd << " outside (0,1)";
      throw ParameterError(os.str());
    }
  }
}

inline double implied_rate(const ProcessParams& params, const std::vector<double>& portfolio_pds,
                           RateDirection direction, RateWeighting weighting = RateWeighting::obligor,
                           const RatingScale* scale = nullptr) {
  if (portfolio_pds.empty()) throw ParameterError("portfolio must contain at least one obligor");
  const Process proc(params);
  const double cap = proc.pd_max();
  auto rate_of = [&](std::size_t i) {
    const double pd = portfolio_pds[i];
    if (!(pd > 0.0 && pd < cap)) {
      std::ostringstream os;
      os << "obligor " << i + 1 << ": pd=" << pd << " not in (0, PD_max=" << cap << ")";
      throw ModelDomainError(os.str());
    }
    return direction == RateDirection::upgrade ? proc.prob_pd_decrease(pd) : proc.prob_pd_increase(pd);
  };
  if (weighting == RateWeighting::obligor) {
    double s = 0.0;
    for (std::size_t i = 0; i < portfolio_pds.size(); ++i) s += rate_of(i);
    return s / static_cast<double>(portfolio_pds.size());
  }
  if (!scale) throw ParameterError("rating-weighted rates need a rating scale");
  std::map<std::size_t, std::pair<double, std::size_t>> by_band;
  for (std::size_t i = 0; i < portfolio_pds.size(); ++i) {
    auto& slot = by_band[band_of_pd(portfolio_pds[i], *scale)];
    slot.first += rate_of(i);
    slot.second += 1;
  }
  double s = 0.0;
  for (const auto& [band, acc] : by_band) s += acc.first / static_cast<double>(acc.second);
  return s / static_cast<double>(by_band.size());
}

struct MacroAdjustOptions {
  double bracket_half_width = 10.0;
  double tolerance = 1e-8;
  RateWeighting weighting = RateWeighting::obligor;
  const RatingScale* scale = nullptr;
};

/// Returns params with a0 moved so implied_rate matches the target; a1, df unchanged.
inline ProcessParams adjust_a0(const ProcessParams& params, const MacroTarget& target,
                               const MacroAdjustOptions& opt = {}) {
  validate(params);
  validate(target);
  const StudentT f(params.df);
  const double max_pd = *std::max_element(target.portfolio_pds.begin(), target.portfolio_pds.end());
  // PD_max = F(-a0) must stay above every obligor PD: a0 < -F^-1(max_pd).
  const double a0_feasible = -f.quantile(max_pd);
  double lo = params.a0 - opt.bracket_half_width;
  double hi = std::min(params.a0 + opt.bracket_half_width, a0_feasible);
  // F(-F^-1(p)) need not round back to p; step inwards until the portfolio is hostable
  for (double step = 1e-14; !(f.cdf(-hi) > max_pd) && step < 1.0; step *= 4.0) hi = a0_feasible - step;
  auto rate = [&](double a0) {
    return implied_rate({a0, params.a1, params.df}, target.portfolio_pds, target.direction, opt.weighting, opt.scale);
  };
  if (!(lo < hi)) throw ModelDomainError("macro adjustment: no feasible a0 keeps the portfolio below PD_max");
  const double r_lo = rate(lo);
  const double r_hi = rate(hi);
  const double r_min = std::min(r_lo, r_hi);
  const double r_max = std::max(r_lo, r_hi);
  if (!(target.target_rate >= r_min && target.target_rate <= r_max)) {
    std::ostringstream os;
    os << "macro adjustment: target rate " << target.target_rate << " unattainable; a0 in [" << lo << ", " << hi
       << "] yields rates in [" << r_min << ", " << r_max << "]";
    throw ModelDomainError(os.str());
  }
  // The rate is monotone in a0; orient the bracket so rate(lo) <= target <= rate(hi).
  const bool increasing = r_hi >= r_lo;
  double a = increasing ? lo : hi;
  double b = increasing ? hi : lo;
  double mid = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (a + b);
    const double r = rate(mid);
    if (r == target.target_rate) break;
    (r < target.target_rate ? a : b) = mid;
    if (std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(mid))) break;
  }
  const double achieved = rate(mid);
  if (std::abs(achieved - target.target_rate) > opt.tolerance) {
    std::ostringstream os;
    os << "macro adjustment: bisection stalled at rate " << achieved << " (target " << target.target_rate << ")";
    throw ModelDomainError(os.str());
  }
  return {mid, params.a1, params.df};
}

}  // namespace aptrans
