#pragma once

// Simulated datasets built from the reference sampler in oracles.hpp, so fits
// and likelihoods are checked against data the library did not generate.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "aptrans/likelihood.hpp"
#include "oracles.hpp"

namespace sim {

/// Transitions with initial PDs log-uniform on [lo, hi].
inline std::vector<aptrans::ContinuousTransition> continuous(int n, const aptrans::ProcessParams& p,
                                                             std::uint64_t seed, double lo = 1e-4,
                                                             double hi = 0.05) {
  oracle::ShockSampler shock(p.df, seed);
  std::mt19937_64 g(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<aptrans::ContinuousTransition> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double from = std::exp(u(g));
    out.push_back({from, oracle::next_pd(from, p.a0, p.a1, p.df, shock())});
  }
  return out;
}

/// The same draws reported as the band of the scale that contains the next PD.
inline std::vector<aptrans::IntervalTransition> interval(const std::vector<aptrans::ContinuousTransition>& d,
                                                         const aptrans::RatingScale& scale) {
  std::vector<aptrans::IntervalTransition> out;
  for (const auto& r : d) {
    if (r.is_default()) {
      out.push_back({r.pd_from, 0.0, 0.0, true});
      continue;
    }
    std::size_t k = 0;
    while (k + 1 < scale.size() && r.pd_to >= scale[k + 1].low) ++k;
    out.push_back({r.pd_from, scale.effective_low(k), scale.effective_high(k), false});
  }
  return out;
}

/// Survivor counts from each band's assigned PD, per_row draws per band.
inline aptrans::CountMatrix counts(const aptrans::RatingScale& scale, const aptrans::ProcessParams& p, int per_row,
                                   std::uint64_t seed) {
  oracle::ShockSampler shock(p.df, seed);
  aptrans::CountMatrix m(scale);
  for (std::size_t r = 0; r < scale.size(); ++r) {
    const double from = scale[r].assigned;
    if (!(from < oracle::t_cdf(-p.a0, p.df))) continue;
    for (int i = 0; i < per_row; ++i) {
      const double next = oracle::next_pd(from, p.a0, p.a1, p.df, shock());
      if (next >= 1.0) continue;
      std::size_t k = 0;
      while (k + 1 < scale.size() && next >= scale[k + 1].low) ++k;
      ++m(r, k);
    }
  }
  return m;
}

/// Score-process transitions SCORE' = a0 + a1 SCORE + S r with PD = G(-SCORE), G a t(link_df) law.
inline std::vector<aptrans::ContinuousTransition> link(int n, double a0, double a1, double s, double df,
                                                       double link_df, std::uint64_t seed, double lo = 1e-4,
                                                       double hi = 0.05) {
  oracle::ShockSampler shock(df, seed);
  std::mt19937_64 g(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<aptrans::ContinuousTransition> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double from = std::exp(u(g));
    const double score = -oracle::t_quantile(from, link_df);
    const double next = oracle::t_cdf(-(a0 + a1 * score + s * shock()), link_df);
    if (next > 0.0 && next < 1.0) out.push_back({from, next});
  }
  return out;
}

}  // namespace sim
