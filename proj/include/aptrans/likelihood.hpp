#pragma once

// Log-likelihoods of the ability-to-pay process for the three observation
// regimes: continuous PD -> continuous PD, continuous PD -> PD interval, and
// rating -> rating count matrices. Records outside the model support (a
// survivor at or above PD_max, a positive count in a zero-probability cell)
// contribute -inf and are listed in the returned diagnostics.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

#include "aptrans/errors.hpp"
#include "aptrans/masterscale.hpp"
#include "aptrans/process.hpp"

namespace aptrans {

/// PD value that encodes an observed default.
inline constexpr double kDefaultPd = 1.0;

struct ContinuousTransition {
  double pd_from = 0.0;
  double pd_to = 0.0;  ///< kDefaultPd for a default

  bool is_default() const noexcept { return pd_to >= kDefaultPd; }
};

struct IntervalTransition {
  double pd_from = 0.0;
  double to_low = 0.0;
  double to_high = 0.0;
  bool is_default = false;
};

/// Cumulated rating-to-rating counts over non-default targets.
class CountMatrix {
 public:
  CountMatrix(RatingScale scale, std::vector<std::int64_t> counts) : scale_(std::move(scale)), counts_(std::move(counts)) {
    const std::size_t n = scale_.size();
    if (counts_.size() != n * n) {
      std::ostringstream os;
      os << "count matrix must be " << n << "x" << n << " to match the scale, got " << counts_.size() << " cells";
      throw DataError(os.str());
    }
    std::int64_t total = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i] < 0) {
        std::ostringstream os;
        os << "negative count at (" << i / n + 1 << "," << i % n + 1 << ")";
        throw DataError(os.str());
      }
      total += counts_[i];
    }
    if (total == 0) throw DataError("count matrix has no transitions");
  }

  explicit CountMatrix(RatingScale scale) : scale_(std::move(scale)), counts_(scale_.size() * scale_.size(), 0) {}

  const RatingScale& scale() const noexcept { return scale_; }
  std::size_t size() const noexcept { return scale_.size(); }
  std::int64_t operator()(std::size_t from, std::size_t to) const { return counts_.at(from * size() + to); }
  std::int64_t& operator()(std::size_t from, std::size_t to) { return counts_.at(from * size() + to); }

  std::int64_t row_total(std::size_t from) const {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < size(); ++j) s += (*this)(from, j);
    return s;
  }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  const std::vector<std::int64_t>& cells() const noexcept { return counts_; }

 private:
  RatingScale scale_;
  std::vector<std::int64_t> counts_;
};

using TransitionDataset =
    std::variant<std::vector<ContinuousTransition>, std::vector<IntervalTransition>, CountMatrix>;

struct LogLikelihood {
  double value = 0.0;
  /// Records (or row-major count cells) with zero likelihood.
  std::vector<std::size_t> unsupported;

  bool finite() const noexcept { return std::isfinite(value); }
};

namespace detail {

inline void require_records(std::size_t n) {
  if (n == 0) throw DataError("likelihood needs at least one record");
}

inline double log_or_flag(double prob, std::size_t idx, LogLikelihood& out) {
  if (prob > 0.0) return std::log(prob);
  out.unsupported.push_back(idx);
  return -std::numeric_limits<double>::infinity();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Continuous -> continuous

/// Log-density of one survivor transition; -inf when pd_to >= PD_max.
inline double continuous_log_term(const Process& proc, double q_from, double pd_to) {
  const auto& p = proc.params();
  if (!(pd_to < proc.pd_max())) return -std::numeric_limits<double>::infinity();
  const double q_to = proc.inv(pd_to);
  return proc.shock().log_pdf(q_from - (q_to + p.a0) / p.a1) - proc.shock().log_pdf(q_to) - std::log(p.a1);
}

inline LogLikelihood evaluate_continuous(std::span<const ContinuousTransition> data, const ProcessParams& params) {
  detail::require_records(data.size());
  const Process proc(params);
  LogLikelihood out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (r.is_default()) {
      out.value += detail::log_or_flag(r.pd_from, i, out);
      continue;
    }
    const double term = continuous_log_term(proc, proc.inv(r.pd_from), r.pd_to);
    if (!std::isfinite(term)) out.unsupported.push_back(i);
    out.value += term;
  }
  return out;
}

inline double ll_continuous(std::span<const ContinuousTransition> data, const ProcessParams& params) {
  return evaluate_continuous(data, params).value;
}

/// Survivors only, each term divided by the survival probability 1 - pd_from.
/// Differs from ll_continuous on the same survivors by a parameter-free constant.
inline double ll_continuous_living(std::span<const ContinuousTransition> data, const ProcessParams& params) {
  detail::require_records(data.size());
  const Process proc(params);
  double s = 0.0;
  for (const auto& r : data) {
    if (r.is_default()) continue;
    s += continuous_log_term(proc, proc.inv(r.pd_from), r.pd_to) - std::log1p(-r.pd_from);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Continuous -> interval

inline double transition_prob_interval(double pd_from, double to_low, double to_high, const ProcessParams& params) {
  if (!(to_low < to_high)) throw DomainError("transition_prob_interval: requires to_low < to_high");
  return Process(params).interval_mass(pd_from, to_low, to_high);
}

inline LogLikelihood evaluate_interval(std::span<const IntervalTransition> data, const ProcessParams& params) {
  detail::require_records(data.size());
  const Process proc(params);
  LogLikelihood out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    const double prob = r.is_default ? r.pd_from : proc.interval_mass(r.pd_from, r.to_low, r.to_high);
    out.value += detail::log_or_flag(prob, i, out);
  }
  return out;
}

inline double ll_interval(std::span<const IntervalTransition> data, const ProcessParams& params) {
  return evaluate_interval(data, params).value;
}

// ---------------------------------------------------------------------------
// Rating -> rating

enum class SubintervalWeighting { uniform, stationary };

/// How a source band is represented when computing rating-level probabilities.
struct RatingTransitionOptions {
  InitialPd initial = InitialPd::assigned;
  int k_sub = 0;  ///< > 0: split the source band into k_sub equal-width subintervals
  SubintervalWeighting weighting = SubintervalWeighting::uniform;
};

/// F^-1 of the band edges (effective bounds), shared by every source row.
inline std::vector<double> band_edge_quantiles(const Process& proc, const RatingScale& scale) {
  std::vector<double> q(scale.size() + 1);
  q.front() = -std::numeric_limits<double>::infinity();
  // edges at or above PD_max pin to -a0 exactly so rounding in F^-1 leaves no stray mass
  const double cap = proc.pd_max();
  for (std::size_t k = 1; k < scale.size(); ++k) {
    const double edge = scale.effective_low(k);
    q[k] = edge >= cap ? -proc.params().a0 : proc.inv(edge);
  }
  q.back() = std::numeric_limits<double>::infinity();
  return q;
}

/// Survival-conditional probabilities of landing in each band from initial PD pd_from.
/// All zero when pd_from >= PD_max (the process cannot host that PD).
inline std::vector<double> survivor_row(const Process& proc, const RatingScale& scale, double pd_from,
                                        const std::vector<double>& edge_q) {
  std::vector<double> row(scale.size(), 0.0);
  if (!(pd_from > 0.0 && pd_from < proc.pd_max())) return row;
  const auto& p = proc.params();
  const double q_now = proc.inv(pd_from);
  // edges at or above PD_max (F^-1(edge) >= -a0) all map to the survivor-mass argument -q_now
  auto arg = [&](double qe) {
    if (qe == -std::numeric_limits<double>::infinity()) return qe;
    if (qe >= -p.a0) return -q_now;
    return (qe + p.a0) / p.a1 - q_now;
  };
  const double survival = 1.0 - pd_from;
  double lo = arg(edge_q.front());
  for (std::size_t k = 0; k < scale.size(); ++k) {
    const double hi = arg(edge_q[k + 1]);
    row[k] = lo < hi ? proc.shock().cdf_diff(lo, hi) / survival : 0.0;
    lo = hi;
  }
  return row;
}

inline std::vector<double> survivor_row(const Process& proc, const RatingScale& scale, double pd_from) {
  return survivor_row(proc, scale, pd_from, band_edge_quantiles(proc, scale));
}

inline double rating_transition_prob(std::size_t r_from, std::size_t r_to, const RatingScale& scale,
                                     const ProcessParams& params, InitialPd which = InitialPd::assigned) {
  const Process proc(params);
  const double p = scale.initial_pd(r_from, which);
  if (!(p < proc.pd_max())) return 0.0;
  return proc.interval_mass(p, scale.effective_low(r_to), scale.effective_high(r_to)) / (1.0 - p);
}

/// Subinterval midpoints and normalized weights for a source band.
///
/// Stationary weights take AP_t ~ N(a0 / (1 - a1), Var(r) / (1 - a1)^2) with
/// Var(r) = df / (df - 2), mapped to PD space through AP = -(F^-1(PD) + a0) / a1.
/// Midpoints at or above PD_max get zero weight.
inline std::vector<std::pair<double, double>> subinterval_weights(const RatingBand& band, const ProcessParams& params,
                                                                  int k_sub, SubintervalWeighting weighting) {
  if (k_sub < 1) throw ParameterError("k_sub must be >= 1");
  const Process proc(params);
  if (weighting == SubintervalWeighting::stationary && !(params.df > 2.0))
    throw ParameterError("stationary weighting needs df > 2 (return variance undefined)");
  const double width = (band.high - band.low) / k_sub;
  const double cap = proc.pd_max();
  std::vector<std::pair<double, double>> out;
  double total = 0.0;
  for (int k = 0; k < k_sub; ++k) {
    const double mid = band.low + (k + 0.5) * width;
    double w = 0.0;
    if (mid > 0.0 && mid < cap) {
      if (weighting == SubintervalWeighting::uniform) {
        w = 1.0;
      } else {
        const double mean = params.a0 / (1.0 - params.a1);
        const double sd = std::sqrt(params.df / (params.df - 2.0)) / (1.0 - params.a1);
        const double q = proc.inv(mid);
        const double ap = -(q + params.a0) / params.a1;
        // |dAP/dPD| = 1 / (a1 f(F^-1(PD)))
        w = normal_pdf((ap - mean) / sd) / (sd * params.a1 * proc.shock().pdf(q));
      }
    }
    out.emplace_back(mid, w);
    total += w;
  }
  if (total > 0.0)
    for (auto& [mid, w] : out) w /= total;
  return out;
}

inline std::vector<double> rating_row(const Process& proc, const RatingScale& scale, std::size_t r_from,
                                      const RatingTransitionOptions& opt, const std::vector<double>& edge_q) {
  if (opt.k_sub <= 0) return survivor_row(proc, scale, scale.initial_pd(r_from, opt.initial), edge_q);
  const auto weights = subinterval_weights(scale[r_from], proc.params(), opt.k_sub, opt.weighting);
  std::vector<double> row(scale.size(), 0.0);
  for (const auto& [mid, w] : weights) {
    if (w == 0.0) continue;
    const auto sub = survivor_row(proc, scale, mid, edge_q);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] += w * sub[k];
  }
  return row;
}

inline std::vector<double> rating_row(const Process& proc, const RatingScale& scale, std::size_t r_from,
                                      const RatingTransitionOptions& opt = {}) {
  return rating_row(proc, scale, r_from, opt, band_edge_quantiles(proc, scale));
}

inline double rating_transition_prob_weighted(std::size_t r_from, std::size_t r_to, const RatingScale& scale,
                                              const ProcessParams& params, int k_sub,
                                              SubintervalWeighting weighting) {
  const Process proc(params);
  return rating_row(proc, scale, r_from, {InitialPd::assigned, k_sub, weighting}).at(r_to);
}

/// Sum of N_{R1,R2} ln P_{R1,R2}; the multinomial factorial terms are dropped.
inline LogLikelihood evaluate_rating_matrix(const CountMatrix& counts, const ProcessParams& params,
                                            const RatingTransitionOptions& opt = {}) {
  const Process proc(params);
  const auto& scale = counts.scale();
  const std::size_t n = scale.size();
  LogLikelihood out;
  const auto edge_q = band_edge_quantiles(proc, scale);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts.row_total(i) == 0) continue;
    const auto row = rating_row(proc, scale, i, opt, edge_q);
    for (std::size_t j = 0; j < n; ++j) {
      const auto c = counts(i, j);
      if (c == 0) continue;
      out.value += static_cast<double>(c) * detail::log_or_flag(row[j], i * n + j, out);
    }
  }
  return out;
}

inline double ll_rating_matrix(const CountMatrix& counts, const ProcessParams& params,
                               const RatingTransitionOptions& opt = {}) {
  return evaluate_rating_matrix(counts, params, opt).value;
}

// ---------------------------------------------------------------------------
// Link-function variant

inline LogLikelihood evaluate_link(std::span<const ContinuousTransition> data, const LinkParams& params) {
  detail::require_records(data.size());
  const LinkProcess proc(params);
  LogLikelihood out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (r.is_default()) {
      out.value += detail::log_or_flag(r.pd_from, i, out);
      continue;
    }
    out.value += proc.log_future_pd_pdf(r.pd_to, r.pd_from);
  }
  return out;
}

inline LogLikelihood evaluate_link(std::span<const IntervalTransition> data, const LinkParams& params) {
  detail::require_records(data.size());
  const LinkProcess proc(params);
  LogLikelihood out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    const double prob = r.is_default ? r.pd_from : proc.interval_mass(r.pd_from, r.to_low, r.to_high);
    out.value += detail::log_or_flag(prob, i, out);
  }
  return out;
}

inline double ll_link(std::span<const ContinuousTransition> data, const LinkParams& params) {
  return evaluate_link(data, params).value;
}

inline double ll_link(std::span<const IntervalTransition> data, const LinkParams& params) {
  return evaluate_link(data, params).value;
}

}  // namespace aptrans
