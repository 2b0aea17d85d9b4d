#pragma once

// One-year transition matrices over N_R ratings plus the absorbing default
// state, their powers, multi-year PD term structures and lifetime ECL.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "aptrans/errors.hpp"
#include "aptrans/likelihood.hpp"
#include "aptrans/masterscale.hpp"
#include "aptrans/process.hpp"

namespace aptrans {

inline constexpr double kRowSumTolerance = 1e-10;

class TransitionMatrix {
 public:
  /// n_ratings + 1 states; starts as the identity (every rating stays put).
  explicit TransitionMatrix(std::size_t n_ratings) : n_(n_ratings + 1), p_(n_ * n_, 0.0) {
    for (std::size_t i = 0; i < n_; ++i) (*this)(i, i) = 1.0;
  }

  TransitionMatrix(std::size_t n_ratings, std::vector<double> entries) : n_(n_ratings + 1), p_(std::move(entries)) {
    if (p_.size() != n_ * n_) throw ParameterError("transition matrix entry count does not match its dimension");
  }

  std::size_t n_ratings() const noexcept { return n_ - 1; }
  std::size_t states() const noexcept { return n_; }
  std::size_t default_state() const noexcept { return n_ - 1; }

  double operator()(std::size_t from, std::size_t to) const { return p_[from * n_ + to]; }
  double& operator()(std::size_t from, std::size_t to) { return p_[from * n_ + to]; }

  double row_sum(std::size_t from) const {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += (*this)(from, j);
    return s;
  }

  const std::vector<double>& entries() const noexcept { return p_; }

  /// Empty when the matrix is row-stochastic, non-negative and has an absorbing default row.
  std::vector<std::string> violations(double tol = kRowSumTolerance) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (!((*this)(i, j) >= 0.0)) {
          std::ostringstream os;
          os << "entry (" << i + 1 << "," << j + 1 << ") is negative or NaN";
          out.push_back(os.str());
        }
      }
      if (std::abs(row_sum(i) - 1.0) > tol) {
        std::ostringstream os;
        os << "row " << i + 1 << " sums to " << row_sum(i);
        out.push_back(os.str());
      }
    }
    for (std::size_t j = 0; j + 1 < n_; ++j)
      if ((*this)(default_state(), j) != 0.0) out.push_back("default row is not absorbing");
    if ((*this)(default_state(), default_state()) != 1.0) out.push_back("default row is not absorbing");
    return out;
  }

  friend TransitionMatrix operator*(const TransitionMatrix& a, const TransitionMatrix& b) {
    if (a.n_ != b.n_) throw ParameterError("transition matrix dimensions differ");
    TransitionMatrix c(a.n_ - 1, std::vector<double>(a.n_ * a.n_, 0.0));
    for (std::size_t i = 0; i < a.n_; ++i)
      for (std::size_t k = 0; k < a.n_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<double> p_;
};

/// Which PD fills a row of the regularized matrix (default column and
/// starting point of the conditional law).
struct RegularizedOptions {
  InitialPd initial = InitialPd::assigned;
};

/// Model-implied one-year matrix: default column = one-year PD of the band,
/// non-default entries = survivor mass landing in each band.
inline TransitionMatrix regularized_matrix(const ProcessParams& params, const RatingScale& scale,
                                           const RegularizedOptions& opt = {}) {
  const Process proc(params);
  const double cap = proc.pd_max();
  const std::size_t n = scale.size();
  TransitionMatrix m(n, std::vector<double>((n + 1) * (n + 1), 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double p = scale.initial_pd(i, opt.initial);
    if (!(p < cap)) {
      std::ostringstream os;
      os << "rating " << i + 1 << ": PD " << p << " is not below PD_max=" << cap
         << " of the process (a0=" << params.a0 << ", df=" << params.df << ")";
      throw ModelDomainError(os.str());
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) = proc.interval_mass(p, scale.effective_low(j), scale.effective_high(j));
    m(i, n) = p;
  }
  m(n, n) = 1.0;
  return m;
}

/// Frequency matrix with the default column pinned to known one-year PDs.
/// Rows without observations keep 1 - PD on the diagonal.
inline TransitionMatrix empirical_matrix(const CountMatrix& counts, const std::vector<double>& default_pds) {
  const std::size_t n = counts.size();
  if (default_pds.size() != n) throw ParameterError("empirical_matrix: one default PD per rating required");
  TransitionMatrix m(n, std::vector<double>((n + 1) * (n + 1), 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double pd = default_pds[i];
    if (!(pd > 0.0 && pd < 1.0)) throw DomainError("empirical_matrix: default PDs must lie in (0,1)");
    const auto total = counts.row_total(i);
    if (total == 0) {
      m(i, i) = 1.0 - pd;
    } else {
      for (std::size_t j = 0; j < n; ++j)
        m(i, j) = static_cast<double>(counts(i, j)) / static_cast<double>(total) * (1.0 - pd);
    }
    m(i, n) = pd;
  }
  m(n, n) = 1.0;
  return m;
}

struct PowerDiagnostics {
  /// (power, row) pairs whose row sum drifted by more than 1e-12 and was renormalized.
  std::vector<std::pair<int, std::size_t>> renormalized;
};

namespace detail {
inline void renormalize_drift(TransitionMatrix& m, int power, PowerDiagnostics* diag) {
  constexpr double kDrift = 1e-12;
  for (std::size_t i = 0; i < m.states(); ++i) {
    const double s = m.row_sum(i);
    if (std::abs(s - 1.0) <= kDrift) continue;
    for (std::size_t j = 0; j < m.states(); ++j) m(i, j) /= s;
    if (diag) diag->renormalized.emplace_back(power, i);
  }
}
}  // namespace detail

inline TransitionMatrix matrix_power(const TransitionMatrix& m, int years, PowerDiagnostics* diag = nullptr) {
  if (years < 1) throw ParameterError("matrix_power: years must be >= 1");
  TransitionMatrix acc = m;
  for (int y = 2; y <= years; ++y) {
    acc = acc * m;
    detail::renormalize_drift(acc, y, diag);
  }
  return acc;
}

/// Per initial rating and horizon 1..y_max; index as [rating][year - 1].
struct MultiYearMetrics {
  std::vector<std::vector<double>> cpd;
  std::vector<std::vector<double>> sp;
  std::vector<std::vector<double>> mpd;
  std::vector<std::vector<double>> fpd;

  std::size_t n_ratings() const noexcept { return cpd.size(); }
  int horizon() const noexcept { return cpd.empty() ? 0 : static_cast<int>(cpd.front().size()); }
};

/// Builds the metrics from cumulative PDs cpd[rating][year-1].
inline MultiYearMetrics metrics_from_cpd(std::vector<std::vector<double>> cpd) {
  MultiYearMetrics out;
  const std::size_t n = cpd.size();
  out.sp.assign(n, {});
  out.mpd.assign(n, {});
  out.fpd.assign(n, {});
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t ym = cpd[r].size();
    bool absorbed = false;
    for (std::size_t y = 0; y < ym; ++y) {
      const double prev_cpd = y == 0 ? 0.0 : cpd[r][y - 1];
      const double prev_sp = 1.0 - prev_cpd;
      out.sp[r].push_back(1.0 - cpd[r][y]);
      out.mpd[r].push_back(cpd[r][y] - prev_cpd);
      if (absorbed || prev_sp <= 0.0) {
        absorbed = true;
        out.fpd[r].push_back(1.0);
      } else {
        out.fpd[r].push_back(out.mpd[r].back() / prev_sp);
      }
    }
  }
  out.cpd = std::move(cpd);
  return out;
}

inline MultiYearMetrics multi_year_metrics(const TransitionMatrix& m, int y_max, PowerDiagnostics* diag = nullptr) {
  if (y_max < 1) throw ParameterError("multi_year_metrics: horizon must be >= 1");
  const std::size_t n = m.n_ratings();
  std::vector<std::vector<double>> cpd(n);
  TransitionMatrix acc = m;
  for (int y = 1; y <= y_max; ++y) {
    if (y > 1) {
      acc = acc * m;
      detail::renormalize_drift(acc, y, diag);
    }
    for (std::size_t r = 0; r < n; ++r) cpd[r].push_back(acc(r, m.default_state()));
  }
  return metrics_from_cpd(std::move(cpd));
}

/// Splits every band into `granularity` sub-bands (geometric spacing; the first
/// band's lower edge 0 is mirrored around the assigned PD for spacing). The
/// sub-band that contains a coarse band's assigned PD keeps that PD.
inline RatingScale refine_scale(const RatingScale& scale, int granularity) {
  if (granularity < 1) throw ParameterError("granularity must be >= 1");
  if (granularity == 1) return scale;
  std::vector<RatingBand> fine;
  for (const auto& b : scale.bands()) {
    const double lo = b.low > 0.0 ? b.low : b.assigned * b.assigned / b.high;
    const double step = std::log(b.high / lo) / granularity;
    std::vector<double> edges(static_cast<std::size_t>(granularity) + 1);
    for (int k = 0; k <= granularity; ++k) edges[k] = lo * std::exp(step * k);
    edges.front() = b.low;
    edges.back() = b.high;
    for (int k = 0; k < granularity; ++k) {
      const double e0 = edges[k];
      const double e1 = edges[k + 1];
      const bool holds_assigned = b.assigned >= e0 && (b.assigned < e1 || k + 1 == granularity);
      const double asn = holds_assigned && b.assigned > e0 ? b.assigned : (e0 > 0.0 ? std::sqrt(e0 * e1) : 0.5 * e1);
      fine.push_back({e0, asn, e1});
    }
  }
  return RatingScale(std::move(fine));
}

/// Metrics per coarse rating from the regularized matrix on a refined scale;
/// each rating is represented by the sub-band holding its assigned PD.
inline MultiYearMetrics project_regularized(const ProcessParams& params, const RatingScale& scale, int horizon,
                                            int granularity = 1, PowerDiagnostics* diag = nullptr) {
  if (granularity == 1) return multi_year_metrics(regularized_matrix(params, scale), horizon, diag);
  const RatingScale fine = refine_scale(scale, granularity);
  const auto all = multi_year_metrics(regularized_matrix(params, fine), horizon, diag);
  std::vector<std::vector<double>> cpd;
  for (const auto& b : scale.bands()) cpd.push_back(all.cpd[band_of_pd(b.assigned, fine)]);
  return metrics_from_cpd(std::move(cpd));
}

struct ECLInput {
  std::vector<double> ead;
  std::vector<double> lgd;
  std::vector<double> discount;

  std::size_t years() const noexcept { return ead.size(); }
};

inline void validate(const ECLInput& in) {
  if (in.ead.empty() || in.lgd.size() != in.ead.size() || in.discount.size() != in.ead.size())
    throw ParameterError("ECL input needs ead, lgd and discount for the same non-empty set of years");
  for (std::size_t t = 0; t < in.years(); ++t) {
    std::ostringstream os;
    if (!(in.ead[t] >= 0.0)) os << "year " << t + 1 << ": ead must be >= 0";
    else if (!(in.lgd[t] >= 0.0 && in.lgd[t] <= 1.0)) os << "year " << t + 1 << ": lgd must lie in [0,1]";
    else if (!(in.discount[t] > 0.0 && in.discount[t] <= 1.0)) os << "year " << t + 1 << ": discount must lie in (0,1]";
    if (!os.str().empty()) throw ParameterError(os.str());
  }
}

/// Sum over t of EAD_t LGD_t MPD_t D_t for one initial rating.
inline double ecl(const MultiYearMetrics& metrics, std::size_t rating, const ECLInput& input) {
  validate(input);
  if (rating >= metrics.n_ratings()) throw ParameterError("ecl: rating index out of range");
  if (static_cast<int>(input.years()) > metrics.horizon()) {
    std::ostringstream os;
    os << "ecl: exposure horizon " << input.years() << " exceeds metrics horizon " << metrics.horizon();
    throw ParameterError(os.str());
  }
  double total = 0.0;
  for (std::size_t t = 0; t < input.years(); ++t)
    total += input.ead[t] * input.lgd[t] * metrics.mpd[rating][t] * input.discount[t];
  return total;
}

}  // namespace aptrans
