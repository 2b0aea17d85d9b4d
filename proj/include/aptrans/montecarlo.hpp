#pragma once

// Simulation of the ability-to-pay process and the empirical-vs-structural
// benchmark study: a lognormal portfolio is simulated over a multi-year
// horizon, small samples of one-year rating transitions are drawn from it, and
// the multi-year cumulative PDs predicted by empirical frequency matrices and by
// fitted regularized matrices are compared against the simulated truth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "aptrans/errors.hpp"
#include "aptrans/estimator.hpp"
#include "aptrans/masterscale.hpp"
#include "aptrans/parallel.hpp"
#include "aptrans/process.hpp"
#include "aptrans/random.hpp"
#include "aptrans/transition.hpp"

namespace aptrans {

struct PortfolioSpec {
  std::size_t n_obligors = 100000;
  double pd_median = 0.005;
  double pd_log_dispersion = 1.0;  ///< standard deviation of ln PD
  std::uint64_t seed = 1;
};

inline void validate(const PortfolioSpec& s) {
  if (s.n_obligors < 1) throw ParameterError("portfolio needs at least one obligor");
  if (!(s.pd_median > 0.0 && s.pd_median < 1.0)) throw ParameterError("pd_median must lie in (0,1)");
  if (!(s.pd_log_dispersion >= 0.0) || !std::isfinite(s.pd_log_dispersion))
    throw ParameterError("pd_log_dispersion must be finite and >= 0");
}

/// Lognormal initial PDs, clipped to (1e-6, PD_max - 1e-6); obligor i uses its own stream.
inline std::vector<double> simulate_portfolio(const PortfolioSpec& spec, const ProcessParams& params) {
  validate(spec);
  const double cap = pd_max(params);
  const double lo = 1e-6;
  const double hi = cap - 1e-6;
  if (!(lo < hi)) throw ModelDomainError("PD_max of the process is too small to host a portfolio");
  const StudentT normal = StudentT::normal();
  std::vector<double> pds(spec.n_obligors);
  const double log_median = std::log(spec.pd_median);
  for (std::size_t i = 0; i < spec.n_obligors; ++i) {
    StreamRng g(spec.seed, i, StreamDomain::portfolio);
    const double z = normal.quantile(g.uniform());
    pds[i] = std::clamp(std::exp(log_median + spec.pd_log_dispersion * z), lo, hi);
  }
  return pds;
}

/// PD paths; year 0 holds the initial PD and default is recorded as kDefaultPd.
class PathSet {
 public:
  PathSet(std::size_t n_obligors, int years)
      : n_(n_obligors), years_(years), pd_(n_obligors * (static_cast<std::size_t>(years) + 1), 0.0),
        default_year_(n_obligors, 0) {}

  std::size_t obligors() const noexcept { return n_; }
  int years() const noexcept { return years_; }

  double pd(std::size_t obligor, int year) const { return pd_[obligor * stride() + static_cast<std::size_t>(year)]; }
  double& pd(std::size_t obligor, int year) { return pd_[obligor * stride() + static_cast<std::size_t>(year)]; }
  bool defaulted_by(std::size_t obligor, int year) const {
    const int d = default_year_[obligor];
    return d != 0 && d <= year;
  }
  /// Year of default (1..years) or 0 when the obligor survives the horizon.
  int default_year(std::size_t obligor) const { return default_year_[obligor]; }
  int& default_year(std::size_t obligor) { return default_year_[obligor]; }

 private:
  std::size_t stride() const noexcept { return static_cast<std::size_t>(years_) + 1; }
  std::size_t n_;
  int years_;
  std::vector<double> pd_;
  std::vector<int> default_year_;
};

inline PathSet simulate_paths(const std::vector<double>& initial_pds, const ProcessParams& params, int years,
                              std::uint64_t seed, unsigned threads = 1) {
  if (years < 1) throw ParameterError("simulate_paths: years must be >= 1");
  const Process proc(params);
  const double cap = proc.pd_max();
  for (std::size_t i = 0; i < initial_pds.size(); ++i) {
    if (!(initial_pds[i] > 0.0 && initial_pds[i] < cap)) {
      std::ostringstream os;
      os << "obligor " << i + 1 << ": initial pd " << initial_pds[i] << " not in (0, PD_max=" << cap << ")";
      throw ModelDomainError(os.str());
    }
  }
  PathSet paths(initial_pds.size(), years);
  parallel_for(initial_pds.size(), threads, [&](std::size_t i) {
    StreamRng g(seed, i, StreamDomain::paths);
    paths.pd(i, 0) = initial_pds[i];
    double ap = proc.ap_from_pd(initial_pds[i]);
    for (int t = 1; t <= years; ++t) {
      if (paths.default_year(i) != 0) {
        paths.pd(i, t) = kDefaultPd;
        continue;
      }
      ap = params.a0 + params.a1 * ap + proc.shock().sample(g);
      if (ap < 0.0) {
        paths.default_year(i) = t;
        paths.pd(i, t) = kDefaultPd;
      } else {
        paths.pd(i, t) = proc.pd_from_ap(ap);
      }
    }
  });
  return paths;
}

/// Type-7 (linear interpolation) sample quantile; NaN for an empty sample.
inline double sample_quantile(std::vector<double> v, double q) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct StudyConfig {
  ProcessParams params{1.2, 0.8, 3.5};
  /// 20 log-spaced ratings; the median-0.5% portfolio sits around rating 13 and
  /// the top edge sits just under PD_max of the default parameters (about 0.1525).
  RatingScale scale = make_log_scale(20, 3e-5, 0.15);
  std::size_t population = 100000;
  double pd_median = 0.005;
  double pd_log_dispersion = 1.0;
  int horizon = 10;
  int n_samples = 100;
  std::size_t sample_size = 100;
  std::uint64_t seed = 1;
  FitOptions fit{};
  unsigned threads = 0;
};

/// Distribution of a predictor across samples, [rating][horizon - 1].
struct PredictorStats {
  std::vector<std::vector<double>> mean, median, p25, p75;
};

struct StudyReport {
  StudyConfig config;
  std::vector<std::size_t> obligors_per_rating;
  std::vector<std::vector<double>> true_cpd;  ///< NaN for unpopulated initial ratings
  std::optional<CountMatrix> large_counts;
  FitResult large_fit;
  MultiYearMetrics large_empirical;
  MultiYearMetrics large_structural;
  PredictorStats empirical;
  PredictorStats structural;
  int samples_drawn = 0;
  int structural_failures = 0;
};

namespace detail {

inline std::size_t uniform_index(StreamRng& g, std::size_t m) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(g()) * m) >> 64);
}

inline PredictorStats summarize(const std::vector<MultiYearMetrics>& runs, std::size_t n_ratings, int horizon) {
  PredictorStats s;
  auto shape = [&](auto& m) { m.assign(n_ratings, std::vector<double>(static_cast<std::size_t>(horizon), NAN)); };
  shape(s.mean);
  shape(s.median);
  shape(s.p25);
  shape(s.p75);
  if (runs.empty()) return s;
  for (std::size_t r = 0; r < n_ratings; ++r) {
    for (int h = 0; h < horizon; ++h) {
      std::vector<double> v;
      v.reserve(runs.size());
      for (const auto& m : runs) v.push_back(m.cpd[r][static_cast<std::size_t>(h)]);
      s.mean[r][h] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      s.median[r][h] = sample_quantile(v, 0.5);
      s.p25[r][h] = sample_quantile(v, 0.25);
      s.p75[r][h] = sample_quantile(v, 0.75);
    }
  }
  return s;
}

}  // namespace detail

inline StudyReport run_study(const StudyConfig& cfg) {
  validate(cfg.params);
  if (cfg.horizon < 2) throw ParameterError("study horizon must be >= 2 (transitions are taken between years 1 and 2)");
  if (cfg.n_samples < 1 || cfg.sample_size < 1) throw ParameterError("study needs at least one non-empty sample");
  const auto& scale = cfg.scale;
  const std::size_t nr = scale.size();
  const auto assigned = scale.assigned_pds();

  StudyReport rep;
  rep.config = cfg;

  const auto initial = simulate_portfolio({cfg.population, cfg.pd_median, cfg.pd_log_dispersion, cfg.seed}, cfg.params);
  const auto paths = simulate_paths(initial, cfg.params, cfg.horizon, cfg.seed, cfg.threads);

  // Truth: cumulative default rate per initial rating.
  rep.obligors_per_rating.assign(nr, 0);
  std::vector<std::vector<std::size_t>> defaults(nr, std::vector<std::size_t>(static_cast<std::size_t>(cfg.horizon), 0));
  for (std::size_t i = 0; i < paths.obligors(); ++i) {
    const auto r = band_of_pd(initial[i], scale);
    ++rep.obligors_per_rating[r];
    for (int h = 1; h <= cfg.horizon; ++h)
      if (paths.defaulted_by(i, h)) ++defaults[r][static_cast<std::size_t>(h - 1)];
  }
  rep.true_cpd.assign(nr, std::vector<double>(static_cast<std::size_t>(cfg.horizon), NAN));
  for (std::size_t r = 0; r < nr; ++r)
    if (rep.obligors_per_rating[r] > 0)
      for (int h = 0; h < cfg.horizon; ++h)
        rep.true_cpd[r][h] = static_cast<double>(defaults[r][h]) / static_cast<double>(rep.obligors_per_rating[r]);

  // Observed one-year transitions between years 1 and 2 among year-1 survivors.
  struct Move {
    std::size_t from;
    std::size_t to;  // kDefaultBand for a default
  };
  std::vector<Move> moves;
  for (std::size_t i = 0; i < paths.obligors(); ++i) {
    if (paths.defaulted_by(i, 1)) continue;
    moves.push_back({band_of_pd(paths.pd(i, 1), scale), band_of_pd(paths.pd(i, 2), scale)});
  }
  if (moves.empty()) throw DataError("study population has no year-1 survivors");
  auto count_moves = [&](const std::vector<std::size_t>& idx) {
    CountMatrix c(scale);
    for (auto k : idx)
      if (moves[k].to != kDefaultBand) ++c(moves[k].from, moves[k].to);
    return c;
  };
  std::vector<std::size_t> all(moves.size());
  std::iota(all.begin(), all.end(), 0);
  rep.large_counts = count_moves(all);
  rep.large_empirical = multi_year_metrics(empirical_matrix(*rep.large_counts, assigned), cfg.horizon);
  rep.large_fit = fit(*rep.large_counts, cfg.fit);
  rep.large_structural = multi_year_metrics(regularized_matrix(rep.large_fit.params, scale), cfg.horizon);

  // Small samples.
  const auto n_samples = static_cast<std::size_t>(cfg.n_samples);
  const std::size_t take = std::min(cfg.sample_size, moves.size());
  std::vector<std::optional<MultiYearMetrics>> emp(n_samples), str(n_samples);
  parallel_for(n_samples, cfg.threads, [&](std::size_t s) {
    StreamRng g(cfg.seed, s, StreamDomain::sampling);
    std::vector<std::size_t> pool(moves.size());
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t k = 0; k < take; ++k) std::swap(pool[k], pool[k + detail::uniform_index(g, pool.size() - k)]);
    pool.resize(take);
    const auto counts = count_moves(pool);
    emp[s] = multi_year_metrics(empirical_matrix(counts, assigned), cfg.horizon);
    if (counts.total() == 0) return;
    try {
      const auto fr = fit(counts, cfg.fit);
      str[s] = multi_year_metrics(regularized_matrix(fr.params, scale), cfg.horizon);
    } catch (const ConvergenceError&) {
    } catch (const ModelDomainError&) {
    }
  });
  std::vector<MultiYearMetrics> emp_runs, str_runs;
  for (std::size_t s = 0; s < n_samples; ++s) {
    emp_runs.push_back(std::move(*emp[s]));
    if (str[s]) str_runs.push_back(std::move(*str[s]));
  }
  rep.samples_drawn = cfg.n_samples;
  rep.structural_failures = cfg.n_samples - static_cast<int>(str_runs.size());
  rep.empirical = detail::summarize(emp_runs, nr, cfg.horizon);
  rep.structural = detail::summarize(str_runs, nr, cfg.horizon);
  return rep;
}

}  // namespace aptrans
