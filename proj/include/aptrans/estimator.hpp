#pragma once

// Maximum-likelihood fitting of the process parameters.
//
// The search runs in unconstrained coordinates
//   a0 = t0,  a1 = logistic(t1),  df = 1 + exp(t2),  S = exp(t3)
// so every candidate satisfies the parameter invariants by construction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "aptrans/errors.hpp"
#include "aptrans/likelihood.hpp"
#include "aptrans/optimize.hpp"
#include "aptrans/random.hpp"

namespace aptrans {

/// Below this many transitions a fit still runs but carries a warning.
inline constexpr std::size_t kRecommendedMinTransitions = 50;

struct FitOptions {
  int max_iterations = 2000;
  double ll_tolerance = 1e-8;
  int n_starts = 3;
  std::optional<ProcessParams> initial;
  std::optional<LinkParams> initial_link;
  std::optional<double> fixed_df;
  std::uint64_t seed = 20170701;
  /// Count-matrix regime: how source bands enter the likelihood.
  RatingTransitionOptions rating{};
  /// Count-matrix regime: reject parameters whose PD_max lies below an assigned PD of the scale.
  bool require_hostable_scale = true;
};

inline void validate(const FitOptions& o) {
  if (o.max_iterations < 1) throw ParameterError("max_iterations must be >= 1");
  if (!(o.ll_tolerance > 0.0)) throw ParameterError("ll_tolerance must be > 0");
  if (o.n_starts < 1) throw ParameterError("n_starts must be >= 1");
  if (o.fixed_df && !(*o.fixed_df > 1.0)) throw ParameterError("fixed df must be > 1");
}

template <class Params>
struct BasicFitResult {
  Params params{};
  double log_likelihood = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  std::size_t n_observations = 0;
  int start_index = 0;
  std::vector<std::string> warnings;
  /// Best objective after each accepted iteration of the winning start.
  std::vector<double> trace;
};

using FitResult = BasicFitResult<ProcessParams>;
using LinkFitResult = BasicFitResult<LinkParams>;

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Params>
class BasicConvergenceError : public ConvergenceError {
 public:
  BasicConvergenceError(const std::string& what, BasicFitResult<Params> best)
      : ConvergenceError(what), best_(std::move(best)) {}
  const BasicFitResult<Params>& best_so_far() const noexcept { return best_; }

 private:
  BasicFitResult<Params> best_;
};

namespace detail {

inline constexpr double kLogitClamp = 36.0;
inline constexpr double kLogDfClamp = 16.2;  // df up to ~1.1e7, i.e. deep in the normal limit

inline double logistic(double t) noexcept {
  t = std::clamp(t, -kLogitClamp, kLogitClamp);
  return 1.0 / (1.0 + std::exp(-t));
}
inline double logit(double a) noexcept { return std::log(a / (1.0 - a)); }
inline double df_from(double t) noexcept { return 1.0 + std::exp(std::min(t, kLogDfClamp)); }
inline double df_to(double df) noexcept { return std::log(df - 1.0); }
inline double scale_from(double t) noexcept { return std::exp(std::clamp(t, -30.0, 30.0)); }

inline void validate_probability_record(double p, std::size_t i, const char* field, bool allow_one) {
  const bool ok = allow_one ? (p > 0.0 && p <= 1.0) : (p > 0.0 && p < 1.0);
  if (!ok) {
    std::ostringstream os;
    os << "record " << i + 1 << ": " << field << "=" << p << " outside " << (allow_one ? "(0,1]" : "(0,1)");
    throw DataError(os.str());
  }
}

inline std::size_t validate_dataset(const std::vector<ContinuousTransition>& d) {
  if (d.empty()) throw DataError("dataset has no usable records");
  for (std::size_t i = 0; i < d.size(); ++i) {
    validate_probability_record(d[i].pd_from, i, "pd_from", false);
    validate_probability_record(d[i].pd_to, i, "pd_to", true);
  }
  return d.size();
}

inline std::size_t validate_dataset(const std::vector<IntervalTransition>& d) {
  if (d.empty()) throw DataError("dataset has no usable records");
  for (std::size_t i = 0; i < d.size(); ++i) {
    validate_probability_record(d[i].pd_from, i, "pd_from", false);
    if (d[i].is_default) continue;
    if (!(d[i].to_low >= 0.0 && d[i].to_low < d[i].to_high && d[i].to_high <= 1.0)) {
      std::ostringstream os;
      os << "record " << i + 1 << ": interval (" << d[i].to_low << ", " << d[i].to_high << ") invalid";
      throw DataError(os.str());
    }
  }
  return d.size();
}

inline std::size_t validate_dataset(const CountMatrix& c) {
  const auto total = c.total();
  if (total <= 0) throw DataError("dataset has no usable records");
  return static_cast<std::size_t>(total);
}

/// Runs the multistart search. `decode` maps search coordinates to parameters,
/// `objective` evaluates a parameter set, `starts[k]` are search coordinates.
template <class Params, class Decode, class Objective>
BasicFitResult<Params> multistart(const std::vector<std::vector<double>>& starts, const std::vector<double>& step,
                                  Decode&& decode, Objective&& objective, const FitOptions& opt,
                                  std::size_t n_obs) {
  auto f = [&](const std::vector<double>& t) { return objective(decode(t)); };
  NelderMeadOptions nm;
  nm.max_iterations = opt.max_iterations;
  nm.tolerance = opt.ll_tolerance;
  nm.initial_step = step;

  BasicFitResult<Params> best;
  BasicFitResult<Params> best_any;
  bool have = false;
  bool have_any = false;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    auto x0 = starts[k];
    // Pull an infeasible start towards larger PD_max (smaller a0).
    for (int tries = 0; tries < 60 && !std::isfinite(f(x0)); ++tries) x0[0] -= 0.25;
    auto r = nelder_mead_maximize(f, x0, nm);
    BasicFitResult<Params> cand;
    cand.params = decode(r.x);
    cand.log_likelihood = r.value;
    cand.converged = r.converged && std::isfinite(r.value);
    cand.iterations = r.iterations;
    cand.n_observations = n_obs;
    cand.start_index = static_cast<int>(k);
    cand.trace = std::move(r.best_history);
    // strict '>' keeps the lowest start index on ties
    if (!have_any || cand.log_likelihood > best_any.log_likelihood) {
      best_any = cand;
      have_any = true;
    }
    if (cand.converged && (!have || cand.log_likelihood > best.log_likelihood)) {
      best = std::move(cand);
      have = true;
    }
  }
  if (!have) {
    std::ostringstream os;
    os << "no start converged within " << opt.max_iterations << " iterations (best log-likelihood "
       << best_any.log_likelihood << ")";
    throw BasicConvergenceError<Params>(os.str(), best_any);
  }
  if (n_obs < kRecommendedMinTransitions) {
    std::ostringstream os;
    os << "only " << n_obs << " transitions; at least " << kRecommendedMinTransitions << " are recommended";
    best.warnings.push_back(os.str());
  }
  return best;
}

inline std::vector<std::vector<double>> jittered_starts(std::vector<double> base, const std::vector<double>& spread,
                                                        int n_starts, std::uint64_t seed) {
  std::vector<std::vector<double>> starts{base};
  for (int k = 1; k < n_starts; ++k) {
    StreamRng g(seed, static_cast<std::uint64_t>(k), StreamDomain::jitter);
    auto s = base;
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += spread[i] * (2.0 * g.uniform() - 1.0);
    starts.push_back(std::move(s));
  }
  return starts;
}

inline double dataset_objective(const std::vector<ContinuousTransition>& d, const ProcessParams& p,
                                const FitOptions&) {
  return ll_continuous(d, p);
}
inline double dataset_objective(const std::vector<IntervalTransition>& d, const ProcessParams& p,
                                const FitOptions&) {
  return ll_interval(d, p);
}
inline double dataset_objective(const CountMatrix& c, const ProcessParams& p, const FitOptions& opt) {
  if (opt.require_hostable_scale) {
    const double cap = pd_max(p);
    for (const auto& b : c.scale().bands())
      if (!(b.assigned < cap)) return -std::numeric_limits<double>::infinity();
  }
  return ll_rating_matrix(c, p, opt.rating);
}

}  // namespace detail

/// Default first start of the search.
inline constexpr ProcessParams kDefaultStart{1.0, 0.8, 4.0};

inline FitResult fit(const TransitionDataset& data, const FitOptions& options = {}) {
  validate(options);
  return std::visit(
      [&](const auto& d) {
        const std::size_t n_obs = detail::validate_dataset(d);
        const ProcessParams init = options.initial.value_or(kDefaultStart);
        validate(init);
        auto objective = [&](const ProcessParams& p) { return detail::dataset_objective(d, p, options); };
        if (options.fixed_df) {
          const double df = *options.fixed_df;
          auto decode = [df](const std::vector<double>& t) {
            return ProcessParams{t[0], detail::logistic(t[1]), df};
          };
          const auto starts =
              detail::jittered_starts({init.a0, detail::logit(init.a1)}, {0.5, 1.0}, options.n_starts, options.seed);
          return detail::multistart<ProcessParams>(starts, {0.25, 0.5}, decode, objective, options, n_obs);
        }
        auto decode = [](const std::vector<double>& t) {
          return ProcessParams{t[0], detail::logistic(t[1]), detail::df_from(t[2])};
        };
        const auto starts = detail::jittered_starts({init.a0, detail::logit(init.a1), detail::df_to(init.df)},
                                                    {0.5, 1.0, 0.7}, options.n_starts, options.seed);
        return detail::multistart<ProcessParams>(starts, {0.25, 0.5, 0.5}, decode, objective, options, n_obs);
      },
      data);
}

/// Default first start of the link-variant search (score space).
inline constexpr double kDefaultLinkStart[4] = {1.0, 0.8, 1.0, 4.0};  // a0, a1, S, df

/// Fits (a0, a1, S, df) of the link-function variant; the link G itself is fixed.
template <class Record>
LinkFitResult fit_link(const std::vector<Record>& data, const LinkFunction& link, const FitOptions& options = {}) {
  static_assert(std::is_same_v<Record, ContinuousTransition> || std::is_same_v<Record, IntervalTransition>);
  validate(options);
  const std::size_t n_obs = detail::validate_dataset(data);
  LinkParams init{kDefaultLinkStart[0], kDefaultLinkStart[1], kDefaultLinkStart[2], kDefaultLinkStart[3], link};
  if (options.initial_link) {
    init = *options.initial_link;
    init.link = link;
  }
  if (options.fixed_df) init.df = *options.fixed_df;
  validate(init);
  auto objective = [&](const LinkParams& p) { return ll_link(std::span<const Record>(data), p); };
  if (options.fixed_df) {
    auto decode = [&link, df = init.df](const std::vector<double>& t) {
      return LinkParams{t[0], detail::logistic(t[1]), detail::scale_from(t[2]), df, link};
    };
    const auto starts = detail::jittered_starts({init.a0, detail::logit(init.a1), std::log(init.scale)},
                                                {0.5, 1.0, 0.5}, options.n_starts, options.seed);
    return detail::multistart<LinkParams>(starts, {0.25, 0.5, 0.3}, decode, objective, options, n_obs);
  }
  auto decode = [&link](const std::vector<double>& t) {
    return LinkParams{t[0], detail::logistic(t[1]), detail::scale_from(t[2]), detail::df_from(t[3]), link};
  };
  const auto starts =
      detail::jittered_starts({init.a0, detail::logit(init.a1), std::log(init.scale), detail::df_to(init.df)},
                              {0.5, 1.0, 0.5, 0.7}, options.n_starts, options.seed);
  return detail::multistart<LinkParams>(starts, {0.25, 0.5, 0.3, 0.5}, decode, objective, options, n_obs);
}

}  // namespace aptrans
