#pragma once

// Ability-to-pay process
//
//   AP_{t+1} = a0 + a1 AP_t + r_{t+1},   r ~ t(df),   PD_t = F(-a0 - a1 AP_t)
//
// and the closed-form one-period conditional law of PD_{t+1} given PD_t.
// A default is encoded as PD = 1 and carries probability mass PD_t; survivors
// spread the remaining 1 - PD_t over (0, PD_max) with PD_max = F(-a0).

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <variant>

#include "aptrans/errors.hpp"
#include "aptrans/tdist.hpp"

namespace aptrans {

/// Quantile arguments are clipped to [kPdClip, 1 - kPdClip].
inline constexpr double kPdClip = 1e-15;

inline double clip_probability(double p) noexcept { return std::clamp(p, kPdClip, 1.0 - kPdClip); }

struct ProcessParams {
  double a0 = 1.2;
  double a1 = 0.8;
  double df = 3.5;

  /// Long-term mean of the ability-to-pay.
  double long_term_mean() const noexcept { return a0 / (1.0 - a1); }

  friend bool operator==(const ProcessParams&, const ProcessParams&) = default;
};

inline void validate(const ProcessParams& p) {
  std::ostringstream os;
  if (!std::isfinite(p.a0)) os << "a0 must be finite (got " << p.a0 << "); ";
  if (!(p.a1 > 0.0 && p.a1 < 1.0)) os << "a1 must lie in (0,1) (got " << p.a1 << "); ";
  if (!std::isfinite(p.df) || !(p.df > 1.0)) os << "df must be finite and > 1 (got " << p.df << "); ";
  const auto msg = os.str();
  if (!msg.empty()) throw ParameterError("invalid process parameters: " + msg.substr(0, msg.size() - 2));
}

/// Precomputed view of a parameter triple; the free functions below wrap it.
class Process {
 public:
  explicit Process(const ProcessParams& params) : Process(params, false) {}

  /// Admits the non-stationary a1 = 1 boundary; used by the median-identity check only.
  static Process unchecked(const ProcessParams& params) { return Process(params, true); }

  const ProcessParams& params() const noexcept { return p_; }
  const StudentT& shock() const noexcept { return f_; }

  double inv(double pd) const { return f_.quantile(clip_probability(pd)); }

  double pd_from_ap(double ap) const noexcept { return f_.cdf(-p_.a0 - p_.a1 * ap); }

  double ap_from_pd(double pd) const {
    require_open_unit(pd, "ap_from_pd");
    return -(inv(pd) + p_.a0) / p_.a1;
  }

  double pd_max() const noexcept { return f_.cdf(-p_.a0); }

  double pd_equilibrium() const noexcept { return f_.cdf(p_.a0 / (p_.a1 - 1.0)); }

  /// Argument u of cdf(pd_next) = F(u) given the current quantile F^-1(pd_now).
  double cdf_argument(double q_now, double pd_next) const {
    return (inv(pd_next) + p_.a0) / p_.a1 - q_now;
  }

  double future_pd_pdf(double pd_next, double pd_now) const {
    require_open_unit(pd_now, "future_pd_pdf");
    if (!(pd_next > 0.0 && pd_next < pd_max())) {
      std::ostringstream os;
      os << "future_pd_pdf: pd_next=" << pd_next << " outside (0, PD_max=" << pd_max() << ")";
      throw DomainError(os.str());
    }
    const double q_next = inv(pd_next);
    return std::exp(f_.log_pdf(inv(pd_now) - (q_next + p_.a0) / p_.a1) - f_.log_pdf(q_next)) / p_.a1;
  }

  /// P(PD_{t+1} <= pd_next | PD_t = pd_now); the default point pd_next = 1 adds mass pd_now.
  double future_pd_cdf(double pd_next, double pd_now) const {
    require_open_unit(pd_now, "future_pd_cdf");
    if (pd_next <= 0.0) return 0.0;
    if (pd_next >= 1.0) return 1.0;
    const double survivor_mass = f_.cdf(-inv(pd_now));
    if (pd_next >= pd_max()) return survivor_mass;
    return std::min(f_.cdf(cdf_argument(inv(pd_now), pd_next)), survivor_mass);
  }

  /// Probability that a survivor lands in (low, high); high is capped at PD_max.
  double interval_mass(double pd_now, double low, double high) const {
    require_open_unit(pd_now, "transition_prob_interval");
    const double cap = pd_max();
    const double q_now = inv(pd_now);
    const double hi_arg = high >= cap ? -q_now : cdf_argument(q_now, std::min(high, 1.0));
    if (low >= cap) return 0.0;
    const double lo_arg = low <= 0.0 ? -std::numeric_limits<double>::infinity() : cdf_argument(q_now, low);
    if (!(lo_arg < hi_arg)) return 0.0;
    return f_.cdf_diff(lo_arg, hi_arg);
  }

  double prob_pd_decrease(double pd_now) const {
    require_survivor(pd_now, "prob_pd_decrease");
    const double q = inv(pd_now);
    return f_.cdf((q + p_.a0) / p_.a1 - q);
  }

  double prob_pd_increase(double pd_now) const {
    require_survivor(pd_now, "prob_pd_increase");
    const double q = inv(pd_now);
    return f_.cdf(q - (q + p_.a0) / p_.a1) - pd_now;
  }

 private:
  Process(const ProcessParams& params, bool allow_boundary) : p_(params), f_(params.df) {
    if (allow_boundary) {
      if (!(params.a1 > 0.0 && params.a1 <= 1.0) || !std::isfinite(params.a0))
        throw ParameterError("a1 must lie in (0,1]");
    } else {
      validate(params);
    }
  }

  static void require_open_unit(double pd, const char* what) {
    if (!(pd > 0.0 && pd < 1.0)) {
      std::ostringstream os;
      os << what << ": probability " << pd << " outside (0,1)";
      throw DomainError(os.str());
    }
  }

  // A survivor sitting exactly at AP = 0 carries PD_max, so the upper end is closed.
  void require_survivor(double pd, const char* what) const {
    if (!(pd > 0.0 && pd <= pd_max())) {
      std::ostringstream os;
      os << what << ": pd_now=" << pd << " outside (0, PD_max=" << pd_max() << "]";
      throw DomainError(os.str());
    }
  }

  ProcessParams p_;
  StudentT f_;
};

inline double pd_from_ap(double ap, const ProcessParams& p) { return Process(p).pd_from_ap(ap); }
inline double ap_from_pd(double pd, const ProcessParams& p) { return Process(p).ap_from_pd(pd); }
inline double pd_max(const ProcessParams& p) { return Process(p).pd_max(); }
inline double pd_equilibrium(const ProcessParams& p) { return Process(p).pd_equilibrium(); }
inline double prob_pd_decrease(double pd_now, const ProcessParams& p) { return Process(p).prob_pd_decrease(pd_now); }
inline double prob_pd_increase(double pd_now, const ProcessParams& p) { return Process(p).prob_pd_increase(pd_now); }

inline double future_pd_pdf(double pd_next, double pd_now, const ProcessParams& p) {
  return Process(p).future_pd_pdf(pd_next, pd_now);
}

inline double future_pd_cdf(double pd_next, double pd_now, const ProcessParams& p) {
  return Process(p).future_pd_cdf(pd_next, pd_now);
}

/// Canonical parameters of AP_t = a0 + a1 AP_{t-1} + S r_t with default threshold T.
inline ProcessParams reparameterize(const ProcessParams& p, double scale, double threshold) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("scale S must be > 0");
  if (!std::isfinite(threshold)) throw ParameterError("threshold T must be finite");
  return {(p.a0 - threshold + p.a1 * threshold) / scale, p.a1, p.df};
}

// ---------------------------------------------------------------------------
// Link-function variant: PD_t = G(-SCORE_t), SCORE_{t+1} = a0 + a1 SCORE_t + S r.

struct LinkFunction {
  enum class Kind { student_t, normal };
  Kind kind = Kind::student_t;
  double df = 3.5;  ///< used for Kind::student_t only

  StudentT distribution() const { return kind == Kind::normal ? StudentT::normal() : StudentT(df); }

  friend bool operator==(const LinkFunction&, const LinkFunction&) = default;
};

struct LinkParams {
  double a0 = 0.9;
  double a1 = 0.8;
  double scale = 1.0;
  double df = 3.5;
  LinkFunction link{};

  friend bool operator==(const LinkParams&, const LinkParams&) = default;
};

inline void validate(const LinkParams& p) {
  validate(ProcessParams{p.a0, p.a1, p.df});
  if (!(p.scale > 0.0) || !std::isfinite(p.scale)) throw ParameterError("link scale S must be finite and > 0");
  if (p.link.kind == LinkFunction::Kind::student_t && !(p.link.df > 1.0))
    throw ParameterError("link df must be > 1");
}

class LinkProcess {
 public:
  explicit LinkProcess(const LinkParams& params)
      : p_((validate(params), params)), f_(params.df), g_(params.link.distribution()) {}

  const LinkParams& params() const noexcept { return p_; }
  const StudentT& shock() const noexcept { return f_; }
  const StudentT& link() const noexcept { return g_; }

  double score_from_pd(double pd) const { return -g_.quantile(clip_probability(pd)); }

  double cdf_argument(double g_now, double pd_next) const {
    return (p_.a0 + g_.quantile(clip_probability(pd_next)) - p_.a1 * g_now) / p_.scale;
  }

  /// P(PD_{t+1} < pd_next | PD_t = pd_now) for a symmetric shock law.
  double future_pd_cdf(double pd_next, double pd_now) const {
    if (!(pd_now > 0.0 && pd_now < 1.0)) throw DomainError("future_pd_cdf_link: pd_now outside (0,1)");
    if (pd_next <= 0.0) return 0.0;
    if (pd_next >= 1.0) return 1.0;
    return f_.cdf(cdf_argument(g_.quantile(clip_probability(pd_now)), pd_next));
  }

  /// Density in pd_next: f(z) / (S g(G^-1(pd_next))).
  double log_future_pd_pdf(double pd_next, double pd_now) const {
    const double g_next = g_.quantile(clip_probability(pd_next));
    const double z = (p_.a0 + g_next - p_.a1 * g_.quantile(clip_probability(pd_now))) / p_.scale;
    return f_.log_pdf(z) - g_.log_pdf(g_next) - std::log(p_.scale);
  }

  double interval_mass(double pd_now, double low, double high) const {
    const double g_now = g_.quantile(clip_probability(pd_now));
    const double lo = low <= 0.0 ? -std::numeric_limits<double>::infinity() : cdf_argument(g_now, low);
    const double hi = high >= 1.0 ? std::numeric_limits<double>::infinity() : cdf_argument(g_now, high);
    if (!(lo < hi)) return 0.0;
    return f_.cdf_diff(lo, hi);
  }

 private:
  LinkParams p_;
  StudentT f_;
  StudentT g_;
};

inline double future_pd_cdf_link(double pd_next, double pd_now, const LinkParams& p) {
  return LinkProcess(p).future_pd_cdf(pd_next, pd_now);
}

}  // namespace aptrans
