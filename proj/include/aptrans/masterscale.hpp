#pragma once

// Rating master scales: ordered PD bands (low, assigned, high) plus the
// implicit absorbing default class.

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aptrans/errors.hpp"

namespace aptrans {

struct RatingBand {
  double low = 0.0;
  double assigned = 0.0;
  double high = 0.0;

  double mid() const noexcept { return 0.5 * (low + high); }

  friend bool operator==(const RatingBand&, const RatingBand&) = default;
};

/// How make_log_scale places the assigned PD inside each band.
enum class AssignedPd { geometric_mean, arithmetic_mean };

/// Which PD represents a whole source band in rating-level transition formulas.
enum class InitialPd { assigned, mid };

struct ScaleViolation {
  std::size_t band;  ///< 0-based band index
  std::string message;
};

class RatingScale {
 public:
  RatingScale() = default;
  /// Throws ParameterError listing every violation when the bands are invalid.
  explicit RatingScale(std::vector<RatingBand> bands);

  std::size_t size() const noexcept { return bands_.size(); }
  const RatingBand& operator[](std::size_t k) const { return bands_.at(k); }
  const std::vector<RatingBand>& bands() const noexcept { return bands_; }

  double initial_pd(std::size_t k, InitialPd which) const {
    return which == InitialPd::assigned ? bands_.at(k).assigned : bands_.at(k).mid();
  }

  /// Bounds used for transitions: the outer bands are open towards 0 and 1 so
  /// the bands partition the whole survivor PD range.
  double effective_low(std::size_t k) const { return k == 0 ? 0.0 : bands_.at(k).low; }
  double effective_high(std::size_t k) const { return k + 1 == bands_.size() ? 1.0 : bands_.at(k).high; }

  std::vector<double> assigned_pds() const {
    std::vector<double> out;
    out.reserve(bands_.size());
    for (const auto& b : bands_) out.push_back(b.assigned);
    return out;
  }

  friend bool operator==(const RatingScale&, const RatingScale&) = default;

 private:
  std::vector<RatingBand> bands_;
};

/// Sentinel returned by band_of_pd for pd = 1.
inline constexpr std::size_t kDefaultBand = static_cast<std::size_t>(-1);

inline std::vector<ScaleViolation> validate(const std::vector<RatingBand>& bands) {
  std::vector<ScaleViolation> out;
  auto add = [&out](std::size_t k, auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    out.push_back({k, os.str()});
  };
  if (bands.size() < 2) add(0, "scale needs at least 2 ratings, got ", bands.size());
  for (std::size_t k = 0; k < bands.size(); ++k) {
    const auto& b = bands[k];
    if (!std::isfinite(b.low) || !std::isfinite(b.assigned) || !std::isfinite(b.high))
      add(k, "non-finite band value");
    if (!(b.low < b.assigned && b.assigned < b.high))
      add(k, "requires low < assigned < high, got ", b.low, " / ", b.assigned, " / ", b.high);
    if (k == 0 && b.low < 0.0) add(k, "first band low ", b.low, " < 0");
    if (k + 1 == bands.size() && b.high > 1.0) add(k, "last band high ", b.high, " > 1");
    if (k > 0) {
      const auto& prev = bands[k - 1];
      if (prev.high > b.low) add(k, "overlaps previous band (", prev.high, " > ", b.low, ")");
      else if (prev.high < b.low) add(k, "gap after previous band (", prev.high, " < ", b.low, ")");
    }
  }
  return out;
}

inline std::vector<ScaleViolation> validate(const RatingScale& scale) { return validate(scale.bands()); }

inline RatingScale::RatingScale(std::vector<RatingBand> bands) : bands_(std::move(bands)) {
  const auto issues = validate(bands_);
  if (!issues.empty()) {
    std::ostringstream os;
    os << "invalid rating scale:";
    for (const auto& v : issues) os << " [band " << v.band + 1 << "] " << v.message << ";";
    throw ParameterError(os.str());
  }
}

inline RatingScale make_log_scale(int n_ratings, double pd_floor, double pd_ceiling,
                                  AssignedPd mode = AssignedPd::geometric_mean) {
  if (n_ratings < 2 || n_ratings > 50) throw ParameterError("make_log_scale: n_ratings must be in [2, 50]");
  if (!(pd_floor > 0.0 && pd_floor < pd_ceiling && pd_ceiling <= 1.0))
    throw ParameterError("make_log_scale: requires 0 < pd_floor < pd_ceiling <= 1");
  const double log_lo = std::log(pd_floor);
  const double step = (std::log(pd_ceiling) - log_lo) / n_ratings;
  std::vector<double> edges(n_ratings + 1);
  for (int k = 0; k <= n_ratings; ++k) edges[k] = std::exp(log_lo + step * k);
  edges.front() = pd_floor;
  edges.back() = pd_ceiling;
  std::vector<RatingBand> bands;
  bands.reserve(n_ratings);
  for (int k = 0; k < n_ratings; ++k) {
    const double lo = edges[k];
    const double hi = edges[k + 1];
    const double asn = mode == AssignedPd::geometric_mean ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    bands.push_back({lo, asn, hi});
  }
  return RatingScale(std::move(bands));
}

/// Rating index for a PD under half-open bands [low, high); pd = 1 is default.
inline std::size_t band_of_pd(double pd, const RatingScale& scale) {
  if (!(pd > 0.0) || pd > 1.0 || std::isnan(pd)) {
    std::ostringstream os;
    os << "band_of_pd: pd=" << pd << " outside (0,1]";
    throw DomainError(os.str());
  }
  if (pd == 1.0) return kDefaultBand;
  const auto& bands = scale.bands();
  std::size_t lo = 0;
  std::size_t hi = bands.size();  // first band with low > pd
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (bands[mid].low <= pd) lo = mid + 1;
    else hi = mid;
  }
  return lo == 0 ? 0 : lo - 1;
}

}  // namespace aptrans
