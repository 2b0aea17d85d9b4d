#pragma once

// Nelder-Mead simplex maximizer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace aptrans {

struct NelderMeadOptions {
  int max_iterations = 2000;
  double tolerance = 1e-8;  ///< stop when max - min objective over the simplex is below this
  std::vector<double> initial_step;  ///< per-coordinate edge of the starting simplex
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  double spread = std::numeric_limits<double>::infinity();
  std::vector<double> best_history;  ///< best objective after each iteration
};

/// Maximizes f starting from x0. -inf is a valid objective value (infeasible point).
template <class Objective>
NelderMeadResult nelder_mead_maximize(Objective&& f, std::vector<double> x0, const NelderMeadOptions& opt) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };

  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opt.initial_step.size() > i ? opt.initial_step[i] : 0.5;
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    // best first; stable so ties keep insertion order
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = std::move(pts[order[i]]);
      v2[i] = vals[order[i]];
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };
  auto spread = [&] {
    const double s = vals.front() - vals.back();
    return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
  };

  sort_simplex();
  std::vector<double> centroid(n), trial(n);
  auto along = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) trial[i] = centroid[i] + t * (pts[n][i] - centroid[i]);
    return trial;
  };

  while (res.iterations < opt.max_iterations) {
    if (spread() < opt.tolerance) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i] / static_cast<double>(n);

    const auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr > vals[0]) {
      const auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe > fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr > vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      const bool outside = fr > vals[n];
      const auto xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc > (outside ? fr : vals[n])) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          for (std::size_t i = 0; i < n; ++i) pts[k][i] = pts[0][i] + 0.5 * (pts[k][i] - pts[0][i]);
          vals[k] = eval(pts[k]);
        }
      }
    }
    sort_simplex();
    res.best_history.push_back(vals[0]);
  }
  if (!res.converged && spread() < opt.tolerance) res.converged = true;
  res.x = pts[0];
  res.value = vals[0];
  res.spread = spread();
  return res;
}

}  // namespace aptrans
