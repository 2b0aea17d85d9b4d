#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "aptrans/montecarlo.hpp"
#include "oracles.hpp"

using namespace aptrans;

namespace {

const ProcessParams kStudy{1.2, 0.8, 3.5};

// equality with NaN cells (unpopulated ratings) matching each other
bool same(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (!(a[i][j] == b[i][j] || (std::isnan(a[i][j]) && std::isnan(b[i][j])))) return false;
  }
  return true;
}

StudyConfig small_study() {
  StudyConfig c;
  c.population = 20000;
  c.n_samples = 12;
  c.sample_size = 100;
  c.seed = 5;
  c.threads = 1;
  return c;
}

}  // namespace

TEST(MonteCarlo, PortfolioMedianAndSpread) {
  const auto pds = simulate_portfolio({100000, 0.005, 1.0, 3}, kStudy);
  EXPECT_NEAR(sample_quantile(pds, 0.5) / 0.005, 1.0, 0.05);
  // interquartile range of ln PD for a normal with sd 1 is 1.349
  const double iqr = std::log(sample_quantile(pds, 0.75)) - std::log(sample_quantile(pds, 0.25));
  EXPECT_NEAR(iqr, 1.349, 0.03);
  for (double p : pds) {
    EXPECT_GE(p, 1e-6);
    EXPECT_LE(p, pd_max(kStudy) - 1e-6);
  }
}

TEST(MonteCarlo, PortfolioDegenerateAndDeterministic) {
  for (double p : simulate_portfolio({500, 0.01, 0.0, 3}, kStudy)) EXPECT_DOUBLE_EQ(p, 0.01);
  const auto a = simulate_portfolio({1000, 0.005, 1.0, 9}, kStudy);
  EXPECT_EQ(a, simulate_portfolio({1000, 0.005, 1.0, 9}, kStudy));
  EXPECT_NE(a, simulate_portfolio({1000, 0.005, 1.0, 10}, kStudy));
  // growing the portfolio leaves existing obligors untouched
  const auto b = simulate_portfolio({1500, 0.005, 1.0, 9}, kStudy);
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  EXPECT_THROW(simulate_portfolio({0, 0.005, 1.0, 9}, kStudy), ParameterError);
  EXPECT_THROW(simulate_portfolio({10, 1.5, 1.0, 9}, kStudy), ParameterError);
}

TEST(MonteCarlo, PathsAreAbsorbingAndDeterministic) {
  const auto init = simulate_portfolio({3000, 0.02, 1.0, 4}, kStudy);
  const auto p = simulate_paths(init, kStudy, 10, 8, 1);
  int defaults = 0;
  for (std::size_t i = 0; i < p.obligors(); ++i) {
    EXPECT_EQ(p.pd(i, 0), init[i]);
    const int d = p.default_year(i);
    defaults += d != 0;
    for (int y = 1; y <= 10; ++y) {
      EXPECT_EQ(p.defaulted_by(i, y), d != 0 && y >= d);
      if (p.defaulted_by(i, y)) EXPECT_EQ(p.pd(i, y), kDefaultPd);
      else EXPECT_LT(p.pd(i, y), pd_max(kStudy));
    }
  }
  EXPECT_GT(defaults, 0);
  const auto again = simulate_paths(init, kStudy, 10, 8, 3);
  for (std::size_t i = 0; i < p.obligors(); ++i)
    for (int y = 0; y <= 10; ++y) ASSERT_EQ(p.pd(i, y), again.pd(i, y));
}

TEST(MonteCarlo, StrongProcessRarelyDefaults) {
  // PD_max is about 4e-6 here and the drift pulls PDs further down
  const std::vector<double> init(2000, 1e-8);
  const auto p = simulate_paths(init, {40.0, 0.999, 3.5}, 10, 2);
  for (std::size_t i = 0; i < p.obligors(); ++i) EXPECT_EQ(p.default_year(i), 0);
}

TEST(MonteCarlo, RejectsUnhostableInitialPd) {
  EXPECT_THROW(simulate_paths({0.01, 0.2}, kStudy, 3, 1), ModelDomainError);
  EXPECT_THROW(simulate_paths({0.01}, kStudy, 0, 1), ParameterError);
}

TEST(MonteCarlo, OneYearDefaultFrequencyIsThePd) {
  // 10^6 obligors in five PD buckets
  const std::vector<double> buckets{0.0005, 0.003, 0.01, 0.04, 0.12};
  const std::size_t per = 200000;
  std::vector<double> init;
  for (double b : buckets) init.insert(init.end(), per, b);
  const auto p = simulate_paths(init, kStudy, 1, 12);
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    std::size_t d = 0;
    for (std::size_t i = k * per; i < (k + 1) * per; ++i) d += p.defaulted_by(i, 1);
    const double freq = static_cast<double>(d) / per;
    EXPECT_NEAR(freq, buckets[k], 3.0 * oracle::binomial_se(buckets[k], per)) << buckets[k];
  }
}

TEST(MonteCarlo, SurvivorLawMatchesConditionalCdf) {
  // Kolmogorov distance of one-step survivor PDs against the analytical law
  const double p0 = 0.01;
  const std::vector<double> init(100000, p0);
  const auto p = simulate_paths(init, kStudy, 1, 13);
  std::vector<double> next;
  for (std::size_t i = 0; i < p.obligors(); ++i)
    if (!p.defaulted_by(i, 1)) next.push_back(p.pd(i, 1));
  std::sort(next.begin(), next.end());
  const double n = static_cast<double>(next.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double model = future_pd_cdf(next[i], p0, kStudy) / (1.0 - p0);
    ks = std::max({ks, std::abs(model - i / n), std::abs(model - (i + 1) / n)});
  }
  // pointwise MC error is at most 0.5 / sqrt(n)
  EXPECT_LE(ks, 3.0 * 0.5 / std::sqrt(n));
}

TEST(MonteCarlo, SampleQuantileIsType7) {
  EXPECT_DOUBLE_EQ(sample_quantile({4.0, 1.0, 3.0, 2.0}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(sample_quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sample_quantile({4.0, 1.0, NAN, 3.0, 2.0}, 1.0), 4.0);
  EXPECT_TRUE(std::isnan(sample_quantile({}, 0.5)));
}

TEST(MonteCarlo, StudyReportShape) {
  const auto cfg = small_study();
  const auto r = run_study(cfg);
  ASSERT_EQ(r.true_cpd.size(), 20u);
  std::size_t total = 0;
  for (auto n : r.obligors_per_rating) total += n;
  EXPECT_EQ(total, cfg.population);
  EXPECT_EQ(r.samples_drawn, cfg.n_samples);
  EXPECT_GE(r.structural_failures, 0);
  for (std::size_t k = 0; k < 20; ++k)
    for (int h = 0; h < cfg.horizon; ++h) {
      if (h > 0 && r.obligors_per_rating[k] > 0) EXPECT_GE(r.true_cpd[k][h], r.true_cpd[k][h - 1]);
      for (const auto* s : {&r.empirical, &r.structural}) {
        EXPECT_LE(s->p25[k][h], s->median[k][h]);
        EXPECT_LE(s->median[k][h], s->p75[k][h]);
      }
    }
  // every year-1 survivor's move is counted once, defaults excluded
  EXPECT_GT(r.large_counts->total(), static_cast<std::int64_t>(cfg.population * 9 / 10));
}

TEST(MonteCarlo, StudyIsReproducible) {
  auto cfg = small_study();
  const auto a = run_study(cfg);
  cfg.threads = 4;
  const auto b = run_study(cfg);
  EXPECT_TRUE(same(a.true_cpd, b.true_cpd));
  EXPECT_EQ(a.large_fit.params, b.large_fit.params);
  EXPECT_TRUE(same(a.empirical.p75, b.empirical.p75));
  EXPECT_TRUE(same(a.structural.median, b.structural.median));
  EXPECT_EQ(a.structural_failures, b.structural_failures);
}

TEST(MonteCarlo, LargePortfolioPredictorsAgree) {
  // empirical and structural projections from all transitions of a large portfolio
  auto cfg = small_study();
  cfg.population = 100000;
  cfg.n_samples = 1;
  const auto r = run_study(cfg);
  int close = 0, populated = 0;
  for (std::size_t k = 0; k < 20; ++k) {
    if (r.large_counts->row_total(k) < 1000) continue;
    ++populated;
    const double e = r.large_empirical.fpd[k][9], s = r.large_structural.fpd[k][9];
    close += std::abs(s - e) <= 0.2 * e;
  }
  EXPECT_GE(populated, 8);
  EXPECT_GE(close, populated - 1);
  // the fitted parameters stay in the realistic ranges
  EXPECT_GT(r.large_fit.params.a1, 0.7);
  EXPECT_LT(r.large_fit.params.a1, 0.95);
  EXPECT_GT(r.large_fit.params.df, 2.0);
  EXPECT_LT(r.large_fit.params.df, 5.0);
}

TEST(MonteCarlo, WholePopulationSampleTracksTruth) {
  auto cfg = small_study();
  cfg.population = 50000;
  cfg.n_samples = 1;
  cfg.sample_size = cfg.population;
  const auto r = run_study(cfg);
  for (std::size_t k = 0; k < 20; ++k) {
    if (r.obligors_per_rating[k] < 2000) continue;
    const double t = r.true_cpd[k][9];
    EXPECT_NEAR(r.empirical.median[k][9], t, 0.25 * t) << "rating " << k + 1;
    EXPECT_NEAR(r.structural.median[k][9], t, 0.25 * t) << "rating " << k + 1;
  }
}

TEST(MonteCarlo, StudyValidation) {
  auto cfg = small_study();
  cfg.horizon = 1;
  EXPECT_THROW(run_study(cfg), ParameterError);
  cfg = small_study();
  cfg.n_samples = 0;
  EXPECT_THROW(run_study(cfg), ParameterError);
}
