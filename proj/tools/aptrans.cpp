// Command-line front end. Exit codes: 0 success, 2 input error,
// 3 non-convergence, 4 model-domain violation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "aptrans/aptrans.hpp"
#include "aptrans/io.hpp"

namespace {

using namespace aptrans;
using Config = std::vector<std::pair<std::string, std::string>>;

enum Exit { kOk = 0, kInput = 2, kConvergence = 3, kModelDomain = 4 };

struct Options {
  std::string input, scale, params, output, cashflows;
  std::string regime = "auto";
  std::string direction = "upgrade";
  std::string weighting = "obligor";
  std::string initial = "assigned";
  std::string format = "continuous";
  int horizon = 10;
  int granularity = 1;
  std::uint64_t seed = 20170701;
  int starts = 3;
  int max_iterations = 2000;
  std::optional<double> fixed_df;
  std::optional<double> target_rate;
  std::optional<int> rating;
  unsigned threads = 0;
  // simulate / study / scale
  std::size_t obligors = 10000;
  double pd_median = 0.005;
  double pd_dispersion = 1.0;
  int n_ratings = 20;
  double pd_floor = 3e-5;
  double pd_ceiling = 0.15;
  int samples = 100;
  std::size_t sample_size = 100;
  std::size_t population = 100000;
};

std::string name_of(const std::string& path) { return std::filesystem::path(path).filename().string(); }

void emit(const Options& o, const std::string& text) {
  if (o.output.empty() || o.output == "-") std::cout << text;
  else io::write_file(o.output, text);
}

FitOptions fit_options(const Options& o) {
  FitOptions f;
  f.n_starts = o.starts;
  f.seed = o.seed;
  f.fixed_df = o.fixed_df;
  f.max_iterations = o.max_iterations;
  return f;
}

InitialPd initial_of(const std::string& s) {
  if (s == "assigned") return InitialPd::assigned;
  if (s == "mid") return InitialPd::mid;
  throw ParameterError("--initial must be 'assigned' or 'mid'");
}

int cmd_fit(const Options& o) {
  const auto table = io::parse_csv(io::read_file(o.input));
  io::Regime regime;
  if (o.regime == "auto") {
    const auto r = io::detect_regime(table);
    if (!r) throw DataError("cannot detect regime from CSV header; use --regime");
    regime = *r;
  } else {
    const auto r = io::regime_from_string(o.regime);
    if (!r) throw ParameterError("--regime must be auto, continuous, interval or counts");
    regime = *r;
  }
  TransitionDataset data;
  switch (regime) {
    case io::Regime::continuous: data = io::continuous_from_csv(table); break;
    case io::Regime::interval: data = io::interval_from_csv(table); break;
    case io::Regime::counts:
      if (o.scale.empty()) throw ParameterError("counts regime needs --scale");
      data = io::counts_from_csv(table, io::load_scale(o.scale));
      break;
  }
  const auto fo = fit_options(o);
  io::json cfg;
  cfg["command"] = "fit";
  cfg["input"] = name_of(o.input);
  if (!o.scale.empty()) cfg["scale"] = name_of(o.scale);
  cfg["regime"] = io::to_string(regime);
  cfg["starts"] = fo.n_starts;
  cfg["seed"] = fo.seed;
  cfg["fixed_df"] = fo.fixed_df ? io::json(*fo.fixed_df) : io::json(nullptr);
  cfg["max_iterations"] = fo.max_iterations;
  cfg["ll_tolerance"] = fo.ll_tolerance;
  try {
    const auto r = fit(data, fo);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    emit(o, io::dump(io::fit_json(r, cfg)));
    return kOk;
  } catch (const BasicConvergenceError<ProcessParams>& e) {
    emit(o, io::dump(io::fit_json(e.best_so_far(), cfg)));
    throw;
  }
}

int cmd_matrix(const Options& o) {
  if (o.scale.empty()) throw ParameterError("matrix needs --scale");
  const auto scale = io::load_scale(o.scale);
  Config cfg{{"command", "matrix"}, {"scale", name_of(o.scale)}};
  TransitionMatrix m(scale.size());
  if (!o.params.empty()) {
    const auto p = io::load_params(o.params);
    m = regularized_matrix(p, scale, {initial_of(o.initial)});
    cfg.insert(cfg.end(), {{"kind", "regularized"}, {"params", name_of(o.params)}, {"initial", o.initial}});
  } else if (!o.input.empty()) {
    const auto counts = io::counts_from_csv(io::parse_csv(io::read_file(o.input)), scale);
    m = empirical_matrix(counts, scale.assigned_pds());
    cfg.insert(cfg.end(), {{"kind", "empirical"}, {"input", name_of(o.input)}});
  } else {
    throw ParameterError("matrix needs --params (regularized) or --input counts (empirical)");
  }
  emit(o, io::comment_block(cfg) + io::matrix_csv(m));
  return kOk;
}

int cmd_project(const Options& o) {
  if (o.horizon < 1) throw ParameterError("--horizon must be >= 1");
  if (o.granularity < 1) throw ParameterError("--granularity must be >= 1");
  Config cfg{{"command", "project"}, {"horizon", std::to_string(o.horizon)}};
  PowerDiagnostics diag;
  MultiYearMetrics m;
  if (!o.input.empty()) {
    if (o.granularity != 1) throw ParameterError("--granularity needs --params and --scale, not a matrix file");
    m = multi_year_metrics(io::matrix_from_csv(io::parse_csv(io::read_file(o.input))), o.horizon, &diag);
    cfg.emplace_back("input", name_of(o.input));
  } else if (!o.params.empty() && !o.scale.empty()) {
    m = project_regularized(io::load_params(o.params), io::load_scale(o.scale), o.horizon, o.granularity, &diag);
    cfg.insert(cfg.end(), {{"params", name_of(o.params)}, {"scale", name_of(o.scale)}});
  } else {
    throw ParameterError("project needs --input matrix or --params with --scale");
  }
  cfg.emplace_back("granularity", std::to_string(o.granularity));
  cfg.emplace_back("renormalized_rows", std::to_string(diag.renormalized.size()));
  for (const auto& [power, row] : diag.renormalized)
    std::cerr << "note: renormalized row " << row + 1 << " at power " << power << "\n";
  emit(o, io::comment_block(cfg) + io::metrics_csv(m));
  return kOk;
}

int cmd_ecl(const Options& o) {
  if (o.input.empty() || o.cashflows.empty()) throw ParameterError("ecl needs --input metrics and --cashflows");
  const auto metrics = io::metrics_from_csv(io::parse_csv(io::read_file(o.input)));
  const auto cf = io::cashflows_from_csv(io::parse_csv(io::read_file(o.cashflows)));
  Config cfg{{"command", "ecl"}, {"input", name_of(o.input)}, {"cashflows", name_of(o.cashflows)}};
  std::string out = "rating,ecl\n";
  std::size_t first = 0, last = metrics.n_ratings();
  if (o.rating) {
    if (*o.rating < 1 || static_cast<std::size_t>(*o.rating) > metrics.n_ratings())
      throw ParameterError("--rating out of range");
    first = static_cast<std::size_t>(*o.rating - 1);
    last = first + 1;
    cfg.emplace_back("rating", std::to_string(*o.rating));
  }
  for (std::size_t r = first; r < last; ++r) out += std::to_string(r + 1) + "," + io::fmt12(ecl(metrics, r, cf)) + "\n";
  emit(o, io::comment_block(cfg) + out);
  return kOk;
}

int cmd_macro(const Options& o) {
  if (o.params.empty() || o.input.empty() || !o.target_rate)
    throw ParameterError("macro-adjust needs --params, --input portfolio and --target-rate");
  const auto params = io::load_params(o.params);
  const auto table = io::parse_csv(io::read_file(o.input));
  if (table.header != std::vector<std::string>{"pd"}) throw DataError("portfolio: header must be 'pd'");
  MacroTarget target;
  target.target_rate = *o.target_rate;
  if (o.direction == "upgrade") target.direction = RateDirection::upgrade;
  else if (o.direction == "downgrade") target.direction = RateDirection::downgrade;
  else throw ParameterError("--direction must be 'upgrade' or 'downgrade'");
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    target.portfolio_pds.push_back(io::detail::to_double(table.rows[i][0], table.line_numbers[i], "pd"));
  MacroAdjustOptions mo;
  std::optional<RatingScale> scale;
  if (o.weighting == "rating") {
    if (o.scale.empty()) throw ParameterError("--weighting rating needs --scale");
    scale = io::load_scale(o.scale);
    mo.weighting = RateWeighting::rating;
    mo.scale = &*scale;
  } else if (o.weighting != "obligor") {
    throw ParameterError("--weighting must be 'obligor' or 'rating'");
  }
  const auto adjusted = adjust_a0(params, target, mo);
  io::json doc = io::params_json(adjusted);
  io::json cfg;
  cfg["command"] = "macro-adjust";
  cfg["params"] = name_of(o.params);
  cfg["input"] = name_of(o.input);
  cfg["target_rate"] = target.target_rate;
  cfg["direction"] = o.direction;
  cfg["weighting"] = o.weighting;
  cfg["original_a0"] = io::round12(params.a0);
  cfg["achieved_rate"] =
      io::round12(implied_rate(adjusted, target.portfolio_pds, target.direction, mo.weighting, mo.scale));
  doc["config"] = cfg;
  emit(o, io::dump(doc));
  return kOk;
}

int cmd_simulate(const Options& o) {
  const auto params = o.params.empty() ? ProcessParams{} : io::load_params(o.params);
  if (o.horizon < 1) throw ParameterError("--horizon must be >= 1");
  const auto initial = simulate_portfolio({o.obligors, o.pd_median, o.pd_dispersion, o.seed}, params);
  const auto paths = simulate_paths(initial, params, o.horizon, o.seed, o.threads);
  Config cfg{{"command", "simulate"},
             {"a0", io::fmt12(params.a0)},
             {"a1", io::fmt12(params.a1)},
             {"df", io::fmt12(params.df)},
             {"obligors", std::to_string(o.obligors)},
             {"pd_median", io::fmt12(o.pd_median)},
             {"pd_dispersion", io::fmt12(o.pd_dispersion)},
             {"horizon", std::to_string(o.horizon)},
             {"seed", std::to_string(o.seed)},
             {"format", o.format}};
  // One-year transitions observed between the last two simulated years among survivors.
  const int y1 = o.horizon - 1;
  std::vector<ContinuousTransition> moves;
  for (std::size_t i = 0; i < paths.obligors(); ++i)
    if (!paths.defaulted_by(i, y1)) moves.push_back({paths.pd(i, y1), paths.pd(i, y1 + 1)});
  if (o.format == "continuous") {
    emit(o, io::comment_block(cfg) + io::continuous_csv(moves));
  } else if (o.format == "counts") {
    if (o.scale.empty()) throw ParameterError("--format counts needs --scale");
    const auto scale = io::load_scale(o.scale);
    CountMatrix c(scale);
    for (const auto& m : moves)
      if (!m.is_default()) ++c(band_of_pd(m.pd_from, scale), band_of_pd(m.pd_to, scale));
    cfg.emplace_back("scale", name_of(o.scale));
    emit(o, io::comment_block(cfg) + io::counts_csv(c));
  } else {
    throw ParameterError("--format must be 'continuous' or 'counts'");
  }
  return kOk;
}

int cmd_scale(const Options& o) {
  emit(o, io::dump(io::scale_json(make_log_scale(o.n_ratings, o.pd_floor, o.pd_ceiling))));
  return kOk;
}

int cmd_study(const Options& o) {
  StudyConfig sc;
  if (!o.params.empty()) sc.params = io::load_params(o.params);
  if (!o.scale.empty()) sc.scale = io::load_scale(o.scale);
  sc.population = o.population;
  sc.pd_median = o.pd_median;
  sc.pd_log_dispersion = o.pd_dispersion;
  sc.horizon = o.horizon;
  sc.n_samples = o.samples;
  sc.sample_size = o.sample_size;
  sc.seed = o.seed;
  sc.fit = fit_options(o);
  sc.threads = o.threads;
  const auto rep = run_study(sc);
  Config cfg{{"command", "study"},
             {"a0", io::fmt12(sc.params.a0)},
             {"a1", io::fmt12(sc.params.a1)},
             {"df", io::fmt12(sc.params.df)},
             {"ratings", std::to_string(sc.scale.size())},
             {"scale", o.scale.empty() ? "default" : name_of(o.scale)},
             {"population", std::to_string(sc.population)},
             {"pd_median", io::fmt12(sc.pd_median)},
             {"pd_dispersion", io::fmt12(sc.pd_log_dispersion)},
             {"horizon", std::to_string(sc.horizon)},
             {"samples", std::to_string(sc.n_samples)},
             {"sample_size", std::to_string(sc.sample_size)},
             {"seed", std::to_string(sc.seed)},
             {"starts", std::to_string(sc.fit.n_starts)},
             {"large_fit", io::fmt12(rep.large_fit.params.a0) + "/" + io::fmt12(rep.large_fit.params.a1) + "/" +
                               io::fmt12(rep.large_fit.params.df)},
             {"structural_failures", std::to_string(rep.structural_failures)}};
  emit(o, io::comment_block(cfg) + io::study_csv(rep));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ability-to-pay rating transition toolkit"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c) {
    c->add_option("--output", o.output, "Output file (default stdout)");
    c->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    c->add_option("--threads", o.threads, "Worker threads (0 = APTRANS_THREADS or hardware)");
  };
  auto* fit_cmd = app.add_subcommand("fit", "Estimate (a0, a1, df) from transitions");
  fit_cmd->add_option("--input", o.input, "Transitions or counts CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--scale", o.scale, "Scale document (counts regime)")->check(CLI::ExistingFile);
  fit_cmd->add_option("--regime", o.regime, "auto|continuous|interval|counts")->capture_default_str();
  fit_cmd->add_option("--starts", o.starts, "Number of optimizer starts")->capture_default_str();
  fit_cmd->add_option("--fixed-df", o.fixed_df, "Hold df fixed");
  fit_cmd->add_option("--max-iterations", o.max_iterations, "Optimizer iteration cap per start")->capture_default_str();
  common(fit_cmd);

  auto* matrix_cmd = app.add_subcommand("matrix", "Regularized or empirical one-year matrix");
  matrix_cmd->add_option("--params", o.params, "Params document")->check(CLI::ExistingFile);
  matrix_cmd->add_option("--input", o.input, "Counts CSV (empirical matrix)")->check(CLI::ExistingFile);
  matrix_cmd->add_option("--scale", o.scale, "Scale document")->check(CLI::ExistingFile);
  matrix_cmd->add_option("--initial", o.initial, "Row PD: assigned|mid")->capture_default_str();
  common(matrix_cmd);

  auto* project_cmd = app.add_subcommand("project", "Multi-year cpd/sp/mpd/fpd");
  project_cmd->add_option("--input", o.input, "Matrix CSV")->check(CLI::ExistingFile);
  project_cmd->add_option("--params", o.params, "Params document")->check(CLI::ExistingFile);
  project_cmd->add_option("--scale", o.scale, "Scale document")->check(CLI::ExistingFile);
  project_cmd->add_option("--horizon", o.horizon, "Years")->capture_default_str();
  project_cmd->add_option("--granularity", o.granularity, "Sub-bands per rating for the projection")
      ->capture_default_str();
  common(project_cmd);

  auto* ecl_cmd = app.add_subcommand("ecl", "Lifetime expected credit loss");
  ecl_cmd->add_option("--input", o.input, "Metrics CSV")->check(CLI::ExistingFile);
  ecl_cmd->add_option("--cashflows", o.cashflows, "CSV year,ead,lgd,discount")->check(CLI::ExistingFile);
  ecl_cmd->add_option("--rating", o.rating, "Single initial rating (default all)");
  common(ecl_cmd);

  auto* macro_cmd = app.add_subcommand("macro-adjust", "Shift a0 to hit an upgrade/downgrade rate");
  macro_cmd->add_option("--params", o.params, "Params document")->check(CLI::ExistingFile);
  macro_cmd->add_option("--input", o.input, "Portfolio CSV with column pd")->check(CLI::ExistingFile);
  macro_cmd->add_option("--target-rate", o.target_rate, "Target rate in (0,1)");
  macro_cmd->add_option("--direction", o.direction, "upgrade|downgrade")->capture_default_str();
  macro_cmd->add_option("--weighting", o.weighting, "obligor|rating")->capture_default_str();
  macro_cmd->add_option("--scale", o.scale, "Scale document (rating weighting)")->check(CLI::ExistingFile);
  common(macro_cmd);

  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a portfolio and emit one-year transitions");
  sim_cmd->add_option("--params", o.params, "Params document (default 1.2/0.8/3.5)")->check(CLI::ExistingFile);
  sim_cmd->add_option("--obligors", o.obligors, "Portfolio size")->capture_default_str();
  sim_cmd->add_option("--median", o.pd_median, "Median initial PD")->capture_default_str();
  sim_cmd->add_option("--dispersion", o.pd_dispersion, "Std dev of ln PD")->capture_default_str();
  sim_cmd->add_option("--horizon", o.horizon, "Transitions are taken between years horizon-1 and horizon")
      ->capture_default_str();
  sim_cmd->add_option("--format", o.format, "continuous|counts")->capture_default_str();
  sim_cmd->add_option("--scale", o.scale, "Scale document (counts format)")->check(CLI::ExistingFile);
  common(sim_cmd);

  auto* scale_cmd = app.add_subcommand("scale", "Write a log-spaced master scale document");
  scale_cmd->add_option("--ratings", o.n_ratings, "Number of ratings")->capture_default_str();
  scale_cmd->add_option("--floor", o.pd_floor, "Lowest band edge")->capture_default_str();
  scale_cmd->add_option("--ceiling", o.pd_ceiling, "Highest band edge")->capture_default_str();
  scale_cmd->add_option("--output", o.output, "Output file (default stdout)");

  auto* study_cmd = app.add_subcommand("study", "Empirical vs structural benchmark study");
  study_cmd->add_option("--params", o.params, "Params document (default 1.2/0.8/3.5)")->check(CLI::ExistingFile);
  study_cmd->add_option("--scale", o.scale, "Scale document (default 20 log ratings)")->check(CLI::ExistingFile);
  study_cmd->add_option("--population", o.population, "Obligors")->capture_default_str();
  study_cmd->add_option("--median", o.pd_median, "Median initial PD")->capture_default_str();
  study_cmd->add_option("--dispersion", o.pd_dispersion, "Std dev of ln PD")->capture_default_str();
  study_cmd->add_option("--horizon", o.horizon, "Years")->capture_default_str();
  study_cmd->add_option("--samples", o.samples, "Number of small samples")->capture_default_str();
  study_cmd->add_option("--sample-size", o.sample_size, "Transitions per sample")->capture_default_str();
  study_cmd->add_option("--starts", o.starts, "Optimizer starts per fit")->capture_default_str();
  study_cmd->add_option("--fixed-df", o.fixed_df, "Hold df fixed in every fit");
  common(study_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  try {
    if (*fit_cmd) return cmd_fit(o);
    if (*matrix_cmd) return cmd_matrix(o);
    if (*project_cmd) return cmd_project(o);
    if (*ecl_cmd) return cmd_ecl(o);
    if (*macro_cmd) return cmd_macro(o);
    if (*sim_cmd) return cmd_simulate(o);
    if (*scale_cmd) return cmd_scale(o);
    if (*study_cmd) return cmd_study(o);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConvergence;
  } catch (const ModelDomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kModelDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kInput;
}
