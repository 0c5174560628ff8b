#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ppmm/csv.hpp"
#include "ppmm/engine.hpp"
#include "ppmm/experiments.hpp"
#include "ppmm/gaussian_oracle.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using namespace ppmm;

namespace {

/// Placeholder so --config shows up in help; the file is expanded into
/// argument tokens before CLI11 parses (see expand_config_args).
void add_config_help(CLI::App* cmd) {
  static std::string sink;
  cmd->add_option("--config", sink,
                  "key=value file, one key per line, # comments; explicit "
                  "flags win");
}

/// Rewrites the argument list: --config FILE is removed and each key=value
/// line of FILE becomes a trailing --key=value token unless the same flag
/// was passed explicitly.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return args;

  auto explicitly_set = [&](const std::string& key) {
    const std::string flag = "--" + key;
    const std::string negated = "--no-" + key;
    for (const auto& a : args) {
      if (a == flag || a == negated || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };

  for (const auto& raw_line : csv::split(csv::read_file(config_path), '\n')) {
    std::string line = csv::trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line is not key=value: " + line);
    const std::string key = csv::trim(line.substr(0, eq));
    const std::string value = csv::trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config line has empty key: " + line);
    if (!explicitly_set(key)) args.push_back("--" + key + "=" + value);
  }
  return args;
}

struct ExperimentOptions {
  ExperimentSpec spec;
  std::vector<std::string> method_names;
  int slices = 10;
  bool mean_adjust = false;
  std::string weights = "uniform";
  std::string out_dir = "results";
};

/// Binds the shared experiment flags to a subcommand. Every flag is also a
/// config-file key (flag wins over file).
void add_experiment_options(CLI::App* cmd, ExperimentOptions& opt,
                            bool multi_method) {
  cmd->add_option("--name", opt.spec.name, "Experiment name used in file names");
  cmd->add_option("--dims", opt.spec.dims, "Dimension(s) to run, e.g. 5,10,15")
      ->delimiter(',');
  cmd->add_option("--n", opt.spec.n, "Source sample size");
  cmd->add_option("--n-y", opt.spec.n_y, "Target sample size (0 = same as --n)");
  cmd->add_option("--mu-x", opt.spec.mu_x, "Source mean (every coordinate)");
  cmd->add_option("--mu-y", opt.spec.mu_y, "Target mean (every coordinate)");
  cmd->add_option("--rho-x", opt.spec.rho_x, "Source ar1 correlation");
  cmd->add_option("--rho-y", opt.spec.rho_y, "Target ar1 correlation");
  cmd->add_option("--reps", opt.spec.replications, "Replications per cell");
  cmd->add_option("--seed", opt.spec.base_seed,
                  "Base seed; replication r uses base+r");
  cmd->add_option("--weights", opt.weights,
                  "Weight scheme: uniform | random")
      ->check(CLI::IsMember({"uniform", "random"}));
  auto* m = cmd->add_option("--method", opt.method_names,
                            "Strategy: ppmm | random | sliced (repeatable)");
  if (!multi_method) m->expected(0, 1);
  cmd->add_option("--slices", opt.slices, "Slice count for the sliced strategy");
  cmd->add_flag("--mean-adjust,!--no-mean-adjust", opt.mean_adjust,
                "Transport the mean gap before second-moment matching");
  cmd->add_option("--max-iter", opt.spec.engine.max_iterations,
                  "Iteration cap");
  cmd->add_option("--tol", opt.spec.engine.tolerance,
                  "Relative-change termination threshold");
  cmd->add_option("--p", opt.spec.engine.p, "Cost order");
  cmd->add_option("--ridge", opt.spec.engine.ridge,
                  "Relative eigenvalue floor for whitening");
  cmd->add_option("--out", opt.out_dir, "Output directory");
  add_config_help(cmd);
}

Strategy make_strategy(const std::string& name, const ExperimentOptions& opt) {
  StrategyKind kind = strategy_kind_from_name(name);
  switch (kind) {
    case StrategyKind::ppmm: return Strategy::ppmm(opt.mean_adjust);
    case StrategyKind::random: return Strategy::random();
    case StrategyKind::sliced: return Strategy::sliced(opt.slices);
  }
  throw std::logic_error("unreachable");
}

ExperimentSpec finalize_spec(ExperimentOptions& opt,
                             const std::string& default_method) {
  if (opt.method_names.empty()) opt.method_names = {default_method};
  opt.spec.methods.clear();
  for (const auto& name : opt.method_names)
    opt.spec.methods.push_back(make_strategy(name, opt));
  opt.spec.weights = opt.weights == "random" ? WeightScheme::random_weights
                                             : WeightScheme::uniform;
  return opt.spec;
}

int cmd_simulate(ExperimentOptions& opt) {
  ExperimentSpec spec = finalize_spec(opt, "ppmm");
  auto result = run_convergence_experiment(spec, opt.out_dir);
  for (const auto& [d, truth] : result.per_dim_truth)
    std::printf("d=%d ground_truth_w2=%s\n", d, csv::format_double(truth).c_str());
  for (const auto& c : result.cells) {
    if (c.ok)
      std::printf("d=%d method=%s rep=%d iterations=%zu final_w=%s termination=%s\n",
                  c.dim, c.method.c_str(), c.replication, c.trace.records.size(),
                  csv::format_double(c.trace.final_w_displacement()).c_str(),
                  termination_reason_name(c.trace.termination_reason).c_str());
    else
      std::printf("d=%d method=%s rep=%d status=failed error=%s\n", c.dim,
                  c.method.c_str(), c.replication, c.error.c_str());
  }
  std::printf("out=%s\n", opt.out_dir.c_str());
  return 0;
}

int cmd_timing(ExperimentOptions& opt) {
  ExperimentSpec spec = finalize_spec(opt, "ppmm");
  auto result = run_timing_experiment(spec, opt.out_dir);
  for (const auto& r : result.rows)
    std::printf(
        "d=%d method=%s mean_iteration_ms=%.4f sd_iteration_ms=%.4f "
        "mean_total_ms=%.3f sd_total_ms=%.3f mean_iterations=%.1f\n",
        r.dim, r.method.c_str(), r.mean_iteration_ms, r.sd_iteration_ms,
        r.mean_total_ms, r.sd_total_ms, r.mean_iterations);
  std::printf("out=%s\n", opt.out_dir.c_str());
  return 0;
}

int cmd_kvd(ExperimentOptions& opt) {
  ExperimentSpec spec = finalize_spec(opt, "ppmm");
  auto result = run_k_vs_d_experiment(spec, opt.out_dir);
  for (const auto& r : result.rows)
    std::printf("d=%d mean_k=%.2f sd_k=%.2f\n", r.dim, r.mean_k, r.sd_k);
  std::printf("slope=%s intercept=%s r_squared=%s\n",
              csv::format_double(result.slope).c_str(),
              csv::format_double(result.intercept).c_str(),
              csv::format_double(result.r_squared).c_str());
  std::printf("out=%s\n", opt.out_dir.c_str());
  return 0;
}

int cmd_extension(ExperimentOptions& opt) {
  ExperimentSpec spec = finalize_spec(opt, "ppmm");
  auto result = run_extension_experiment(spec, opt.out_dir);
  for (const auto& c : result.cells) {
    std::printf("rep=%d final_w=%s oracle_w=%s status=%s\n", c.replication,
                csv::format_double(c.final_w).c_str(),
                c.oracle_w ? csv::format_double(*c.oracle_w).c_str() : "nan",
                c.status.c_str());
  }
  std::printf("out=%s\n", opt.out_dir.c_str());
  return 0;
}

struct FitOptions {
  std::string x_path, y_path;
  std::string out_dir = "estimate";
  std::optional<std::string> weight_column;
  std::string method = "ppmm";
  int slices = 10;
  bool mean_adjust = false;
  EngineConfig engine;
};

int cmd_fit(FitOptions& opt) {
  Sample x = load_sample(opt.x_path, opt.weight_column);
  Sample y = load_sample(opt.y_path, opt.weight_column);
  ExperimentOptions shim;
  shim.slices = opt.slices;
  shim.mean_adjust = opt.mean_adjust;
  Strategy strategy = make_strategy(opt.method, shim);
  auto [estimate, trace] = fit(x, y, strategy, opt.engine);
  save_estimate(estimate, opt.out_dir);
  csv::write_file_atomic(fs::path(opt.out_dir) / "trace.csv", trace.to_csv());
  std::printf("iterations=%zu termination=%s final_w=%s out=%s\n",
              trace.records.size(),
              termination_reason_name(trace.termination_reason).c_str(),
              csv::format_double(trace.final_w_displacement()).c_str(),
              opt.out_dir.c_str());
  return 0;
}

struct EvalOptions {
  std::string estimate_dir, points_path;
  std::optional<std::string> weight_column;
  std::optional<std::string> out_path;
  int p = 2;
};

int cmd_eval(EvalOptions& opt) {
  MongeMapEstimate estimate = load_estimate(opt.estimate_dir);
  Sample points = load_sample(opt.points_path, opt.weight_column);
  Sample mapped = apply_map(estimate, points);
  const double w = empirical_wasserstein(points, mapped, opt.p);
  if (opt.out_path) save_sample(mapped, *opt.out_path, true);
  std::printf("w_hat=%s n=%lld d=%lld\n", csv::format_double(w).c_str(),
              static_cast<long long>(points.n()),
              static_cast<long long>(points.d()));
  return 0;
}

struct PlotOptions {
  std::string input;
  std::string out_path = "plot.svg";
  std::string x_col;
  std::vector<std::string> y_cols;
  std::string group_col;
  std::string title;
};

int cmd_plot(PlotOptions& opt) {
  std::string text = csv::read_file(opt.input);
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : csv::split(text, '\n')) {
    std::string t = csv::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = csv::split(t);
    if (header.empty())
      header.assign(fields.begin(), fields.end());
    else
      rows.push_back(fields);
  }
  if (header.empty()) throw std::runtime_error("empty input: " + opt.input);

  auto col_index = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (csv::trim(header[i]) == name) return int(i);
    throw std::runtime_error("column not found: " + name);
  };

  const int xi = col_index(opt.x_col.empty() ? header[0] : opt.x_col);
  std::vector<int> yis;
  if (opt.y_cols.empty()) {
    for (size_t i = 0; i < header.size(); ++i)
      if (int(i) != xi && !rows.empty()) {
        try {
          csv::parse_double(rows[0][i]);
          yis.push_back(int(i));
        } catch (...) {
        }
      }
  } else {
    for (const auto& name : opt.y_cols) yis.push_back(col_index(name));
  }
  if (yis.empty()) throw std::runtime_error("no numeric columns to plot");

  const int gi = opt.group_col.empty() ? -1 : col_index(opt.group_col);
  std::vector<plot::Series> series;
  std::map<std::string, size_t> index;
  for (const auto& row : rows) {
    const std::string group = gi >= 0 ? row[gi] : "";
    for (int yi : yis) {
      std::string key = group.empty() ? header[yi] : group + ":" + header[yi];
      if (!index.count(key)) {
        index[key] = series.size();
        series.push_back(plot::Series{key, {}, {}});
      }
      auto& s = series[index[key]];
      s.x.push_back(csv::parse_double(row[xi]));
      s.y.push_back(csv::parse_double(row[yi]));
    }
  }
  const std::string title =
      opt.title.empty() ? fs::path(opt.input).filename().string() : opt.title;
  csv::write_file_atomic(opt.out_path,
                         plot::render_line_chart(series, header[xi], title));
  std::printf("out=%s series=%zu\n", opt.out_path.c_str(), series.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Large-scale transport map estimation between empirical samples via "
      "projection pursuit, with baseline projection methods, exact oracles, "
      "and a simulation benchmark harness"};
  app.require_subcommand(1);

  ExperimentOptions sim_opt, tim_opt, kvd_opt, ext_opt;

  auto* sim = app.add_subcommand("simulate", "Convergence experiment");
  sim_opt.spec.name = "simulate";
  add_experiment_options(sim, sim_opt, true);

  auto* tim = app.add_subcommand("timing", "Per-iteration and total timing");
  tim_opt.spec.name = "timing";
  tim_opt.spec.engine.tolerance = 1e-5;
  add_experiment_options(tim, tim_opt, true);

  auto* kvd = app.add_subcommand("kvd", "Iterations-to-converge against dimension");
  kvd_opt.spec.name = "kvd";
  kvd_opt.spec.dims = {5, 10, 15, 20, 25, 30};
  kvd_opt.spec.engine.tolerance = 1e-5;
  kvd_opt.mean_adjust = true;
  add_experiment_options(kvd, kvd_opt, false);

  auto* ext = app.add_subcommand("extension",
                                 "Unequal sizes / random weights with LP oracle");
  ext_opt.spec.name = "extension";
  ext_opt.spec.dims = {5};
  ext_opt.spec.n = 60;
  ext_opt.spec.n_y = 20;
  ext_opt.weights = "random";
  ext_opt.spec.engine.tolerance = 1e-5;
  add_experiment_options(ext, ext_opt, false);

  FitOptions fit_opt;
  auto* fitc = app.add_subcommand("fit", "Fit a map between two CSV samples");
  fitc->add_option("x", fit_opt.x_path, "Source CSV")->required();
  fitc->add_option("y", fit_opt.y_path, "Target CSV")->required();
  fitc->add_option("--out", fit_opt.out_dir, "Estimate output directory");
  fitc->add_option("--weight-column", fit_opt.weight_column,
                   "Weight column name (default: a column named 'weight')");
  fitc->add_option("--method", fit_opt.method, "ppmm | random | sliced")
      ->check(CLI::IsMember({"ppmm", "random", "sliced"}));
  fitc->add_option("--slices", fit_opt.slices, "Slice count");
  fitc->add_flag("--mean-adjust,!--no-mean-adjust", fit_opt.mean_adjust,
                 "Transport the mean gap before second-moment matching");
  fitc->add_option("--max-iter", fit_opt.engine.max_iterations, "Iteration cap");
  fitc->add_option("--tol", fit_opt.engine.tolerance, "Termination threshold");
  fitc->add_option("--p", fit_opt.engine.p, "Cost order");
  fitc->add_option("--seed", fit_opt.engine.seed, "Seed for random directions");
  fitc->add_option("--ridge", fit_opt.engine.ridge, "Whitening eigenvalue floor");
  add_config_help(fitc);

  EvalOptions eval_opt;
  auto* evalc = app.add_subcommand("eval", "Apply an estimate to a CSV sample");
  evalc->add_option("estimate", eval_opt.estimate_dir, "Estimate directory")
      ->required();
  evalc->add_option("points", eval_opt.points_path, "Points CSV")->required();
  evalc->add_option("--weight-column", eval_opt.weight_column, "Weight column");
  evalc->add_option("--out", eval_opt.out_path, "Write mapped sample here");
  evalc->add_option("--p", eval_opt.p, "Cost order");

  auto* oracle = app.add_subcommand("oracle", "Ground-truth values");
  oracle->require_subcommand(1);
  int og_d = 10;
  double og_mux = -2.0, og_muy = 2.0, og_rhox = 0.8, og_rhoy = 0.5;
  auto* og = oracle->add_subcommand("gaussian", "Closed-form W2 for an ar1 pair");
  og->add_option("--dims", og_d, "Dimension");
  og->add_option("--mu-x", og_mux, "Source mean");
  og->add_option("--mu-y", og_muy, "Target mean");
  og->add_option("--rho-x", og_rhox, "Source ar1 correlation");
  og->add_option("--rho-y", og_rhoy, "Target ar1 correlation");
  std::string od_x, od_y;
  int od_p = 2;
  std::optional<std::string> od_wcol;
  auto* od = oracle->add_subcommand("discrete", "Exact LP cost for two CSVs");
  od->add_option("x", od_x, "Source CSV")->required();
  od->add_option("y", od_y, "Target CSV")->required();
  od->add_option("--p", od_p, "Cost order");
  od->add_option("--weight-column", od_wcol, "Weight column");

  PlotOptions plot_opt;
  auto* plotc = app.add_subcommand("plot", "Render a CSV as an SVG line chart");
  plotc->add_option("input", plot_opt.input, "CSV file")->required();
  plotc->add_option("--out", plot_opt.out_path, "SVG output path");
  plotc->add_option("--x", plot_opt.x_col, "X column (default: first)");
  plotc->add_option("--y", plot_opt.y_cols, "Y column(s) (default: numeric)");
  plotc->add_option("--group", plot_opt.group_col,
                    "Split series by this column's value");
  plotc->add_option("--title", plot_opt.title, "Chart title");

  try {
    std::vector<std::string> args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_opt);
    if (tim->parsed()) return cmd_timing(tim_opt);
    if (kvd->parsed()) return cmd_kvd(kvd_opt);
    if (ext->parsed()) return cmd_extension(ext_opt);
    if (fitc->parsed()) return cmd_fit(fit_opt);
    if (evalc->parsed()) return cmd_eval(eval_opt);
    if (og->parsed()) {
      GaussianSpec a{Eigen::VectorXd::Constant(og_d, og_mux),
                     ar1_covariance(og_d, og_rhox)};
      GaussianSpec b{Eigen::VectorXd::Constant(og_d, og_muy),
                     ar1_covariance(og_d, og_rhoy)};
      std::printf("w2=%s\n", csv::format_double(closed_form_w2(a, b)).c_str());
      return 0;
    }
    if (od->parsed()) {
      Sample x = load_sample(od_x, od_wcol);
      Sample y = load_sample(od_y, od_wcol);
      std::printf("w%d=%s\n", od_p,
                  csv::format_double(exact_discrete_w2(x, y, od_p)).c_str());
      return 0;
    }
    if (plotc->parsed()) return cmd_plot(plot_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
