#include "ppmm/engine.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ppmm/csv.hpp"

#include <nlohmann/json.hpp>

namespace ppmm {

namespace {

using nlohmann::json;

constexpr double kEpsAbs = 1e-12;  // guard for the relative-change denominator

double pow_root(double x, int p) { return std::pow(x, 1.0 / double(p)); }

/// Shared displacement application so that fitting and replay perform the
/// identical arithmetic.
Eigen::MatrixXd apply_group_points(const Eigen::MatrixXd& pts,
                                   const StepGroup& group) {
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(pts.rows(), pts.cols());
  for (const Step& step : group.slices) {
    const Eigen::VectorXd proj = pts * step.direction.vec;
    delta.noalias() +=
        (step.map.apply(proj) - proj) * step.direction.vec.transpose();
  }
  return pts + delta / double(group.slices.size());
}

void check_pair(const Sample& x, const Sample& y) {
  if (x.d() != y.d()) throw std::invalid_argument("samples have different dimensions");
}

/// True when every point of both samples coincides with the shared mean,
/// i.e. the transport is complete and no direction selection is possible.
bool transport_exhausted(const Sample& x, const Sample& y) {
  const Eigen::VectorXd center = 0.5 * (x.mean() + y.mean());
  const double scale =
      1.0 + std::max(x.points.cwiseAbs().maxCoeff(), y.points.cwiseAbs().maxCoeff());
  const double dev =
      std::max((x.points.rowwise() - center.transpose()).cwiseAbs().maxCoeff(),
               (y.points.rowwise() - center.transpose()).cwiseAbs().maxCoeff());
  return dev <= 1e-13 * scale;
}

}  // namespace

std::string strategy_kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::ppmm: return "ppmm";
    case StrategyKind::random: return "random";
    case StrategyKind::sliced: return "sliced";
  }
  throw std::logic_error("unreachable");
}

StrategyKind strategy_kind_from_name(const std::string& name) {
  if (name == "ppmm") return StrategyKind::ppmm;
  if (name == "random") return StrategyKind::random;
  if (name == "sliced") return StrategyKind::sliced;
  throw std::invalid_argument("unknown strategy: " + name);
}

void Strategy::validate() const {
  if (kind == StrategyKind::sliced && slices < 1)
    throw std::invalid_argument("sliced strategy needs slices >= 1");
}

std::string Strategy::label() const {
  if (kind == StrategyKind::sliced)
    return "sliced" + std::to_string(slices);
  return strategy_kind_name(kind);
}

void EngineConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (tolerance < 0.0) throw std::invalid_argument("tolerance must be >= 0");
  if (p < 1) throw std::invalid_argument("p must be a positive integer");
  if (ridge < 0.0) throw std::invalid_argument("ridge must be >= 0");
}

std::string termination_reason_name(TerminationReason r) {
  switch (r) {
    case TerminationReason::tolerance: return "tolerance";
    case TerminationReason::max_iterations: return "max_iterations";
    case TerminationReason::degenerate: return "degenerate";
  }
  throw std::logic_error("unreachable");
}

TerminationReason termination_reason_from_name(const std::string& name) {
  if (name == "tolerance") return TerminationReason::tolerance;
  if (name == "max_iterations") return TerminationReason::max_iterations;
  if (name == "degenerate") return TerminationReason::degenerate;
  throw std::invalid_argument("unknown termination reason: " + name);
}

std::string ConvergenceTrace::to_csv() const {
  std::string out = "# termination=" + termination_reason_name(termination_reason) + "\n";
  out += "iteration,w_hat_displacement,w_hat_direction_proxy,save_lambda1,elapsed_ms\n";
  for (const auto& r : records) {
    out += std::to_string(r.iteration) + ',' + csv::format_double(r.w_displacement) +
           ',' + csv::format_double(r.w_direction_proxy) + ',' +
           csv::format_double(r.save_lambda1) + ',' +
           csv::format_double(r.elapsed_ms) + '\n';
  }
  return out;
}

ConvergenceTrace ConvergenceTrace::from_csv(const std::string& text) {
  csv::Table t = csv::parse_table(text);
  ConvergenceTrace trace;
  for (const auto& c : t.comments) {
    auto pos = c.find("termination=");
    if (pos != std::string::npos)
      trace.termination_reason =
          termination_reason_from_name(csv::trim(c.substr(pos + 12)));
  }
  for (const auto& row : t.rows) {
    TraceRecord r;
    r.iteration = int(row.at(0));
    r.w_displacement = row.at(1);
    r.w_direction_proxy = row.at(2);
    r.save_lambda1 = row.at(3);
    r.elapsed_ms = row.at(4);
    trace.records.push_back(r);
  }
  return trace;
}

double empirical_wasserstein(const Sample& x, const Sample& y, int p) {
  if (x.n() != y.n() || x.d() != y.d())
    throw std::invalid_argument("empirical_wasserstein: shape mismatch");
  if ((x.weights - y.weights).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("empirical_wasserstein: samples must share weights");
  if (p < 1) throw std::invalid_argument("empirical_wasserstein: p must be >= 1");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    const double sq = (x.points.row(i) - y.points.row(i)).squaredNorm();
    if (p == 2)
      acc += x.weights[i] * sq;
    else if (p == 1)
      acc += x.weights[i] * std::sqrt(sq);
    else
      acc += x.weights[i] * std::pow(std::sqrt(sq), p);
  }
  return pow_root(acc, p);
}

std::pair<Sample, Map1D> ppmm_step(const Sample& x_current, const Sample& y,
                                   const Direction& direction) {
  check_pair(x_current, y);
  if (direction.d() != x_current.d())
    throw std::invalid_argument("ppmm_step: direction dimension mismatch");
  const Eigen::VectorXd u = x_current.points * direction.vec;
  const Eigen::VectorXd v = y.points * direction.vec;
  Map1D map = fit_1d_map(u, x_current.weights, v, y.weights);
  StepGroup group{{Step{direction, map}}};
  Eigen::MatrixXd updated = apply_group_points(x_current.points, group);
  return {Sample(std::move(updated), x_current.weights), std::move(map)};
}

std::pair<Sample, std::vector<Map1D>> sliced_step_maps(
    const Sample& x_current, const Sample& y,
    const std::vector<Direction>& directions) {
  check_pair(x_current, y);
  if (directions.empty())
    throw std::invalid_argument("sliced_step: empty direction list");
  StepGroup group;
  std::vector<Map1D> maps;
  for (const Direction& dir : directions) {
    if (dir.d() != x_current.d())
      throw std::invalid_argument("sliced_step: direction dimension mismatch");
    const Eigen::VectorXd u = x_current.points * dir.vec;
    const Eigen::VectorXd v = y.points * dir.vec;
    Map1D map = fit_1d_map(u, x_current.weights, v, y.weights);
    maps.push_back(map);
    group.slices.push_back(Step{dir, std::move(map)});
  }
  Eigen::MatrixXd updated = apply_group_points(x_current.points, group);
  return {Sample(std::move(updated), x_current.weights), std::move(maps)};
}

Sample sliced_step(const Sample& x_current, const Sample& y,
                   const std::vector<Direction>& directions) {
  return sliced_step_maps(x_current, y, directions).first;
}

std::pair<MongeMapEstimate, ConvergenceTrace> fit(const Sample& x,
                                                  const Sample& y,
                                                  const Strategy& strategy,
                                                  const EngineConfig& config) {
  check_pair(x, y);
  strategy.validate();
  config.validate();

  RngState rng(config.seed);
  const int d = int(x.d());

  MongeMapEstimate estimate;
  estimate.source_dim = d;
  estimate.strategy = strategy;
  estimate.config = config;

  ConvergenceTrace trace;
  trace.termination_reason = TerminationReason::max_iterations;

  Sample current = x;
  double w_prev = 0.0;

  for (int k = 1; k <= config.max_iterations; ++k) {
    const auto t0 = std::chrono::steady_clock::now();

    // Both samples collapsed onto one shared point: nothing left to move
    // and no usable direction, so stop rather than force a selection.
    if (strategy.kind == StrategyKind::ppmm && transport_exhausted(current, y)) {
      trace.termination_reason = TerminationReason::degenerate;
      break;
    }

    StepGroup group;
    double lambda1 = -1.0;
    bool save_degenerate = false;
    double proxy = 0.0;
    double w_k = 0.0;

    try {
      if (strategy.kind == StrategyKind::ppmm) {
        SaveResult sr = save_direction(current, y, config.ridge);
        lambda1 = sr.decomposition.eigenvalues[0];
        save_degenerate = sr.decomposition.degenerate;
        Direction dir = sr.direction;
        if (strategy.mean_adjust && sr.decomposition.mean_shift_prominent()) {
          if (auto gap = mean_gap_direction(current, y)) dir = *gap;
        }
        group.slices.push_back(Step{std::move(dir), Map1D()});
      } else {
        const int count =
            strategy.kind == StrategyKind::sliced ? strategy.slices : 1;
        for (int l = 0; l < count; ++l)
          group.slices.push_back(Step{random_sphere_direction(d, rng), Map1D()});
      }

      // Fit the per-direction maps against the pre-step source and record
      // the residual 1D transport cost along the chosen direction(s).
      for (Step& step : group.slices) {
        const Eigen::VectorXd u = current.points * step.direction.vec;
        const Eigen::VectorXd v = y.points * step.direction.vec;
        step.map = fit_1d_map(u, current.weights, v, y.weights);
        proxy += wasserstein_1d(u, current.weights, v, y.weights, config.p);
      }
      proxy /= double(group.slices.size());

      Eigen::MatrixXd updated = apply_group_points(current.points, group);
      if (!updated.allFinite()) throw std::runtime_error("non-finite update");
      current = Sample(std::move(updated), current.weights);

      w_k = empirical_wasserstein(x, current, config.p);
      if (!std::isfinite(w_k)) throw std::runtime_error("non-finite cost");
    } catch (const std::exception& e) {
      throw std::runtime_error("fit aborted at iteration " + std::to_string(k) +
                               ": " + e.what());
    }

    const auto t1 = std::chrono::steady_clock::now();
    const double elapsed_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();

    trace.records.push_back(TraceRecord{k, w_k, proxy, lambda1, elapsed_ms});
    estimate.steps.push_back(std::move(group));

    if (strategy.kind == StrategyKind::ppmm && save_degenerate &&
        !mean_gap_direction(current, y)) {
      trace.termination_reason = TerminationReason::degenerate;
      break;
    }
    const double rel = std::abs(w_k - w_prev) / std::max(w_prev, kEpsAbs);
    if (rel < config.tolerance) {
      trace.termination_reason = TerminationReason::tolerance;
      break;
    }
    w_prev = w_k;
  }

  return {std::move(estimate), std::move(trace)};
}

Sample apply_map(const MongeMapEstimate& estimate, const Sample& points) {
  if (points.d() != estimate.source_dim)
    throw std::invalid_argument("apply_map: dimension mismatch");
  Eigen::MatrixXd pts = points.points;
  for (const StepGroup& group : estimate.steps)
    pts = apply_group_points(pts, group);
  return Sample(std::move(pts), points.weights);
}

void save_estimate(const MongeMapEstimate& estimate,
                   const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  json manifest;
  manifest["format"] = "ppmm-estimate-v1";
  manifest["source_dim"] = estimate.source_dim;
  manifest["strategy"] = {{"kind", strategy_kind_name(estimate.strategy.kind)},
                          {"slices", estimate.strategy.slices},
                          {"mean_adjust", estimate.strategy.mean_adjust}};
  manifest["config"] = {{"max_iterations", estimate.config.max_iterations},
                        {"tolerance", estimate.config.tolerance},
                        {"p", estimate.config.p},
                        {"seed", estimate.config.seed},
                        {"ridge", estimate.config.ridge}};
  json steps = json::array();
  for (size_t g = 0; g < estimate.steps.size(); ++g) {
    json group = json::array();
    for (size_t s = 0; s < estimate.steps[g].slices.size(); ++s) {
      const Step& step = estimate.steps[g].slices[s];
      char name[64];
      std::snprintf(name, sizeof(name), "step_%04zu_s%02zu.csv", g, s);
      json entry;
      entry["direction"] = std::vector<double>(
          step.direction.vec.data(),
          step.direction.vec.data() + step.direction.vec.size());
      entry["map_file"] = name;
      group.push_back(entry);
      csv::write_file_atomic(dir / name, step.map.to_csv());
    }
    steps.push_back(group);
  }
  manifest["steps"] = steps;
  csv::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

MongeMapEstimate load_estimate(const std::filesystem::path& dir) {
  const json manifest = json::parse(csv::read_file(dir / "manifest.json"));
  if (manifest.at("format") != "ppmm-estimate-v1")
    throw std::runtime_error("unrecognized estimate format");

  MongeMapEstimate est;
  est.source_dim = manifest.at("source_dim").get<int>();
  est.strategy.kind =
      strategy_kind_from_name(manifest.at("strategy").at("kind").get<std::string>());
  est.strategy.slices = manifest.at("strategy").at("slices").get<int>();
  est.strategy.mean_adjust = manifest.at("strategy").at("mean_adjust").get<bool>();
  est.config.max_iterations = manifest.at("config").at("max_iterations").get<int>();
  est.config.tolerance = manifest.at("config").at("tolerance").get<double>();
  est.config.p = manifest.at("config").at("p").get<int>();
  est.config.seed = manifest.at("config").at("seed").get<std::uint64_t>();
  est.config.ridge = manifest.at("config").at("ridge").get<double>();

  for (const auto& group : manifest.at("steps")) {
    StepGroup g;
    for (const auto& entry : group) {
      const auto coords = entry.at("direction").get<std::vector<double>>();
      Eigen::VectorXd v(coords.size());
      for (size_t i = 0; i < coords.size(); ++i) v[i] = coords[i];
      Map1D map = Map1D::from_csv(
          csv::read_file(dir / entry.at("map_file").get<std::string>()));
      g.slices.push_back(Step{Direction{std::move(v)}, std::move(map)});
    }
    est.steps.push_back(std::move(g));
  }
  return est;
}

}  // namespace ppmm
