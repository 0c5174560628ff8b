#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ppmm/directions.hpp"
#include "ppmm/sample.hpp"
#include "ppmm/transport1d.hpp"

namespace ppmm {

enum class StrategyKind { ppmm, random, sliced };

std::string strategy_kind_name(StrategyKind k);
StrategyKind strategy_kind_from_name(const std::string& name);

/// Direction-selection strategy for the iterative estimator.
struct Strategy {
  StrategyKind kind = StrategyKind::ppmm;
  int slices = 10;           // sliced only
  bool mean_adjust = false;  // ppmm only

  static Strategy ppmm(bool mean_adjust = false) {
    return Strategy{StrategyKind::ppmm, 1, mean_adjust};
  }
  static Strategy random() { return Strategy{StrategyKind::random, 1, false}; }
  static Strategy sliced(int slices) {
    return Strategy{StrategyKind::sliced, slices, false};
  }

  void validate() const;
  /// "ppmm", "random", "sliced10", ...
  std::string label() const;
};

struct EngineConfig {
  int max_iterations = 200;
  double tolerance = 1e-5;  // relative change of the displacement cost
  int p = 2;
  std::uint64_t seed = 0;
  double ridge = 1e-10;

  void validate() const;
};

struct Step {
  Direction direction;
  Map1D map;
};

/// One iteration's worth of steps: a single entry for ppmm/random, the L
/// slice maps for sliced (replayed as the average of their displacements).
struct StepGroup {
  std::vector<Step> slices;
};

/// Composed estimate of the d-dimensional transport map: replaying every
/// stored group on a point set reproduces the fitted trajectory.
struct MongeMapEstimate {
  int source_dim = 0;
  Strategy strategy;
  EngineConfig config;
  std::vector<StepGroup> steps;

  int iterations() const { return static_cast<int>(steps.size()); }
};

enum class TerminationReason { tolerance, max_iterations, degenerate };

std::string termination_reason_name(TerminationReason r);
TerminationReason termination_reason_from_name(const std::string& name);

struct TraceRecord {
  int iteration = 0;              // 1-based
  double w_displacement = 0.0;    // paired cost between current and initial points
  double w_direction_proxy = 0.0; // 1D transport cost along this iteration's direction(s)
  double save_lambda1 = -1.0;     // leading second-moment eigenvalue; -1 for baselines
  double elapsed_ms = 0.0;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;
  TerminationReason termination_reason = TerminationReason::max_iterations;

  double final_w_displacement() const {
    return records.empty() ? 0.0 : records.back().w_displacement;
  }

  std::string to_csv() const;
  static ConvergenceTrace from_csv(const std::string& text);
};

/// Weighted p-mean of row-wise Euclidean distances between paired rows.
/// Requires equal shapes and shared weights.
double empirical_wasserstein(const Sample& x, const Sample& y, int p = 2);

/// One projection-pursuit update: fit the 1D transport map between the
/// projections of both samples onto `direction`, then move the source along
/// that direction so its projection matches the target's.
std::pair<Sample, Map1D> ppmm_step(const Sample& x_current, const Sample& y,
                                   const Direction& direction);

/// Averaged update over several directions: the mean of the per-direction
/// displacement fields, all fitted against the pre-step source.
Sample sliced_step(const Sample& x_current, const Sample& y,
                   const std::vector<Direction>& directions);

/// As sliced_step but also returns the fitted per-direction maps.
std::pair<Sample, std::vector<Map1D>> sliced_step_maps(
    const Sample& x_current, const Sample& y,
    const std::vector<Direction>& directions);

/// Runs the iterative estimator until the relative change of the
/// displacement cost drops below the tolerance, the iteration cap is hit,
/// or (ppmm) no informative direction remains in first or second moments.
std::pair<MongeMapEstimate, ConvergenceTrace> fit(const Sample& x,
                                                  const Sample& y,
                                                  const Strategy& strategy,
                                                  const EngineConfig& config);

/// Replays every stored step on new points (clamp extrapolation).
Sample apply_map(const MongeMapEstimate& estimate, const Sample& points);

/// Estimate directory: manifest.json plus one CSV per stored 1D map.
void save_estimate(const MongeMapEstimate& estimate,
                   const std::filesystem::path& dir);
MongeMapEstimate load_estimate(const std::filesystem::path& dir);

}  // namespace ppmm
