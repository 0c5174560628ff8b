#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ppmm/engine.hpp"
#include "ppmm/gaussian_oracle.hpp"

namespace ppmm {

enum class WeightScheme { uniform, random_weights };

/// Declarative description of one simulation study: a Gaussian pair with
/// constant mean vectors and ar1 covariances, a method matrix, and the
/// replication/seed layout. Replication r draws its data with seed
/// base_seed + r; engine seeds are derived from the cell seed so direction
/// sampling never shares a stream with data sampling.
struct ExperimentSpec {
  std::string name = "experiment";
  std::vector<int> dims = {10};
  double mu_x = -2.0;
  double mu_y = 2.0;
  double rho_x = 0.8;
  double rho_y = 0.5;
  int n = 2000;
  int n_y = 0;  // 0 means equal to n
  WeightScheme weights = WeightScheme::uniform;
  std::vector<Strategy> methods = {Strategy::ppmm()};
  int replications = 10;
  std::uint64_t base_seed = 1;
  EngineConfig engine;

  void validate() const;
  GaussianSpec gaussian_x(int d) const;
  GaussianSpec gaussian_y(int d) const;
};

/// Outcome of one (method, replication) cell.
struct CellResult {
  std::string method;
  int dim = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when !ok
  ConvergenceTrace trace;
};

struct ConvergenceExperimentResult {
  std::vector<CellResult> cells;
  double ground_truth_w2 = 0.0;  // per dim; see per_dim_truth
  std::vector<std::pair<int, double>> per_dim_truth;
  std::vector<std::filesystem::path> files;
};

struct TimingRow {
  std::string method;
  int dim = 0;
  double mean_iteration_ms = 0.0;
  double sd_iteration_ms = 0.0;
  double mean_total_ms = 0.0;
  double sd_total_ms = 0.0;
  double mean_iterations = 0.0;
};

struct TimingExperimentResult {
  std::vector<TimingRow> rows;
  std::vector<CellResult> cells;
  std::vector<std::filesystem::path> files;
};

struct KvdRow {
  int dim = 0;
  double mean_k = 0.0;
  double sd_k = 0.0;
};

struct KvdExperimentResult {
  std::vector<KvdRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::filesystem::path> files;
};

struct ExtensionCell {
  int replication = 0;
  std::uint64_t seed = 0;
  double final_w = 0.0;
  std::optional<double> oracle_w;  // absent when the LP guard is exceeded
  std::string status;
};

struct ExtensionExperimentResult {
  std::vector<ExtensionCell> cells;
  std::vector<CellResult> traces;
  std::vector<std::filesystem::path> files;
};

/// Per-cell traces plus a per-iteration mean/sd summary per method and the
/// closed-form ground-truth column.
ConvergenceExperimentResult run_convergence_experiment(
    const ExperimentSpec& spec, const std::filesystem::path& out_dir);

/// Per-method mean/sd of per-iteration wall time and time-to-converge.
TimingExperimentResult run_timing_experiment(
    const ExperimentSpec& spec, const std::filesystem::path& out_dir);

/// Iterations-to-converge against dimension, with a least-squares line.
KvdExperimentResult run_k_vs_d_experiment(const ExperimentSpec& spec,
                                          const std::filesystem::path& out_dir);

/// Unequal sizes and/or random weights, with the exact discrete LP value
/// as the ground-truth column when the instance fits the oracle guard.
ExtensionExperimentResult run_extension_experiment(
    const ExperimentSpec& spec, const std::filesystem::path& out_dir);

/// Least-squares fit y = a + b x returning (slope, intercept, r_squared).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace ppmm
