#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>

#include "ppmm/rng.hpp"

namespace ppmm {

/// Weighted point cloud in R^d. Rows are observations, columns features.
/// Weights are normalized to sum to one on construction; uniform when the
/// caller supplies none.
struct Sample {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Sample() = default;
  explicit Sample(Eigen::MatrixXd pts);
  Sample(Eigen::MatrixXd pts, Eigen::VectorXd raw_weights);

  Eigen::Index n() const { return points.rows(); }
  Eigen::Index d() const { return points.cols(); }

  bool has_uniform_weights() const;

  /// Weighted mean of the rows.
  Eigen::VectorXd mean() const { return points.transpose() * weights; }
};

/// Parameters of a d-dimensional Gaussian.
struct GaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::Index d() const { return mean.size(); }

  /// Checks symmetry and strict positive definiteness of the covariance.
  void validate() const;
};

/// Reads a sample from a CSV file with a header row. All columns except the
/// weight column (explicitly named, or a column called "weight" when
/// present) become features, in file order.
Sample load_sample(const std::filesystem::path& path,
                   const std::optional<std::string>& weight_column = {});

/// Writes features as x1..xd plus an optional weight column. By default the
/// weight column is written only when weights are non-uniform.
void save_sample(const Sample& sample, const std::filesystem::path& path,
                 std::optional<bool> include_weights = {});

/// i.i.d. draws mean + L z with L the symmetric square root of the
/// covariance and z standard normal, rows filled in order so that a seed
/// fully determines the matrix.
Sample sample_gaussian(const GaussianSpec& spec, int n, RngState& rng);

/// Matrix with entries rho^|i-j|. Symmetric positive definite for |rho|<1.
Eigen::MatrixXd ar1_covariance(int d, double rho);

}  // namespace ppmm
