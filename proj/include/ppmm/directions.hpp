#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "ppmm/rng.hpp"
#include "ppmm/sample.hpp"

namespace ppmm {

/// Unit vector in R^d.
struct Direction {
  Eigen::VectorXd vec;

  Eigen::Index d() const { return vec.size(); }

  /// Normalizes; throws when the input norm is numerically zero.
  static Direction from_vector(const Eigen::VectorXd& v);
};

/// Full second-moment decomposition behind one direction selection, kept
/// for diagnostics and for the engine's mean-shift criterion.
struct SaveDecomposition {
  Eigen::MatrixXd pooled_covariance;    // stacked weighted sample, pooled mean
  Eigen::MatrixXd whitener;             // inverse square root of the pooled covariance
  Eigen::MatrixXd save_matrix;          // ((C1-I)^2 + (C2-I)^2) / 4, whitened groups
  Eigen::VectorXd eigenvalues;          // descending
  Eigen::VectorXd leading_eigenvector;  // before un-whitening, sign-fixed
  bool degenerate = false;              // leading eigenvalue < 1e-8 * d
  double whitened_mean_gap = 0.0;       // norm of the whitened group-mean gap
  double max_whitened_sd = 0.0;         // largest whitened per-group standard deviation

  /// Criterion for a mean shift that dominates the second-moment signal.
  bool mean_shift_prominent() const {
    return whitened_mean_gap > 0.5 * max_whitened_sd;
  }

  /// Count of eigenvalues above tol * largest.
  int numerical_rank(double tol = 1e-8) const;

  /// One CSV row of eigenvalues, for diagnostics files.
  std::string eigenvalues_csv() const;
};

struct SaveResult {
  Direction direction;
  SaveDecomposition decomposition;
};

/// Weighted second-moment matrix about an arbitrary center.
Eigen::MatrixXd weighted_covariance(const Sample& sample,
                                    const Eigen::VectorXd& center);

/// Selects the projection direction along which the two samples show the
/// largest second-moment discrepancy after pooled whitening: the leading
/// eigenvector of ((C1-I)^2 + (C2-I)^2)/4 for the whitened group
/// covariances C1, C2, mapped back through the whitener and normalized.
/// `ridge` is the relative floor applied to pooled-covariance eigenvalues
/// before inversion.
SaveResult save_direction(const Sample& x, const Sample& y, double ridge = 1e-10);

/// Normalized gap between the weighted means, or nullopt when the gap is
/// negligible relative to the mean magnitudes.
std::optional<Direction> mean_gap_direction(const Sample& x, const Sample& y);

/// Uniform draw from the unit sphere (normalized standard Gaussian vector).
Direction random_sphere_direction(int d, RngState& rng);

}  // namespace ppmm
