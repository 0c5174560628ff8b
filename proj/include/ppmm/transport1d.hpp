#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ppmm {

enum class Extrapolation { clamp, linear };

std::string extrapolation_name(Extrapolation e);
Extrapolation extrapolation_from_name(const std::string& name);

/// Monotone one-dimensional transport map stored as an interpolable lookup
/// table. Source knots are strictly ascending (duplicates merged with
/// averaged targets), target knots non-decreasing. Evaluation at a source
/// knot returns its paired target exactly; between knots the map is linear;
/// outside the knot range behavior follows the extrapolation tag.
class Map1D {
 public:
  Map1D() = default;
  Map1D(std::vector<double> source_knots, std::vector<double> target_knots,
        Extrapolation extrapolation = Extrapolation::clamp);

  double apply(double t) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& t) const;

  const std::vector<double>& source_knots() const { return source_; }
  const std::vector<double>& target_knots() const { return target_; }
  Extrapolation extrapolation() const { return extrapolation_; }
  size_t size() const { return source_.size(); }

  std::string to_csv() const;
  static Map1D from_csv(const std::string& text);

 private:
  std::vector<double> source_;
  std::vector<double> target_;
  Extrapolation extrapolation_ = Extrapolation::clamp;
};

/// Fits the monotone transport map between two weighted scalar samples.
///
/// Equal sizes with uniform weights reduce to the classical sorted pairing
/// (i-th smallest to i-th smallest). Any other case builds both weighted
/// quantile functions and places one knot per merged cumulative-weight
/// breakpoint, with values interpolated linearly between order statistics.
Map1D fit_1d_map(const Eigen::VectorXd& u, const Eigen::VectorXd& u_weights,
                 const Eigen::VectorXd& v, const Eigen::VectorXd& v_weights,
                 Extrapolation extrapolation = Extrapolation::clamp);

/// Sorted-pairing path only (requires equal sizes; weights ignored).
Map1D fit_sorted_map(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                     Extrapolation extrapolation = Extrapolation::clamp);

/// Weighted quantile-interpolation path, usable for any sizes/weights.
Map1D fit_quantile_map(const Eigen::VectorXd& u, const Eigen::VectorXd& u_weights,
                       const Eigen::VectorXd& v, const Eigen::VectorXd& v_weights,
                       Extrapolation extrapolation = Extrapolation::clamp);

/// Exact optimal pairing cost by exhaustive permutation enumeration.
/// Equal sizes, uniform weights, n <= 10. Returns the p-th root of the
/// minimal mean p-th-power cost. Test oracle; not a production path.
double exact_assignment_cost(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             int p);

/// Exact 1D transport cost between two weighted discrete measures (the
/// monotone coupling), returned as the p-th root of the optimal cost.
double wasserstein_1d(const Eigen::VectorXd& u, const Eigen::VectorXd& u_weights,
                      const Eigen::VectorXd& v, const Eigen::VectorXd& v_weights,
                      int p);

}  // namespace ppmm
