#pragma once

#include "ppmm/sample.hpp"

namespace ppmm {

/// Closed-form second-order Wasserstein distance between two Gaussians:
/// sqrt of the squared mean gap plus the covariance cross term
/// trace(A + B - 2 (A^{1/2} B A^{1/2})^{1/2}). The trace term is clamped
/// at zero before the final root; it is analytically nonnegative and only
/// dips below zero at machine precision.
double closed_form_w2(const GaussianSpec& a, const GaussianSpec& b);

/// Exact transport cost between two weighted empirical measures with cost
/// |x_i - y_j|^p, solved by transportation-simplex pivoting. Returns the
/// p-th root of the optimal cost. Guarded to n_x * n_y <= 10,000; this is
/// a correctness oracle, not a large-scale path.
double exact_discrete_w2(const Sample& x, const Sample& y, int p = 2);

}  // namespace ppmm
