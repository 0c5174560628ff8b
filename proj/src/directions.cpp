#include "ppmm/directions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ppmm/csv.hpp"
#include "ppmm/linalg.hpp"

namespace ppmm {

namespace {

/// Flips the sign so the largest-magnitude coordinate is positive.
Eigen::VectorXd sign_fixed(const Eigen::VectorXd& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  return v[arg] < 0.0 ? Eigen::VectorXd(-v) : v;
}

bool lex_greater(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

double max_eigenvalue(const Eigen::MatrixXd& m) {
  return symmetric_eigenvalues_desc(m)[0];
}

/// Rows reordered lexicographically (ties by weight). Accumulated
/// statistics become independent of the caller's row order, which keeps the
/// iterative estimator bit-stable under row permutations: order-dependent
/// rounding in the covariances would otherwise be amplified across
/// iterations.
Sample canonicalized(const Sample& s) {
  std::vector<int> idx(s.n());
  for (int i = 0; i < int(s.n()); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    for (Eigen::Index j = 0; j < s.d(); ++j) {
      if (s.points(a, j) != s.points(b, j)) return s.points(a, j) < s.points(b, j);
    }
    return s.weights[a] < s.weights[b];
  });
  Eigen::MatrixXd pts(s.n(), s.d());
  Eigen::VectorXd w(s.n());
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    pts.row(i) = s.points.row(idx[i]);
    w[i] = s.weights[idx[i]];
  }
  return Sample(std::move(pts), std::move(w));
}

}  // namespace

Direction Direction::from_vector(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !v.allFinite())
    throw std::invalid_argument("direction has zero or non-finite norm");
  return Direction{v / norm};
}

int SaveDecomposition::numerical_rank(double tol) const {
  if (eigenvalues.size() == 0) return 0;
  // The whitened matrix has O(1) scale, so the cut keeps an absolute
  // component; a pure relative cut would report full rank for the all-zero
  // matrix of two identical samples.
  const double cut = tol * std::max(1.0, eigenvalues[0]);
  int r = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues[i] > cut) ++r;
  return r;
}

std::string SaveDecomposition::eigenvalues_csv() const {
  std::string out;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (i) out += ',';
    out += csv::format_double(eigenvalues[i]);
  }
  out += '\n';
  return out;
}

Eigen::MatrixXd weighted_covariance(const Sample& sample,
                                    const Eigen::VectorXd& center) {
  if (center.size() != sample.d())
    throw std::invalid_argument("weighted_covariance: center dimension mismatch");
  Eigen::MatrixXd centered = sample.points.rowwise() - center.transpose();
  Eigen::MatrixXd cov =
      centered.transpose() * sample.weights.asDiagonal() * centered;
  return 0.5 * (cov + cov.transpose());
}

SaveResult save_direction(const Sample& x_in, const Sample& y_in, double ridge) {
  if (x_in.d() != y_in.d())
    throw std::invalid_argument("save_direction: dimension mismatch");
  const Eigen::Index d = x_in.d();
  const Sample x = canonicalized(x_in);
  const Sample y = canonicalized(y_in);

  // Pooled covariance of the row-stacked sample, each group carrying half
  // of the total mass, centered about the pooled weighted mean.
  const Eigen::VectorXd mean_x = x.mean();
  const Eigen::VectorXd mean_y = y.mean();
  const Eigen::VectorXd pooled_mean = 0.5 * (mean_x + mean_y);
  Eigen::MatrixXd pooled = 0.5 * (weighted_covariance(x, pooled_mean) +
                                  weighted_covariance(y, pooled_mean));

  if (!(pooled.cwiseAbs().maxCoeff() > 0.0) || !(max_eigenvalue(pooled) > 0.0))
    throw std::runtime_error("save_direction: pooled covariance is numerically zero");

  SaveDecomposition dec;
  dec.pooled_covariance = pooled;

  // Whitener with eigenvalues floored at ridge * largest. Directions whose
  // pooled variance sits at the floor carry no data; their whitened-group
  // statistics are floor artifacts that would otherwise score the maximal
  // value, so the selection below is restricted to the healthy subspace.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pooled_es(pooled);
  if (pooled_es.info() != Eigen::Success)
    throw std::runtime_error("save_direction: eigendecomposition failed");
  const Eigen::VectorXd pooled_ev = pooled_es.eigenvalues();
  const double floor = ridge * pooled_ev.maxCoeff();
  Eigen::VectorXd inv_sq(d);
  Eigen::MatrixXd healthy = Eigen::MatrixXd::Zero(d, d);
  int floored = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    inv_sq[i] = 1.0 / std::sqrt(std::max(pooled_ev[i], floor));
    if (pooled_ev[i] > floor)
      healthy += pooled_es.eigenvectors().col(i) *
                 pooled_es.eigenvectors().col(i).transpose();
    else
      ++floored;
  }
  const auto& q = pooled_es.eigenvectors();
  dec.whitener = q * inv_sq.asDiagonal() * q.transpose();
  dec.whitener = 0.5 * (dec.whitener + dec.whitener.transpose());

  // Whitened groups, each centered about its own whitened mean.
  Eigen::MatrixXd xw = x.points * dec.whitener;
  Eigen::MatrixXd yw = y.points * dec.whitener;
  const Eigen::VectorXd mw1 = dec.whitener * mean_x;
  const Eigen::VectorXd mw2 = dec.whitener * mean_y;
  Eigen::MatrixXd cx = xw.rowwise() - mw1.transpose();
  Eigen::MatrixXd cy = yw.rowwise() - mw2.transpose();
  Eigen::MatrixXd c1 = cx.transpose() * x.weights.asDiagonal() * cx;
  Eigen::MatrixXd c2 = cy.transpose() * y.weights.asDiagonal() * cy;
  c1 = 0.5 * (c1 + c1.transpose());
  c2 = 0.5 * (c2 + c2.transpose());

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd m =
      0.25 * ((c1 - id) * (c1 - id) + (c2 - id) * (c2 - id));
  if (floored > 0) m = healthy * m * healthy;
  dec.save_matrix = 0.5 * (m + m.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dec.save_matrix);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("save_direction: eigendecomposition failed");
  dec.eigenvalues = es.eigenvalues().reverse();

  // Leading eigenvector; ties within 1e-10 of the lead (relative, so the
  // window shrinks with the eigenvalue scale and a faint but genuine lead
  // is never conflated with noise directions) resolved deterministically by
  // taking the lexicographically largest sign-fixed candidate.
  const double lead = dec.eigenvalues[0];
  const double tie_window = 1e-10 * std::max(lead, 0.0);
  Eigen::VectorXd best;
  for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
    if (es.eigenvalues()[k] < lead - tie_window) break;
    Eigen::VectorXd cand = sign_fixed(es.eigenvectors().col(k));
    if (best.size() == 0 || lex_greater(cand, best)) best = cand;
  }
  dec.leading_eigenvector = best;
  dec.degenerate = lead < 1e-8 * double(d);

  dec.whitened_mean_gap = (mw2 - mw1).norm();
  dec.max_whitened_sd =
      std::sqrt(std::max(0.0, std::max(max_eigenvalue(c1), max_eigenvalue(c2))));

  Direction dir = Direction::from_vector(dec.whitener * dec.leading_eigenvector);
  return SaveResult{std::move(dir), std::move(dec)};
}

std::optional<Direction> mean_gap_direction(const Sample& x, const Sample& y) {
  if (x.d() != y.d())
    throw std::invalid_argument("mean_gap_direction: dimension mismatch");
  const Eigen::VectorXd mx = canonicalized(x).mean();
  const Eigen::VectorXd my = canonicalized(y).mean();
  const Eigen::VectorXd gap = my - mx;
  const double scale = std::max({1.0, mx.norm(), my.norm()});
  if (gap.norm() <= 1e-9 * scale) return std::nullopt;
  return Direction::from_vector(gap);
}

Direction random_sphere_direction(int d, RngState& rng) {
  if (d < 1) throw std::invalid_argument("random_sphere_direction: d must be >= 1");
  while (true) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    const double norm = v.norm();
    if (norm > 0.0) return Direction{v / norm};
  }
}

}  // namespace ppmm
