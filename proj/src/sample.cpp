#include "ppmm/sample.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ppmm/csv.hpp"
#include "ppmm/linalg.hpp"

namespace ppmm {

namespace {

void validate_sample(const Eigen::MatrixXd& pts, const Eigen::VectorXd& w) {
  if (pts.rows() < 2) throw std::invalid_argument("sample needs at least 2 rows");
  if (pts.cols() < 1) throw std::invalid_argument("sample needs at least 1 feature");
  if (!pts.allFinite()) throw std::invalid_argument("sample contains non-finite points");
  if (w.size() != pts.rows())
    throw std::invalid_argument("weight vector length does not match row count");
  int positive = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) throw std::invalid_argument("non-finite weight");
    if (w[i] < 0.0)
      throw std::invalid_argument("negative weight at row " + std::to_string(i + 1));
    if (w[i] > 0.0) ++positive;
  }
  if (positive < 2)
    throw std::invalid_argument("sample needs at least two strictly positive weights");
}

}  // namespace

Sample::Sample(Eigen::MatrixXd pts) : points(std::move(pts)) {
  weights = Eigen::VectorXd::Constant(points.rows(), 1.0 / double(points.rows()));
  validate_sample(points, weights);
}

Sample::Sample(Eigen::MatrixXd pts, Eigen::VectorXd raw_weights)
    : points(std::move(pts)), weights(std::move(raw_weights)) {
  validate_sample(points, weights);
  // Idempotent normalization: re-dividing an already normalized vector by
  // its (order-dependent) sum would shift the weights by an ulp and make
  // otherwise identical samples diverge bit-wise.
  const double total = weights.sum();
  if (std::abs(total - 1.0) > 1e-14) weights /= total;
}

bool Sample::has_uniform_weights() const {
  const double lo = weights.minCoeff();
  const double hi = weights.maxCoeff();
  return hi - lo <= 1e-12 * hi;
}

void GaussianSpec::validate() const {
  if (mean.size() != covariance.rows() || covariance.rows() != covariance.cols())
    throw std::invalid_argument("mean and covariance dimensions disagree");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if (!is_symmetric(covariance, 1e-10 * scale))
    throw std::invalid_argument("covariance is not symmetric");
  Eigen::VectorXd evs = symmetric_eigenvalues_desc(covariance);
  if (!(evs[evs.size() - 1] > 0.0))
    throw std::invalid_argument("covariance not positive definite");
}

Sample load_sample(const std::filesystem::path& path,
                   const std::optional<std::string>& weight_column) {
  std::string text = csv::read_file(path);
  std::istringstream in(text);
  std::string line;

  if (!std::getline(in, line)) throw std::runtime_error("empty CSV file");
  std::vector<std::string> names;
  for (auto& f : csv::split(line)) names.push_back(csv::trim(f));
  if (names.empty()) throw std::runtime_error("missing CSV header");

  int weight_idx = -1;
  if (weight_column) {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == *weight_column) weight_idx = static_cast<int>(i);
    if (weight_idx < 0)
      throw std::runtime_error("weight column '" + *weight_column + "' not found");
  } else {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == "weight") weight_idx = static_cast<int>(i);
  }

  const int total_cols = static_cast<int>(names.size());
  const int d = total_cols - (weight_idx >= 0 ? 1 : 0);
  if (d < 1) throw std::runtime_error("CSV has no feature columns");

  std::vector<std::vector<double>> feature_rows;
  std::vector<double> weight_vals;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = csv::trim(line);
    if (t.empty()) continue;
    auto fields = csv::split(t);
    if (static_cast<int>(fields.size()) != total_cols)
      throw std::runtime_error("malformed CSV at line " + std::to_string(line_no) +
                               ": expected " + std::to_string(total_cols) +
                               " fields, got " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(d);
    const int data_row = static_cast<int>(feature_rows.size()) + 1;
    for (int c = 0; c < total_cols; ++c) {
      double v = 0.0;
      try {
        v = csv::parse_double(fields[c]);
      } catch (const std::exception& e) {
        throw std::runtime_error("malformed CSV at row " + std::to_string(data_row) +
                                 ", column '" + names[c] + "': " + e.what());
      }
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite value at row " + std::to_string(data_row) +
                                 ", column '" + names[c] + "'");
      if (c == weight_idx) {
        if (v < 0.0)
          throw std::runtime_error("negative weight at row " + std::to_string(data_row));
        weight_vals.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    feature_rows.push_back(std::move(row));
  }

  const int n = static_cast<int>(feature_rows.size());
  if (n < 2) throw std::runtime_error("fewer than 2 data rows");

  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = feature_rows[i][j];

  if (weight_idx >= 0) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = weight_vals[i];
    return Sample(std::move(pts), std::move(w));
  }
  return Sample(std::move(pts));
}

void save_sample(const Sample& sample, const std::filesystem::path& path,
                 std::optional<bool> include_weights) {
  const bool with_w = include_weights.value_or(!sample.has_uniform_weights());
  std::string out;
  for (Eigen::Index j = 0; j < sample.d(); ++j) {
    if (j) out += ',';
    out += "x" + std::to_string(j + 1);
  }
  if (with_w) out += ",weight";
  out += '\n';
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    for (Eigen::Index j = 0; j < sample.d(); ++j) {
      if (j) out += ',';
      out += csv::format_double(sample.points(i, j));
    }
    if (with_w) {
      out += ',';
      out += csv::format_double(sample.weights[i]);
    }
    out += '\n';
  }
  csv::write_file_atomic(path, out);
}

Sample sample_gaussian(const GaussianSpec& spec, int n, RngState& rng) {
  spec.validate();
  if (n < 2) throw std::invalid_argument("sample_gaussian: n must be >= 2");
  const Eigen::Index d = spec.d();
  MatrixRoot root = symmetric_sqrt(spec.covariance);
  Eigen::MatrixXd z(n, d);
  for (int i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  Eigen::MatrixXd pts = z * root.root;
  pts.rowwise() += spec.mean.transpose();
  return Sample(std::move(pts));
}

Eigen::MatrixXd ar1_covariance(int d, double rho) {
  if (d < 1) throw std::invalid_argument("ar1_covariance: d must be >= 1");
  if (!(std::abs(rho) < 1.0))
    throw std::invalid_argument("ar1_covariance: |rho| must be < 1");
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = std::pow(rho, std::abs(i - j));
  return m;
}

}  // namespace ppmm
