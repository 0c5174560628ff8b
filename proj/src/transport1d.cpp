#include "ppmm/transport1d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ppmm/csv.hpp"

namespace ppmm {

namespace {

double pow_cost(double diff, int p) {
  const double a = std::abs(diff);
  if (p == 1) return a;
  if (p == 2) return a * a;
  return std::pow(a, p);
}

/// Sorted atoms of a weighted scalar sample with equal values merged and
/// zero-weight atoms dropped. Weights are normalized to sum to one.
struct Atoms {
  std::vector<double> value;
  std::vector<double> weight;  // positive
  std::vector<double> cum;     // cumulative weights, last == 1
};

Atoms make_atoms(const Eigen::VectorXd& values, const Eigen::VectorXd& weights) {
  if (values.size() == 0) throw std::invalid_argument("empty scalar sample");
  if (values.size() != weights.size())
    throw std::invalid_argument("values/weights length mismatch");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights[i] < 0.0) throw std::invalid_argument("negative weight");

  std::vector<std::pair<double, double>> vw(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i)
    vw[i] = {values[i], weights[i]};
  std::stable_sort(vw.begin(), vw.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Total accumulated over the sorted sequence so the normalization does
  // not depend on the caller's element order.
  double total = 0.0;
  for (const auto& [val, w] : vw) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("zero total weight");

  Atoms a;
  for (const auto& [val, w] : vw) {
    if (w == 0.0) continue;
    const double nw = w / total;
    if (!a.value.empty() && a.value.back() == val) {
      a.weight.back() += nw;
    } else {
      a.value.push_back(val);
      a.weight.push_back(nw);
    }
  }
  if (a.value.empty()) throw std::invalid_argument("zero total weight");
  a.cum.resize(a.value.size());
  double c = 0.0;
  for (size_t i = 0; i < a.weight.size(); ++i) {
    c += a.weight[i];
    a.cum[i] = c;
  }
  a.cum.back() = 1.0;
  return a;
}

/// Quantile with knots at (cum_k, value_k): clamped below the first
/// breakpoint, linear between order statistics.
double quantile(const Atoms& a, double t) {
  if (t <= a.cum.front()) return a.value.front();
  if (t >= a.cum.back()) return a.value.back();
  auto it = std::lower_bound(a.cum.begin(), a.cum.end(), t);
  size_t k = static_cast<size_t>(it - a.cum.begin());
  if (a.cum[k] == t) return a.value[k];
  const double c0 = a.cum[k - 1];
  const double c1 = a.cum[k];
  const double f = (t - c0) / (c1 - c0);
  return a.value[k - 1] + f * (a.value[k] - a.value[k - 1]);
}

Map1D knots_to_map(std::vector<double> src, std::vector<double> tgt,
                   Extrapolation extrapolation) {
  // Merge duplicate source knots, averaging their targets.
  std::vector<double> s, g;
  s.reserve(src.size());
  g.reserve(tgt.size());
  size_t i = 0;
  while (i < src.size()) {
    size_t j = i;
    double sum = 0.0;
    while (j < src.size() && src[j] == src[i]) sum += tgt[j++];
    s.push_back(src[i]);
    g.push_back(sum / double(j - i));
    i = j;
  }
  return Map1D(std::move(s), std::move(g), extrapolation);
}

}  // namespace

std::string extrapolation_name(Extrapolation e) {
  return e == Extrapolation::clamp ? "clamp" : "linear";
}

Extrapolation extrapolation_from_name(const std::string& name) {
  if (name == "clamp") return Extrapolation::clamp;
  if (name == "linear") return Extrapolation::linear;
  throw std::invalid_argument("unknown extrapolation mode: " + name);
}

Map1D::Map1D(std::vector<double> source_knots, std::vector<double> target_knots,
             Extrapolation extrapolation)
    : source_(std::move(source_knots)),
      target_(std::move(target_knots)),
      extrapolation_(extrapolation) {
  if (source_.empty() || source_.size() != target_.size())
    throw std::invalid_argument("Map1D: knot vectors empty or mismatched");
  for (size_t i = 1; i < source_.size(); ++i) {
    if (!(source_[i] > source_[i - 1]))
      throw std::invalid_argument("Map1D: source knots must be strictly ascending");
    if (target_[i] < target_[i - 1])
      throw std::invalid_argument("Map1D: target knots must be non-decreasing");
  }
}

double Map1D::apply(double t) const {
  const auto& s = source_;
  const auto& g = target_;
  const size_t m = s.size();
  if (t == s.front()) return g.front();
  if (t == s.back()) return g.back();
  if (t < s.front()) {
    if (extrapolation_ == Extrapolation::clamp || m == 1) return g.front();
    const double slope = (g[1] - g[0]) / (s[1] - s[0]);
    return g.front() + slope * (t - s.front());
  }
  if (t > s.back()) {
    if (extrapolation_ == Extrapolation::clamp || m == 1) return g.back();
    const double slope =
        (g[m - 1] - g[m - 2]) / (s[m - 1] - s[m - 2]);
    return g.back() + slope * (t - s.back());
  }
  auto it = std::lower_bound(s.begin(), s.end(), t);
  size_t k = static_cast<size_t>(it - s.begin());
  if (s[k] == t) return g[k];
  const double f = (t - s[k - 1]) / (s[k] - s[k - 1]);
  return g[k - 1] + f * (g[k] - g[k - 1]);
}

Eigen::VectorXd Map1D::apply(const Eigen::VectorXd& t) const {
  Eigen::VectorXd out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = apply(t[i]);
  return out;
}

std::string Map1D::to_csv() const {
  std::string out = "# extrapolation=" + extrapolation_name(extrapolation_) + "\n";
  out += "source_knot,target_knot\n";
  for (size_t i = 0; i < source_.size(); ++i)
    out += csv::format_double(source_[i]) + "," + csv::format_double(target_[i]) + "\n";
  return out;
}

Map1D Map1D::from_csv(const std::string& text) {
  csv::Table t = csv::parse_table(text);
  Extrapolation ex = Extrapolation::clamp;
  for (const auto& c : t.comments) {
    auto pos = c.find("extrapolation=");
    if (pos != std::string::npos)
      ex = extrapolation_from_name(csv::trim(c.substr(pos + 14)));
  }
  std::vector<double> s, g;
  for (const auto& row : t.rows) {
    s.push_back(row.at(0));
    g.push_back(row.at(1));
  }
  return Map1D(std::move(s), std::move(g), ex);
}

Map1D fit_sorted_map(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                     Extrapolation extrapolation) {
  if (u.size() != v.size())
    throw std::invalid_argument("fit_sorted_map: sizes must be equal");
  if (u.size() < 2) throw std::invalid_argument("fit_sorted_map: need >= 2 points");
  std::vector<double> su(u.data(), u.data() + u.size());
  std::vector<double> sv(v.data(), v.data() + v.size());
  std::stable_sort(su.begin(), su.end());
  std::stable_sort(sv.begin(), sv.end());
  return knots_to_map(std::move(su), std::move(sv), extrapolation);
}

Map1D fit_quantile_map(const Eigen::VectorXd& u, const Eigen::VectorXd& u_weights,
                       const Eigen::VectorXd& v, const Eigen::VectorXd& v_weights,
                       Extrapolation extrapolation) {
  Atoms au = make_atoms(u, u_weights);
  Atoms av = make_atoms(v, v_weights);

  std::vector<double> grid;
  grid.reserve(au.cum.size() + av.cum.size());
  grid.insert(grid.end(), au.cum.begin(), au.cum.end());
  grid.insert(grid.end(), av.cum.begin(), av.cum.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> src, tgt;
  src.reserve(grid.size());
  tgt.reserve(grid.size());
  for (double t : grid) {
    src.push_back(quantile(au, t));
    tgt.push_back(quantile(av, t));
  }
  return knots_to_map(std::move(src), std::move(tgt), extrapolation);
}

Map1D fit_1d_map(const Eigen::VectorXd& u, const Eigen::VectorXd& u_weights,
                 const Eigen::VectorXd& v, const Eigen::VectorXd& v_weights,
                 Extrapolation extrapolation) {
  if (u.size() < 2 || v.size() < 2)
    throw std::invalid_argument("fit_1d_map: need >= 2 points per sample");
  auto uniform = [](const Eigen::VectorXd& w) {
    const double hi = w.maxCoeff();
    const double lo = w.minCoeff();
    return lo >= 0.0 && hi > 0.0 && hi - lo <= 1e-12 * hi;
  };
  if (u.size() == v.size() && uniform(u_weights) && uniform(v_weights))
    return fit_sorted_map(u, v, extrapolation);
  return fit_quantile_map(u, u_weights, v, v_weights, extrapolation);
}

double exact_assignment_cost(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             int p) {
  if (u.size() != v.size())
    throw std::invalid_argument("exact_assignment_cost: sizes must be equal");
  const int n = static_cast<int>(u.size());
  if (n > 10) throw std::invalid_argument("exact_assignment_cost: n must be <= 10");
  if (n == 0) throw std::invalid_argument("exact_assignment_cost: empty sample");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < n; ++i) cost += pow_cost(u[i] - v[idx[i]], p);
    best = std::min(best, cost);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return std::pow(best / double(n), 1.0 / double(p));
}

double wasserstein_1d(const Eigen::VectorXd& u, const Eigen::VectorXd& u_weights,
                      const Eigen::VectorXd& v, const Eigen::VectorXd& v_weights,
                      int p) {
  Atoms au = make_atoms(u, u_weights);
  Atoms av = make_atoms(v, v_weights);
  size_t i = 0, j = 0;
  double ru = au.weight[0];
  double rv = av.weight[0];
  double cost = 0.0;
  while (true) {
    const double take = std::min(ru, rv);
    cost += take * pow_cost(au.value[i] - av.value[j], p);
    ru -= take;
    rv -= take;
    if (ru <= 0.0) {
      if (++i == au.value.size()) break;
      ru = au.weight[i];
    }
    if (rv <= 0.0) {
      if (++j == av.value.size()) break;
      rv = av.weight[j];
    }
  }
  return std::pow(cost, 1.0 / double(p));
}

}  // namespace ppmm
