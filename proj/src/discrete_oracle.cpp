#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ppmm/gaussian_oracle.hpp"

namespace ppmm {

namespace {

/// Dense transportation problem: ns supplies, nt demands, cost per cell.
/// Solved by the classical transportation simplex: northwest-corner start,
/// potentials from the basis tree, first negative reduced cost enters,
/// first minimizer on the cycle leaves. Basis always holds ns + nt - 1
/// cells (degenerate zero flows allowed).
class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> supply, std::vector<double> demand,
                   std::vector<double> cost)
      : ns_(supply.size()),
        nt_(demand.size()),
        supply_(std::move(supply)),
        demand_(std::move(demand)),
        cost_(std::move(cost)),
        flow_(ns_ * nt_, 0.0),
        basic_(ns_ * nt_, false) {}

  double solve() {
    northwest_corner();
    const double scale = std::max(
        1.0, *std::max_element(cost_.begin(), cost_.end()));
    const double tol = 1e-12 * scale;
    const long max_pivots = 2000 + 50L * long(ns_) * long(nt_);
    for (long pivot = 0;; ++pivot) {
      if (pivot > max_pivots)
        throw std::runtime_error("transport solver exceeded pivot limit");
      compute_potentials();
      int ei = -1, ej = -1;
      if (!find_entering(tol, ei, ej)) break;
      pivot_on(ei, ej);
    }
    double total = 0.0;
    for (size_t k = 0; k < flow_.size(); ++k) total += flow_[k] * cost_[k];
    return total;
  }

 private:
  size_t idx(size_t i, size_t j) const { return i * nt_ + j; }

  void northwest_corner() {
    std::vector<double> a = supply_;
    std::vector<double> b = demand_;
    size_t i = 0, j = 0;
    while (true) {
      const double t = std::min(a[i], b[j]);
      flow_[idx(i, j)] = t;
      basic_[idx(i, j)] = true;
      a[i] -= t;
      b[j] -= t;
      if (i == ns_ - 1 && j == nt_ - 1) break;
      if (a[i] <= 0.0 && i < ns_ - 1)
        ++i;
      else if (j < nt_ - 1)
        ++j;
      else
        ++i;
    }
  }

  // Potentials u, v with u[0] = 0, solved over the basis tree.
  void compute_potentials() {
    u_.assign(ns_, 0.0);
    v_.assign(nt_, 0.0);
    std::vector<char> done_u(ns_, 0), done_v(nt_, 0);
    std::vector<int> stack;
    stack.reserve(ns_ + nt_);
    done_u[0] = 1;
    stack.push_back(0);  // nodes: 0..ns-1 supplies, ns..ns+nt-1 demands
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node < int(ns_)) {
        const size_t i = size_t(node);
        for (size_t j = 0; j < nt_; ++j) {
          if (basic_[idx(i, j)] && !done_v[j]) {
            v_[j] = cost_[idx(i, j)] - u_[i];
            done_v[j] = 1;
            stack.push_back(int(ns_ + j));
          }
        }
      } else {
        const size_t j = size_t(node) - ns_;
        for (size_t i = 0; i < ns_; ++i) {
          if (basic_[idx(i, j)] && !done_u[i]) {
            u_[i] = cost_[idx(i, j)] - v_[j];
            done_u[i] = 1;
            stack.push_back(int(i));
          }
        }
      }
    }
  }

  bool find_entering(double tol, int& ei, int& ej) const {
    for (size_t i = 0; i < ns_; ++i)
      for (size_t j = 0; j < nt_; ++j) {
        if (basic_[idx(i, j)]) continue;
        if (cost_[idx(i, j)] - u_[i] - v_[j] < -tol) {
          ei = int(i);
          ej = int(j);
          return true;
        }
      }
    return false;
  }

  // The entering cell closes a unique cycle with the basis tree. Flow
  // shifts by the minimum over the cells losing flow; the first minimizer
  // along the cycle leaves the basis.
  void pivot_on(int ei, int ej) {
    const size_t nodes = ns_ + nt_;
    std::vector<int> parent(nodes, -1);
    std::vector<char> seen(nodes, 0);
    std::vector<int> queue;
    queue.push_back(ei);
    seen[ei] = 1;
    for (size_t q = 0; q < queue.size(); ++q) {
      const int node = queue[q];
      if (node == int(ns_) + ej) break;
      if (node < int(ns_)) {
        const size_t i = size_t(node);
        for (size_t j = 0; j < nt_; ++j)
          if (basic_[idx(i, j)] && !seen[ns_ + j]) {
            seen[ns_ + j] = 1;
            parent[ns_ + j] = node;
            queue.push_back(int(ns_ + j));
          }
      } else {
        const size_t j = size_t(node) - ns_;
        for (size_t i = 0; i < ns_; ++i)
          if (basic_[idx(i, j)] && !seen[i]) {
            seen[i] = 1;
            parent[i] = node;
            queue.push_back(int(i));
          }
      }
    }
    if (!seen[ns_ + ej])
      throw std::runtime_error("transport solver: basis tree disconnected");

    // Node path from the entering supply to the entering demand.
    std::vector<int> path;
    for (int node = int(ns_) + ej; node != -1; node = parent[node])
      path.push_back(node);
    std::reverse(path.begin(), path.end());  // starts at ei, ends at ns+ej

    // Cells along the path alternate -theta, +theta, ... ; the entering
    // cell itself takes +theta.
    std::vector<size_t> minus_cells, plus_cells;
    for (size_t e = 0; e + 1 < path.size(); ++e) {
      const int a = path[e];
      const int b = path[e + 1];
      const size_t i = size_t(a < int(ns_) ? a : b);
      const size_t j = size_t((a < int(ns_) ? b : a)) - ns_;
      if (e % 2 == 0)
        minus_cells.push_back(idx(i, j));
      else
        plus_cells.push_back(idx(i, j));
    }

    double theta = std::numeric_limits<double>::infinity();
    size_t leaving = size_t(-1);
    for (size_t c : minus_cells) {
      if (flow_[c] < theta) {
        theta = flow_[c];
        leaving = c;
      }
    }
    for (size_t c : minus_cells) flow_[c] -= theta;
    for (size_t c : plus_cells) flow_[c] += theta;
    flow_[idx(size_t(ei), size_t(ej))] += theta;
    basic_[idx(size_t(ei), size_t(ej))] = true;
    basic_[leaving] = false;
    flow_[leaving] = 0.0;
  }

  size_t ns_, nt_;
  std::vector<double> supply_, demand_, cost_;
  std::vector<double> flow_;
  std::vector<char> basic_;
  std::vector<double> u_, v_;
};

double pow_norm(double squared_norm, int p) {
  if (p == 2) return squared_norm;
  const double norm = std::sqrt(squared_norm);
  if (p == 1) return norm;
  return std::pow(norm, p);
}

}  // namespace

double exact_discrete_w2(const Sample& x, const Sample& y, int p) {
  if (x.d() != y.d())
    throw std::invalid_argument("exact_discrete_w2: dimension mismatch");
  if (p < 1) throw std::invalid_argument("exact_discrete_w2: p must be >= 1");
  if (x.n() * y.n() > 10000)
    throw std::invalid_argument(
        "exact_discrete_w2: instance too large (n_x * n_y must be <= 10000)");

  // Zero-weight atoms carry no mass and are dropped.
  std::vector<int> xi, yj;
  for (Eigen::Index i = 0; i < x.n(); ++i)
    if (x.weights[i] > 0.0) xi.push_back(int(i));
  for (Eigen::Index j = 0; j < y.n(); ++j)
    if (y.weights[j] > 0.0) yj.push_back(int(j));
  if (xi.empty() || yj.empty())
    throw std::invalid_argument("exact_discrete_w2: degenerate weights");

  std::vector<double> supply(xi.size()), demand(yj.size());
  double sx = 0.0, sy = 0.0;
  for (size_t i = 0; i < xi.size(); ++i) sx += x.weights[xi[i]];
  for (size_t j = 0; j < yj.size(); ++j) sy += y.weights[yj[j]];
  for (size_t i = 0; i < xi.size(); ++i) supply[i] = x.weights[xi[i]] / sx;
  for (size_t j = 0; j < yj.size(); ++j) demand[j] = y.weights[yj[j]] / sy;

  std::vector<double> cost(xi.size() * yj.size());
  for (size_t i = 0; i < xi.size(); ++i)
    for (size_t j = 0; j < yj.size(); ++j)
      cost[i * yj.size() + j] = pow_norm(
          (x.points.row(xi[i]) - y.points.row(yj[j])).squaredNorm(), p);

  TransportSimplex solver(std::move(supply), std::move(demand), std::move(cost));
  const double total = solver.solve();
  return std::pow(std::max(0.0, total), 1.0 / double(p));
}

}  // namespace ppmm
