#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "ppmm/engine.hpp"
#include "ppmm/gaussian_oracle.hpp"

using namespace ppmm;
namespace fs = std::filesystem;

namespace {

Sample gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                std::uint64_t seed) {
  RngState rng(seed);
  return sample_gaussian(GaussianSpec{mean, cov}, n, rng);
}

Sample ar1_pair_x(int d, int n, std::uint64_t seed) {
  return gaussian(Eigen::VectorXd::Constant(d, -2.0), ar1_covariance(d, 0.8), n,
                  seed);
}

Sample ar1_pair_y(int d, int n, std::uint64_t seed) {
  return gaussian(Eigen::VectorXd::Constant(d, 2.0), ar1_covariance(d, 0.5), n,
                  seed);
}

Sample permuted(const Sample& s, std::uint64_t seed) {
  std::vector<int> idx(s.n());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 gen(seed);
  std::shuffle(idx.begin(), idx.end(), gen);
  Eigen::MatrixXd pts(s.n(), s.d());
  Eigen::VectorXd w(s.n());
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    pts.row(i) = s.points.row(idx[i]);
    w[i] = s.weights[idx[i]];
  }
  return Sample(std::move(pts), std::move(w));
}

}  // namespace

TEST_CASE("empirical_wasserstein basics") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 0, 1, 1;
  Sample x(a);
  CHECK(empirical_wasserstein(x, x, 2) == 0.0);

  Eigen::MatrixXd b = a;
  b.col(0).array() += 3.0;
  b.col(1).array() += 4.0;
  CHECK(empirical_wasserstein(x, Sample(b), 2) == doctest::Approx(5.0).epsilon(1e-12));

  Eigen::MatrixXd c(2, 1), e(2, 1);
  c << 0, 0;
  e << 1, 3;  // distances 1 and 3
  CHECK(empirical_wasserstein(Sample(c), Sample(e), 2) ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));

  Eigen::MatrixXd wide(2, 3);
  wide.setZero();
  CHECK_THROWS_AS(empirical_wasserstein(x, Sample(wide), 2), std::invalid_argument);
}

TEST_CASE("ppmm_step update arithmetic") {
  // Projection along e1: u = (1, 3), v = (4, 6); the monotone map sends
  // 1 -> 4, so the row (1, 2) moves to (4, 2).
  Eigen::MatrixXd xs(2, 2), ys(2, 2);
  xs << 1, 2, 3, 5;
  ys << 4, 7, 6, 9;
  Direction e1 = Direction::from_vector(Eigen::VectorXd::Unit(2, 0));
  auto [moved, map] = ppmm_step(Sample(xs), Sample(ys), e1);
  CHECK(moved.points(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(moved.points(0, 1) == 2.0);
  CHECK(moved.points(1, 0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(moved.points(1, 1) == 5.0);
}

TEST_CASE("ppmm_step is a no-op when projections agree") {
  Sample x = gaussian(Eigen::VectorXd::Zero(3), ar1_covariance(3, 0.4), 50, 3);
  Direction dir = Direction::from_vector(Eigen::VectorXd::Ones(3));
  auto [moved, map] = ppmm_step(x, x, dir);
  CHECK((moved.points - x.points).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("post-step projections match the target") {
  Sample x = ar1_pair_x(4, 300, 61);
  Sample y = ar1_pair_y(4, 300, 62);
  RngState rng(63);
  Direction dir = random_sphere_direction(4, rng);
  auto [moved, map] = ppmm_step(x, y, dir);

  const Eigen::VectorXd pm = moved.points * dir.vec;
  const Eigen::VectorXd pv = y.points * dir.vec;
  CHECK(wasserstein_1d(pm, moved.weights, pv, y.weights, 2) < 1e-10);

  // Sorted projected multisets coincide for equal-size uniform samples.
  std::vector<double> a(pm.data(), pm.data() + pm.size());
  std::vector<double> b(pv.data(), pv.data() + pv.size());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double max_diff = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
  CHECK(max_diff <= 1e-10);
}

TEST_CASE("ppmm_step sign invariance") {
  Sample x = ar1_pair_x(3, 200, 71);
  Sample y = ar1_pair_y(3, 200, 72);
  RngState rng(73);
  Direction dir = random_sphere_direction(3, rng);
  Direction neg{-dir.vec};
  auto [plus_s, m1] = ppmm_step(x, y, dir);
  auto [minus_s, m2] = ppmm_step(x, y, neg);
  CHECK((plus_s.points - minus_s.points).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("sliced_step degenerate averages") {
  Sample x = ar1_pair_x(3, 100, 81);
  Sample y = ar1_pair_y(3, 100, 82);
  RngState rng(83);
  Direction dir = random_sphere_direction(3, rng);

  Sample one = sliced_step(x, y, {dir});
  auto [stepped, map] = ppmm_step(x, y, dir);
  CHECK((one.points - stepped.points).cwiseAbs().maxCoeff() == 0.0);

  Sample same3 = sliced_step(x, y, {dir, dir, dir});
  CHECK((same3.points - stepped.points).cwiseAbs().maxCoeff() <= 1e-12);

  Sample fixed = sliced_step(x, x, {dir, random_sphere_direction(3, rng)});
  CHECK((fixed.points - x.points).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(sliced_step(x, y, {}), std::invalid_argument);
}

TEST_CASE("fit on identical samples stops degenerate immediately") {
  Sample x = gaussian(Eigen::VectorXd::Zero(4), ar1_covariance(4, 0.3), 200, 91);
  auto [estimate, trace] = fit(x, x, Strategy::ppmm(), EngineConfig{});
  CHECK(trace.termination_reason == TerminationReason::degenerate);
  REQUIRE(trace.records.size() == 1);
  CHECK(trace.records[0].w_displacement < 1e-8);
  CHECK(estimate.iterations() == 1);
}

TEST_CASE("fit converges to the closed form on a Gaussian pair") {
  const int d = 10, n = 2000;
  GaussianSpec gx{Eigen::VectorXd::Constant(d, -2.0), ar1_covariance(d, 0.8)};
  GaussianSpec gy{Eigen::VectorXd::Constant(d, 2.0), ar1_covariance(d, 0.5)};
  const double truth = closed_form_w2(gx, gy);

  Sample x = ar1_pair_x(d, n, 101);
  Sample y = ar1_pair_y(d, n, 102);
  EngineConfig config;
  config.max_iterations = 150;
  config.tolerance = 0.0;
  auto [estimate, trace] = fit(x, y, Strategy::ppmm(), config);
  CHECK(trace.termination_reason == TerminationReason::max_iterations);
  const double rel = std::abs(trace.final_w_displacement() - truth) / truth;
  CHECK(rel < 0.10);
}

TEST_CASE("converged traces end near their minimum") {
  // The displacement curve fluctuates when the group means differ, so this
  // stability property is checked on mean-adjusted runs, where the curve
  // rises monotonically to its plateau (observed min/final ratio ~0.998).
  for (int r = 0; r < 3; ++r) {
    Sample x = ar1_pair_x(10, 2000, 500 + r);
    Sample y = ar1_pair_y(10, 2000, 600 + r);
    EngineConfig config;  // defaults: tolerance 1e-5, max 200
    auto [estimate, trace] = fit(x, y, Strategy::ppmm(true), config);
    REQUIRE(trace.termination_reason == TerminationReason::tolerance);
    double min_w = 1e300;
    for (const auto& rec : trace.records)
      min_w = std::min(min_w, rec.w_displacement);
    CHECK(std::abs(trace.final_w_displacement() - min_w) /
              trace.final_w_displacement() <
          0.10);
  }
}

TEST_CASE("random strategy trails ppmm at equal budget") {
  const int d = 10, n = 500;
  GaussianSpec gx{Eigen::VectorXd::Constant(d, -2.0), ar1_covariance(d, 0.8)};
  GaussianSpec gy{Eigen::VectorXd::Constant(d, 2.0), ar1_covariance(d, 0.5)};
  const double truth = closed_form_w2(gx, gy);

  std::vector<double> ppmm_err, random_err;
  for (int seed = 0; seed < 5; ++seed) {
    Sample x = ar1_pair_x(d, n, 200 + seed);
    Sample y = ar1_pair_y(d, n, 300 + seed);
    EngineConfig config;
    config.max_iterations = 15;  // adjusted ppmm has settled, random has not
    config.tolerance = 0.0;
    config.seed = 40 + seed;
    auto [e1, t1] = fit(x, y, Strategy::ppmm(true), config);
    auto [e2, t2] = fit(x, y, Strategy::random(), config);
    ppmm_err.push_back(std::abs(t1.final_w_displacement() - truth) / truth);
    random_err.push_back(std::abs(t2.final_w_displacement() - truth) / truth);
  }
  std::sort(ppmm_err.begin(), ppmm_err.end());
  std::sort(random_err.begin(), random_err.end());
  CHECK(ppmm_err[2] < random_err[2]);
}

TEST_CASE("fit is invariant to row permutations") {
  const int d = 5, n = 400;
  Sample x = ar1_pair_x(d, n, 111);
  Sample y = ar1_pair_y(d, n, 112);
  EngineConfig config;
  config.max_iterations = 40;
  config.tolerance = 0.0;
  auto [e1, t1] = fit(x, y, Strategy::ppmm(), config);
  auto [e2, t2] = fit(permuted(x, 5), permuted(y, 6), Strategy::ppmm(), config);
  CHECK(std::abs(t1.final_w_displacement() - t2.final_w_displacement()) <= 1e-9);
}

TEST_CASE("fit is invariant to row permutations with weights") {
  const int d = 4, n = 150;
  RngState wrng(900);
  Sample xb = ar1_pair_x(d, n, 911);
  Sample yb = ar1_pair_y(d, n, 912);
  Eigen::VectorXd wx(n), wy(n);
  for (int i = 0; i < n; ++i) {
    wx[i] = wrng.uniform() + 0.05;
    wy[i] = wrng.uniform() + 0.05;
  }
  Sample x(xb.points, wx), y(yb.points, wy);
  EngineConfig config;
  config.max_iterations = 30;
  config.tolerance = 0.0;
  auto [e1, t1] = fit(x, y, Strategy::ppmm(), config);
  auto [e2, t2] = fit(permuted(x, 7), permuted(y, 8), Strategy::ppmm(), config);
  CHECK(std::abs(t1.final_w_displacement() - t2.final_w_displacement()) <= 1e-9);
}

TEST_CASE("translation pair transports in one move at any order") {
  const int d = 3, n = 200;
  Sample x = gaussian(Eigen::VectorXd::Zero(d), ar1_covariance(d, 0.5), n, 921);
  Eigen::VectorXd shift(d);
  shift << 2.0, -1.0, 2.0;
  Sample y(Eigen::MatrixXd(x.points.rowwise() + shift.transpose()));
  for (int p : {1, 2}) {
    EngineConfig config;
    config.p = p;
    config.tolerance = 1e-12;
    config.max_iterations = 80;
    auto [estimate, trace] = fit(x, y, Strategy::ppmm(), config);
    CHECK(trace.final_w_displacement() ==
          doctest::Approx(shift.norm()).epsilon(1e-8));
    CHECK(trace.records.size() < 80);
  }
}

TEST_CASE("configuration validation") {
  Sample x = ar1_pair_x(2, 10, 931);
  Sample y = ar1_pair_y(2, 10, 932);
  EngineConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(fit(x, y, Strategy::ppmm(), bad), std::invalid_argument);
  bad = EngineConfig{};
  bad.tolerance = -1.0;
  CHECK_THROWS_AS(fit(x, y, Strategy::ppmm(), bad), std::invalid_argument);
  bad = EngineConfig{};
  bad.p = 0;
  CHECK_THROWS_AS(fit(x, y, Strategy::ppmm(), bad), std::invalid_argument);
  CHECK_THROWS_AS(fit(x, y, Strategy::sliced(0), EngineConfig{}),
                  std::invalid_argument);
  CHECK(Strategy::sliced(25).label() == "sliced25");
  CHECK(Strategy::ppmm().label() == "ppmm");
}

TEST_CASE("seeded strategies replay bit-identically") {
  const int d = 4, n = 150;
  Sample x = ar1_pair_x(d, n, 121);
  Sample y = ar1_pair_y(d, n, 122);
  EngineConfig config;
  config.max_iterations = 25;
  config.tolerance = 0.0;
  config.seed = 777;
  for (Strategy s : {Strategy::random(), Strategy::sliced(4)}) {
    auto [e1, t1] = fit(x, y, s, config);
    auto [e2, t2] = fit(x, y, s, config);
    REQUIRE(t1.records.size() == t2.records.size());
    for (size_t i = 0; i < t1.records.size(); ++i)
      CHECK(t1.records[i].w_displacement == t2.records[i].w_displacement);
  }
}

TEST_CASE("apply_map replays the training trajectory") {
  const int d = 4, n = 200;
  Sample x = ar1_pair_x(d, n, 131);
  Sample y = ar1_pair_y(d, n, 132);
  EngineConfig config;
  config.max_iterations = 30;
  config.tolerance = 0.0;
  config.seed = 5;

  for (Strategy s : {Strategy::ppmm(), Strategy::sliced(3)}) {
    auto [estimate, trace] = fit(x, y, s, config);
    Sample replay = apply_map(estimate, x);
    const double final_w = empirical_wasserstein(x, replay, config.p);
    CHECK(std::abs(final_w - trace.final_w_displacement()) <= 1e-9);
  }
}

TEST_CASE("apply_map with empty estimate is the identity") {
  Sample x = ar1_pair_x(3, 50, 141);
  MongeMapEstimate empty;
  empty.source_dim = 3;
  Sample out = apply_map(empty, x);
  CHECK((out.points - x.points).cwiseAbs().maxCoeff() == 0.0);

  MongeMapEstimate wrong;
  wrong.source_dim = 2;
  CHECK_THROWS_AS(apply_map(wrong, x), std::invalid_argument);
}

TEST_CASE("a training point maps to its fitted image") {
  const int d = 3, n = 80;
  Sample x = ar1_pair_x(d, n, 151);
  Sample y = ar1_pair_y(d, n, 152);
  EngineConfig config;
  config.max_iterations = 15;
  config.tolerance = 0.0;
  auto [estimate, trace] = fit(x, y, Strategy::ppmm(), config);
  Sample full = apply_map(estimate, x);

  Eigen::MatrixXd two = x.points.topRows(2);
  Sample probe(two);
  Sample mapped = apply_map(estimate, probe);
  CHECK((mapped.points - full.points.topRows(2)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("estimate directory round trip") {
  const int d = 3, n = 60;
  Sample x = ar1_pair_x(d, n, 161);
  Sample y = ar1_pair_y(d, n, 162);
  EngineConfig config;
  config.max_iterations = 8;
  config.tolerance = 0.0;
  config.seed = 9;
  auto [estimate, trace] = fit(x, y, Strategy::sliced(2), config);

  fs::path dir = fs::temp_directory_path() / "ppmm_test_estimate";
  fs::remove_all(dir);
  save_estimate(estimate, dir);
  MongeMapEstimate loaded = load_estimate(dir);
  CHECK(loaded.source_dim == estimate.source_dim);
  CHECK(loaded.strategy.kind == estimate.strategy.kind);
  REQUIRE(loaded.steps.size() == estimate.steps.size());

  Sample a = apply_map(estimate, x);
  Sample b = apply_map(loaded, x);
  CHECK((a.points - b.points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trace CSV round trip") {
  ConvergenceTrace t;
  t.termination_reason = TerminationReason::tolerance;
  t.records.push_back(TraceRecord{1, 1.25, 0.5, 0.125, 3.5});
  t.records.push_back(TraceRecord{2, 1.2500000001, 0.25, -1.0, 4.5});
  ConvergenceTrace back = ConvergenceTrace::from_csv(t.to_csv());
  CHECK(back.termination_reason == TerminationReason::tolerance);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].w_displacement == t.records[1].w_displacement);
  CHECK(back.records[0].save_lambda1 == 0.125);
}

TEST_CASE("non-finite inputs abort with the iteration index") {
  Eigen::MatrixXd xs(2, 2), ys(2, 2);
  xs << 0, 0, 1, 1;
  ys << 1e308, 0, -1e308, 1;
  EngineConfig config;
  config.max_iterations = 3;
  // Huge but finite values overflow the squared distance into inf.
  CHECK_THROWS_WITH_AS(fit(Sample(xs), Sample(ys), Strategy::ppmm(), config),
                       doctest::Contains("iteration"), std::runtime_error);
}
