#include "ppmm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ppmm/csv.hpp"

namespace ppmm {

namespace {

namespace fs = std::filesystem;

struct CellData {
  Sample x;
  Sample y;
};

/// Draws one replication's data. The weight scheme, when random, assigns
/// independent uniform(0,1) weights to every observation before
/// normalization. A single-point target (n_y = 1) is represented as the
/// same atom duplicated, which carries the identical measure while
/// satisfying the two-row minimum of the sample type.
CellData draw_cell(const ExperimentSpec& spec, int d, std::uint64_t seed) {
  RngState rng(seed);
  const int ny = spec.n_y > 0 ? spec.n_y : spec.n;
  Sample x = sample_gaussian(spec.gaussian_x(d), spec.n, rng);
  Sample y = [&] {
    if (ny > 1) return sample_gaussian(spec.gaussian_y(d), ny, rng);
    Sample two = sample_gaussian(spec.gaussian_y(d), 2, rng);
    two.points.row(1) = two.points.row(0);
    return two;
  }();
  if (spec.weights == WeightScheme::random_weights) {
    Eigen::VectorXd wx(x.n()), wy(y.n());
    for (Eigen::Index i = 0; i < wx.size(); ++i) wx[i] = rng.uniform();
    for (Eigen::Index i = 0; i < wy.size(); ++i) wy[i] = rng.uniform();
    x = Sample(std::move(x.points), std::move(wx));
    y = Sample(std::move(y.points), std::move(wy));
  }
  return {std::move(x), std::move(y)};
}

// FNV-1a; std::hash is not reproducible across standard libraries.
std::uint64_t label_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

CellResult run_cell(const ExperimentSpec& spec, const Strategy& method, int d,
                    int replication) {
  CellResult cell;
  cell.method = method.label();
  cell.dim = d;
  cell.replication = replication;
  cell.seed = spec.base_seed + std::uint64_t(replication);
  try {
    CellData data = draw_cell(spec, d, cell.seed);
    EngineConfig config = spec.engine;
    config.seed = mix_seed(cell.seed ^ label_hash(cell.method));
    auto [estimate, trace] = fit(data.x, data.y, method, config);
    cell.trace = std::move(trace);
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

std::string sanitize_for_csv(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

// Sample standard deviation; zero for fewer than two values.
double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / double(v.size() - 1));
}

std::string trace_file_name(const std::string& name, int d,
                            const std::string& method, int rep) {
  return name + "_d" + std::to_string(d) + "_" + method + "_rep" +
         std::to_string(rep) + "_trace.csv";
}

void write_cells_csv(const std::string& name, int d,
                     const std::vector<CellResult>& cells, const fs::path& out_dir,
                     std::vector<fs::path>& files) {
  std::string out =
      "method,replication,seed,status,iterations,termination,final_w_displacement\n";
  for (const auto& c : cells) {
    if (c.dim != d) continue;
    out += c.method + ',' + std::to_string(c.replication) + ',' +
           std::to_string(c.seed) + ',';
    if (c.ok) {
      out += "ok," + std::to_string(c.trace.records.size()) + ',' +
             termination_reason_name(c.trace.termination_reason) + ',' +
             csv::format_double(c.trace.final_w_displacement());
    } else {
      out += "failed:" + sanitize_for_csv(c.error) + ",0,none,nan";
    }
    out += '\n';
  }
  fs::path path = out_dir / (name + "_d" + std::to_string(d) + "_cells.csv");
  csv::write_file_atomic(path, out);
  files.push_back(path);
}

}  // namespace

void ExperimentSpec::validate() const {
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (dims.empty()) throw std::invalid_argument("at least one dimension required");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("dimensions must be >= 1");
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (n_y < 0) throw std::invalid_argument("n_y must be >= 0");
  if (methods.empty()) throw std::invalid_argument("at least one method required");
  for (const auto& m : methods) m.validate();
  engine.validate();
  if (!(std::abs(rho_x) < 1.0 && std::abs(rho_y) < 1.0))
    throw std::invalid_argument("|rho| must be < 1");
}

GaussianSpec ExperimentSpec::gaussian_x(int d) const {
  return GaussianSpec{Eigen::VectorXd::Constant(d, mu_x), ar1_covariance(d, rho_x)};
}

GaussianSpec ExperimentSpec::gaussian_y(int d) const {
  return GaussianSpec{Eigen::VectorXd::Constant(d, mu_y), ar1_covariance(d, rho_y)};
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 paired points");
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: degenerate x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

ConvergenceExperimentResult run_convergence_experiment(
    const ExperimentSpec& spec, const fs::path& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  ConvergenceExperimentResult result;

  for (int d : spec.dims) {
    const double truth = closed_form_w2(spec.gaussian_x(d), spec.gaussian_y(d));
    result.per_dim_truth.emplace_back(d, truth);
    result.ground_truth_w2 = truth;

    for (const Strategy& method : spec.methods) {
      for (int r = 0; r < spec.replications; ++r) {
        CellResult cell = run_cell(spec, method, d, r);
        if (cell.ok) {
          fs::path path =
              out_dir / trace_file_name(spec.name, d, cell.method, r);
          csv::write_file_atomic(path, cell.trace.to_csv());
          result.files.push_back(path);
        }
        result.cells.push_back(std::move(cell));
      }
    }

    // Per-iteration mean/sd across the replications that reached that
    // iteration, one block per method.
    std::string summary =
        "method,iteration,w_disp_mean,w_disp_sd,w_proxy_mean,w_proxy_sd,"
        "ground_truth_w2\n";
    for (const Strategy& method : spec.methods) {
      const std::string label = method.label();
      size_t longest = 0;
      for (const auto& c : result.cells)
        if (c.dim == d && c.ok && c.method == label)
          longest = std::max(longest, c.trace.records.size());
      for (size_t it = 0; it < longest; ++it) {
        std::vector<double> disp, proxy;
        for (const auto& c : result.cells) {
          if (c.dim != d || !c.ok || c.method != label) continue;
          if (it < c.trace.records.size()) {
            disp.push_back(c.trace.records[it].w_displacement);
            proxy.push_back(c.trace.records[it].w_direction_proxy);
          }
        }
        summary += label + ',' + std::to_string(it + 1) + ',' +
                   csv::format_double(mean_of(disp)) + ',' +
                   csv::format_double(sd_of(disp)) + ',' +
                   csv::format_double(mean_of(proxy)) + ',' +
                   csv::format_double(sd_of(proxy)) + ',' +
                   csv::format_double(truth) + '\n';
      }
    }
    fs::path spath = out_dir / (spec.name + "_d" + std::to_string(d) + "_summary.csv");
    csv::write_file_atomic(spath, summary);
    result.files.push_back(spath);

    write_cells_csv(spec.name, d, result.cells, out_dir, result.files);
  }
  return result;
}

TimingExperimentResult run_timing_experiment(const ExperimentSpec& spec,
                                             const fs::path& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  TimingExperimentResult result;

  std::string out =
      "method,dim,mean_iteration_ms,sd_iteration_ms,mean_total_ms,sd_total_ms,"
      "mean_iterations\n";
  for (int d : spec.dims) {
    for (const Strategy& method : spec.methods) {
      std::vector<double> iter_ms, total_ms, iters;
      for (int r = 0; r < spec.replications; ++r) {
        CellResult cell = run_cell(spec, method, d, r);
        if (cell.ok) {
          double total = 0.0;
          for (const auto& rec : cell.trace.records) {
            iter_ms.push_back(rec.elapsed_ms);
            total += rec.elapsed_ms;
          }
          total_ms.push_back(total);
          iters.push_back(double(cell.trace.records.size()));
        }
        result.cells.push_back(std::move(cell));
      }
      TimingRow row;
      row.method = method.label();
      row.dim = d;
      row.mean_iteration_ms = mean_of(iter_ms);
      row.sd_iteration_ms = sd_of(iter_ms);
      row.mean_total_ms = mean_of(total_ms);
      row.sd_total_ms = sd_of(total_ms);
      row.mean_iterations = mean_of(iters);
      result.rows.push_back(row);
      out += row.method + ',' + std::to_string(d) + ',' +
             csv::format_double(row.mean_iteration_ms) + ',' +
             csv::format_double(row.sd_iteration_ms) + ',' +
             csv::format_double(row.mean_total_ms) + ',' +
             csv::format_double(row.sd_total_ms) + ',' +
             csv::format_double(row.mean_iterations) + '\n';
    }
  }
  fs::path path = out_dir / (spec.name + "_timing.csv");
  csv::write_file_atomic(path, out);
  result.files.push_back(path);
  return result;
}

KvdExperimentResult run_k_vs_d_experiment(const ExperimentSpec& spec,
                                          const fs::path& out_dir) {
  spec.validate();
  if (spec.dims.size() < 4)
    throw std::invalid_argument("k-vs-d experiment needs at least 4 dimensions");
  fs::create_directories(out_dir);
  KvdExperimentResult result;

  const Strategy method = spec.methods.front();
  std::string out = "d,mean_k,sd_k\n";
  std::vector<double> xs, ys;
  for (int d : spec.dims) {
    std::vector<double> ks;
    for (int r = 0; r < spec.replications; ++r) {
      CellResult cell = run_cell(spec, method, d, r);
      if (!cell.ok)
        throw std::runtime_error("k-vs-d cell failed (d=" + std::to_string(d) +
                                 ", rep=" + std::to_string(r) + "): " + cell.error);
      ks.push_back(double(cell.trace.records.size()));
    }
    KvdRow row{d, mean_of(ks), sd_of(ks)};
    result.rows.push_back(row);
    xs.push_back(double(d));
    ys.push_back(row.mean_k);
    out += std::to_string(d) + ',' + csv::format_double(row.mean_k) + ',' +
           csv::format_double(row.sd_k) + '\n';
  }
  LineFit f = fit_line(xs, ys);
  result.slope = f.slope;
  result.intercept = f.intercept;
  result.r_squared = f.r_squared;

  fs::path path = out_dir / (spec.name + "_kvd.csv");
  csv::write_file_atomic(path, out);
  result.files.push_back(path);

  std::string fit_out = "slope,intercept,r_squared\n";
  fit_out += csv::format_double(f.slope) + ',' + csv::format_double(f.intercept) +
             ',' + csv::format_double(f.r_squared) + '\n';
  fs::path fit_path = out_dir / (spec.name + "_kvd_fit.csv");
  csv::write_file_atomic(fit_path, fit_out);
  result.files.push_back(fit_path);
  return result;
}

ExtensionExperimentResult run_extension_experiment(const ExperimentSpec& spec,
                                                   const fs::path& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  ExtensionExperimentResult result;

  const int d = spec.dims.front();
  const Strategy method =
      spec.methods.empty() ? Strategy::ppmm() : spec.methods.front();

  std::string out = "replication,seed,final_w,oracle_w,rel_error,status\n";
  for (int r = 0; r < spec.replications; ++r) {
    ExtensionCell ext;
    ext.replication = r;
    ext.seed = spec.base_seed + std::uint64_t(r);

    CellResult cell = run_cell(spec, method, d, r);
    if (!cell.ok) {
      ext.status = "failed:" + sanitize_for_csv(cell.error);
      out += std::to_string(r) + ',' + std::to_string(ext.seed) + ",nan,nan,nan," +
             ext.status + '\n';
      result.cells.push_back(std::move(ext));
      result.traces.push_back(std::move(cell));
      continue;
    }
    ext.final_w = cell.trace.final_w_displacement();

    CellData data = draw_cell(spec, d, ext.seed);
    const long pairs = long(data.x.n()) * long(data.y.n());
    std::string oracle_text = "nan";
    std::string rel_text = "nan";
    if (pairs <= 10000) {
      ext.oracle_w = exact_discrete_w2(data.x, data.y, spec.engine.p);
      ext.status = "ok";
      oracle_text = csv::format_double(*ext.oracle_w);
      rel_text = csv::format_double(
          std::abs(ext.final_w - *ext.oracle_w) / std::max(*ext.oracle_w, 1e-12));
    } else {
      ext.status = "oracle_omitted:instance exceeds n_x*n_y<=10000";
    }
    out += std::to_string(r) + ',' + std::to_string(ext.seed) + ',' +
           csv::format_double(ext.final_w) + ',' + oracle_text + ',' + rel_text +
           ',' + ext.status + '\n';

    fs::path tpath = out_dir / trace_file_name(spec.name, d, method.label(), r);
    csv::write_file_atomic(tpath, cell.trace.to_csv());
    result.files.push_back(tpath);
    result.cells.push_back(std::move(ext));
    result.traces.push_back(std::move(cell));
  }

  fs::path path = out_dir / (spec.name + "_extension.csv");
  csv::write_file_atomic(path, out);
  result.files.push_back(path);
  return result;
}

}  // namespace ppmm
