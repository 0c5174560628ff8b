#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "ppmm/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

/// Runs the CLI binary with the given arguments, capturing stdout+stderr.
RunResult run_cli(const std::string& args) {
  fs::path out = fs::temp_directory_path() / "ppmm_cli_out.txt";
  std::string cmd = std::string(PPMM_CLI_PATH) + " " + args + " > " +
                    out.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  std::string text = ppmm::csv::read_file(out);
  return {WEXITSTATUS(rc), text};
}

fs::path write_file(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream f(p, std::ios::trunc);
  f << content;
  return p;
}

}  // namespace

TEST_CASE("oracle gaussian prints the closed form") {
  auto r = run_cli("oracle gaussian --dims 10 --mu-x -2 --mu-y 2 --rho-x 0.8 --rho-y 0.5");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("w2=12.694") != std::string::npos);
}

TEST_CASE("fit and eval round trip through the filesystem") {
  fs::path x = write_file("cli_x.csv", "x1,x2\n0,0\n1,0\n0,1\n1,1\n2,2\n");
  fs::path y = write_file("cli_y.csv", "x1,x2\n5,5\n6,5\n5,6\n6,6\n7,7\n");
  fs::path est = fs::temp_directory_path() / "cli_estimate";
  fs::remove_all(est);
  auto r = run_cli("fit " + x.string() + " " + y.string() + " --out " +
                   est.string() + " --max-iter 10 --tol 0");
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(est / "manifest.json"));
  CHECK(fs::exists(est / "trace.csv"));

  auto e = run_cli("eval " + est.string() + " " + x.string());
  CHECK(e.exit_code == 0);
  CHECK(e.output.find("w_hat=") != std::string::npos);
}

TEST_CASE("config file keys apply and CLI flags win") {
  fs::path x = write_file("cli_cx.csv",
                          "x1,x2\n0,0.3\n1,-0.8\n2,0.1\n3,1.2\n-1,0.7\n0.5,-1.1\n");
  fs::path y = write_file("cli_cy.csv",
                          "x1,x2\n10,3\n11,-2\n12,0.5\n13,4\n9,-3\n10.5,1\n");
  fs::path cfg = write_file("cli_fit.cfg",
                            "# iteration cap from the config file\n"
                            "max-iter=3\n"
                            "tol=0\n");
  fs::path est = fs::temp_directory_path() / "cli_estimate_cfg";

  fs::remove_all(est);
  auto from_cfg = run_cli("fit " + x.string() + " " + y.string() + " --out " +
                          est.string() + " --config " + cfg.string());
  CHECK(from_cfg.exit_code == 0);
  CHECK(from_cfg.output.find("iterations=3") != std::string::npos);

  fs::remove_all(est);
  auto overridden = run_cli("fit " + x.string() + " " + y.string() + " --out " +
                            est.string() + " --config " + cfg.string() +
                            " --max-iter 2");
  CHECK(overridden.exit_code == 0);
  CHECK(overridden.output.find("iterations=2") != std::string::npos);
}

TEST_CASE("errors exit nonzero with a one-line message") {
  auto missing = run_cli("fit /nonexistent/a.csv /nonexistent/b.csv");
  CHECK(missing.exit_code == 1);
  CHECK(missing.output.rfind("error:", 0) == 0);

  auto badflag = run_cli("simulate --method bogus --dims 3 --n 50 --reps 1");
  CHECK(badflag.exit_code != 0);
}

TEST_CASE("kvd accepts comma-separated dims and huge tolerance") {
  fs::path out = fs::temp_directory_path() / "cli_kvd";
  fs::remove_all(out);
  auto r = run_cli("kvd --dims 2,3,4,5 --n 60 --reps 1 --tol 1.0 --max-iter 10 --out " +
                   out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("slope=") != std::string::npos);
  CHECK(fs::exists(out / "kvd_kvd.csv"));
}

TEST_CASE("plot renders traces and grouped summaries") {
  fs::path out = fs::temp_directory_path() / "cli_plot";
  fs::remove_all(out);
  auto sim = run_cli("simulate --dims 4 --n 100 --reps 2 --method ppmm "
                     "--method random --max-iter 8 --tol 0 --seed 5 --out " +
                     out.string());
  REQUIRE(sim.exit_code == 0);

  fs::path svg1 = out / "trace.svg";
  auto p1 = run_cli("plot " + (out / "simulate_d4_ppmm_rep0_trace.csv").string() +
                    " --y w_hat_displacement --out " + svg1.string());
  CHECK(p1.exit_code == 0);
  CHECK(fs::exists(svg1));
  CHECK(ppmm::csv::read_file(svg1).find("<svg") == 0);

  fs::path svg2 = out / "summary.svg";
  auto p2 = run_cli("plot " + (out / "simulate_d4_summary.csv").string() +
                    " --x iteration --y w_disp_mean --group method --out " +
                    svg2.string());
  CHECK(p2.exit_code == 0);
  CHECK(p2.output.find("series=2") != std::string::npos);
}
