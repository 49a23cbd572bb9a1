#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kpzlab/cli.hpp"
#include "kpzlab/errors.hpp"

using namespace kpzlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "kpzlab_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal config gets every default") {
  const auto c = parse_config(R"({"experiment": "sigma-sweep"})");
  CHECK(c.experiment == Experiment::sigma_sweep);
  CHECK(c.seed == 1);
  CHECK(c.output_path == "sigma-sweep.csv");
  CHECK(c.integer("n_samples") == 100000);
  CHECK(c.reals("L_list") == std::vector<double>{16, 32, 64, 128, 256, 512});
  CHECK(c.texts("forms") == std::vector<std::string>{"shifted"});
  CHECK(emit_config(c).find("\"tolerance\": 0.1") != std::string::npos);
}

TEST_CASE("out-of-range r names the key and its bound") {
  const auto msg = config_error(R"({"experiment": "sigma-r", "r": 1.5})");
  CHECK(msg.find("r: must lie in [0, 1]") != std::string::npos);
}

TEST_CASE("every violation is reported at once") {
  const auto msg = config_error(R"({"experiment": "she-variance", "bogus": 1, "n_replicas": "many", "alpha": 0.9})");
  CHECK(msg.find("bogus: unknown key") != std::string::npos);
  CHECK(msg.find("n_replicas: must be an integer") != std::string::npos);
  CHECK(msg.find("alpha: must lie in") != std::string::npos);
  CHECK(config_error(R"({"seed": 3})").find("experiment: missing required key") != std::string::npos);
  CHECK(config_error(R"({"experiment": "sigma-r"})").find("r: missing required key") != std::string::npos);
  CHECK(config_error(R"({"experiment": "nope"})").find("unknown name") != std::string::npos);
  CHECK(config_error("[1, 2]").find("flat JSON object") != std::string::npos);
  CHECK(config_error("{").find("not valid JSON") != std::string::npos);
  CHECK(config_error(R"({"experiment": "wedge-exit", "a_list": [1, 2, 3]})").find("same length") != std::string::npos);
  CHECK(config_error(R"({"experiment": "sigma-r", "route": "independent", "r": 0.5})").find("fixes r") !=
        std::string::npos);
}

TEST_CASE("canonical form round-trips for every experiment") {
  for (auto e : all_experiments()) {
    std::string text = std::string(R"({"experiment": ")") + std::string(to_string(e)) + R"(", "seed": 77)";
    if (e == Experiment::sigma_r) text += R"(, "r": 0.25)";
    text += "}";
    const auto c = parse_config(text);
    const auto again = parse_config(emit_config(c));
    CHECK(again == c);
    CHECK(emit_config(again) == emit_config(c));
  }
}

TEST_CASE("integral floats are accepted as integers") {
  const auto c = parse_config(R"({"experiment": "entropic", "n_samples": 1e5})");
  CHECK(c.integer("n_samples") == 100000);
}

TEST_CASE("seed override from the environment value") {
  auto c = parse_config(R"({"experiment": "entropic", "seed": 5})");
  apply_seed_override(c, nullptr);
  CHECK(c.seed == 5);
  apply_seed_override(c, "123");
  CHECK(c.seed == 123);
  CHECK_THROWS_AS(apply_seed_override(c, "12x"), ConfigError);
}

TEST_CASE("csv quoting round-trips") {
  CsvTable t;
  t.header = {"a", "b,c", "d"};
  t.rows = {{"1", "x\"y", "line\nbreak"}, {"", "2.5", "plain"}};
  const auto text = format_csv(t);
  CHECK(text.substr(0, 11) == "a,\"b,c\",d\r\n");
  const auto back = parse_csv(text);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("csv parse errors carry line numbers") {
  CHECK_THROWS_AS(parse_csv(""), ParseError);
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_csv("a,b\n\"open,2\n"), ParseError);
}

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(16.0) == "16");
  const double v = 0.12345678901234567;
  CHECK(std::stod(format_number(v)) == v);
}

TEST_CASE("band arithmetic") {
  CHECK(band_pass(-0.52, -0.5, 0.1));
  CHECK_FALSE(band_pass(1.3, 1.0, 0.15));
  CHECK(band_pass(0.2, 2.0 / 3.0, 0.15, true));
  CHECK_FALSE(band_pass(0.9, 2.0 / 3.0, 0.15, true));
  CHECK_FALSE(band_pass(std::nan(""), 0.0, 1.0));
}

TEST_CASE("report passes a sigma slope of -0.52 against -0.5") {
  CsvTable t;
  t.header = {"experiment", "form", "r", "L", "n_samples", "n_grid", "mean", "std_error", "seed"};
  for (double L : {16.0, 32.0, 64.0, 128.0}) {
    const double m = 0.5 * std::pow(L, -0.52);
    t.rows.push_back({"sigma-sweep", "shifted", "0.5", format_number(L), "100000", "256", format_number(m),
                      format_number(0.02 * m), "1"});
  }
  const auto rows = report_table(format_csv(t), "mem");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].measured == doctest::Approx(-0.52));
  CHECK(rows[0].predicted == -0.5);
  CHECK(rows[0].pass);
  CHECK(format_report(rows).find("PASS") != std::string::npos);
}

TEST_CASE("report fails an alpha = 0 slope of 1.3 against 1") {
  CsvTable t;
  t.header = {"experiment", "alpha", "lambda", "t", "L", "n_x", "dt", "n_replicas", "var_estimate", "std_error", "seed"};
  for (double s : {4.0, 8.0, 16.0, 32.0}) {
    const double v = 0.3 * std::pow(s, 1.3);
    t.rows.push_back({"she-variance", "0", "4", format_number(s), "4", "64", "0.001", "2000", format_number(v),
                      format_number(0.03 * v), "1"});
  }
  const auto rows = report_table(format_csv(t), "mem");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].predicted == 1.0);
  CHECK_FALSE(rows[0].pass);
}

TEST_CASE("report rejects empty, malformed and unknown files") {
  CHECK_THROWS_AS(report_table("", "x"), ParseError);
  CHECK_THROWS_AS(report_table("foo,bar\n1,2\n", "x"), ParseError);
  try {
    report_table("experiment,form,r,L,n_samples,n_grid,mean,std_error,seed\nsigma-sweep,shifted,0.5,16,1,1,zz,1,1\n",
                 "x");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("run writes CSV and summary and reruns byte-identically") {
  const auto dir = scratch_dir();
  const auto out = (dir / "sweep.csv").string();
  auto c = parse_config(R"({"experiment": "sigma-sweep", "L_list": [4, 8, 16], "n_samples": 500, "grid_per_unit": 8,
                            "forms": ["shifted", "wedge"], "seed": 3})");
  c.output_path = out;
  std::ostringstream log;
  run_experiment(c, log);
  const auto first = slurp(out);
  CHECK(first.find("experiment,form,r,L,n_samples,n_grid,mean,std_error,seed\r\n") == 0);
  CHECK(std::count(first.begin(), first.end(), '\n') == 7);
  const auto summary = slurp(out + ".summary.json");
  CHECK(summary.find("\"slope[shifted]\"") != std::string::npos);
  CHECK(summary.find("half-width") != std::string::npos);
  CHECK(summary.find("wall_time_s") != std::string::npos);
  run_experiment(c, log, Exec::serial);
  CHECK(slurp(out) == first);
}

TEST_CASE("resource guard refusal leaves no files behind") {
  const auto dir = scratch_dir();
  const auto out = dir / "guard.csv";
  fs::remove(out);
  auto c = parse_config(R"({"experiment": "she-variance", "max_cell_updates": 1000})");
  c.output_path = out.string();
  std::ostringstream log;
  CHECK_THROWS_AS(run_experiment(c, log), ResourceGuard);
  CHECK_FALSE(fs::exists(out));
  CHECK_FALSE(fs::exists(out.string() + ".tmp"));
  CHECK_FALSE(fs::exists(out.string() + ".summary.json"));
}

TEST_CASE("small experiments of each kind run") {
  const char* configs[] = {
      R"({"experiment": "sigma-r", "route": "independent", "L_list": [2, 4, 8], "n_samples": 2000, "n_grid": 32})",
      R"({"experiment": "wedge-exit", "a_list": [1], "L_list": [2], "n_samples": 2000, "grid_per_unit": 16})",
      R"({"experiment": "wedge-kernel", "a_list": [1, 2], "L_list": [16, 32]})",
      R"({"experiment": "harmonic", "L": 8, "n_samples": 300, "grid_per_unit": 64, "xi_list": [1]})",
      R"({"experiment": "she-variance", "t_list": [0.5, 1, 2], "n_replicas": 20, "cells_per_unit": 4})",
      R"({"experiment": "yl-variance", "L_list": [4, 8], "n_outer": 20, "grid_per_unit": 8})",
      R"({"experiment": "i-variance", "t_list": [0.25, 0.5], "n_f": 4, "n_replicas": 8, "cells_per_unit": 4,
          "sigma_samples": 200})",
      R"({"experiment": "time-reversal", "t": 0.25, "n_replicas": 20, "cells_per_unit": 4})",
      R"({"experiment": "entropic", "L_list": [4, 8], "n_samples": 5000, "grid_per_unit": 8})",
  };
  for (const char* text : configs) {
    const auto c = parse_config(text);
    INFO(text);
    const auto r = execute_experiment(c);
    CHECK_FALSE(r.table.rows.empty());
    CHECK_FALSE(r.checks.empty());
    for (const auto& row : r.table.rows) CHECK(row.size() == r.table.header.size());
    const auto parsed = parse_csv(format_csv(r.table));
    CHECK(parsed.rows == r.table.rows);
  }
}
