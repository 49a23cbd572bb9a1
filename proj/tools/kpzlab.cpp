#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kpzlab/bessel.hpp"
#include "kpzlab/cli.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/wedge.hpp"

namespace {

using namespace kpzlab;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& path, bool serial, bool dry_run) {
  auto config = parse_config(read_text(path));
  apply_seed_override(config, std::getenv(kSeedEnvVar));
  if (dry_run) {
    std::cout << emit_config(config);
    return kExitPass;
  }
  return run_experiment(config, std::cout, serial ? Exec::serial : Exec::parallel);
}

int report_cmd(const std::vector<std::string>& paths) {
  const auto rows = kpzlab::report(paths);
  std::cout << format_report(rows);
  for (const auto& r : rows) {
    if (!r.pass) return kExitFail;
  }
  return kExitPass;
}

int kernel_eval(double x, double r1, double th1, double r2, double th2, double a) {
  // Polar coordinates are taken about the apex of N_a (the origin for a = inf).
  const Vec2 apex = std::isfinite(a) ? a * wedge_geometry::h : Vec2{};
  KernelQuery q;
  q.x = x;
  q.u1 = apex + WedgePoint{r1, th1}.cartesian();
  q.u2 = apex + WedgePoint{r2, th2}.cartesian();
  q.a = a;
  const auto v = wedge_kernel_certified(q);
  std::cout.precision(17);
  std::cout << "value " << v.value << "\ntail_bound " << v.tail_bound << "\nterms " << v.terms
            << "\nfree " << free_kernel(x, q.u1, q.u2) << "\n";
  return kExitPass;
}

int bessel_cmd(double nu, double z) {
  const auto c = bessel_I_cross_check(nu, z);
  std::cout.precision(17);
  std::cout << "I " << bessel_I_checked(nu, z) << "\nlog_series " << c.series << "\nlog_quadrature "
            << c.quadrature << "\nrel_diff " << c.rel_diff << "\n";
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KPZ diffusion-constant experiments: run configs, fit exponents, spot-check kernels"};
  app.require_subcommand(1);

  std::string config_path;
  bool serial = false;
  bool dry_run = false;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment config (JSON); " + std::string(kSeedEnvVar) +
                                                " overrides its seed");
  run_cmd->add_option("config", config_path, "Config file")->required();
  run_cmd->add_flag("--serial", serial, "Run the serial reference path");
  run_cmd->add_flag("--dry-run", dry_run, "Validate and print the canonical config only");

  std::vector<std::string> csv_paths;
  auto* rep = app.add_subcommand("report", "Compare fitted exponents in result CSVs with their predictions");
  rep->add_option("csv", csv_paths, "Result files")->required();

  double x = 1.0, r1 = 0.0, th1 = 0.0, r2 = 0.0, th2 = 0.0;
  double a = 0.0;
  auto* ke = app.add_subcommand("kernel-eval", "Evaluate the killed wedge kernel p_x^{N_a}");
  ke->add_option("--x", x, "Time")->required();
  ke->add_option("--r1", r1, "Radius of u1 about the apex")->required();
  ke->add_option("--theta1", th1, "Angle of u1")->required();
  ke->add_option("--r2", r2, "Radius of u2 about the apex")->required();
  ke->add_option("--theta2", th2, "Angle of u2")->required();
  ke->add_option("--a", a, "Wedge offset (inf for the free kernel)");

  double nu = 0.0, z = 0.0;
  auto* bs = app.add_subcommand("bessel", "Evaluate I_nu(z) with the series/quadrature cross-check");
  bs->add_option("--nu", nu, "Order")->required();
  bs->add_option("--z", z, "Argument")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(config_path, serial, dry_run);
    if (*rep) return report_cmd(csv_paths);
    if (*ke) return kernel_eval(x, r1, th1, r2, th2, a);
    if (*bs) return bessel_cmd(nu, z);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ResourceGuard& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
