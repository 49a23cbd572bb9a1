#include "kpzlab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kpzlab/errors.hpp"
#include "kpzlab/harmonic.hpp"
#include "kpzlab/she.hpp"
#include "kpzlab/sigma.hpp"
#include "kpzlab/wedge.hpp"

namespace kpzlab {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct ExperimentName {
  Experiment e;
  const char* name;
};

constexpr ExperimentName kNames[] = {
    {Experiment::sigma_sweep, "sigma-sweep"},     {Experiment::sigma_r, "sigma-r"},
    {Experiment::wedge_exit, "wedge-exit"},       {Experiment::wedge_kernel, "wedge-kernel"},
    {Experiment::harmonic, "harmonic"},           {Experiment::she_variance, "she-variance"},
    {Experiment::yl_variance, "yl-variance"},     {Experiment::i_variance, "i-variance"},
    {Experiment::time_reversal, "time-reversal"}, {Experiment::entropic, "entropic"},
};

// ---------------------------------------------------------------- key tables

enum class Kind { boolean, integer, real, text, reals, texts };

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::boolean:
      return "a boolean";
    case Kind::integer:
      return "an integer";
    case Kind::real:
      return "a number";
    case Kind::text:
      return "a string";
    case Kind::reals:
      return "a list of numbers";
    case Kind::texts:
      return "a list of strings";
  }
  return "?";
}

// Returns an empty string when the value is acceptable.
using Rule = std::function<std::string(const ConfigValue&)>;

struct Key {
  std::string name;
  Kind kind;
  std::optional<ConfigValue> fallback;  // nullopt: required
  Rule rule;
};

std::string fmt(double v) { return format_number(v); }

Rule min_int(std::int64_t lo) {
  return [lo](const ConfigValue& v) {
    const auto x = std::get<std::int64_t>(v);
    return x >= lo ? std::string() : "must be >= " + std::to_string(lo) + " (got " + std::to_string(x) + ")";
  };
}

Rule positive() {
  return [](const ConfigValue& v) {
    const double x = std::get<double>(v);
    return x > 0.0 && std::isfinite(x) ? std::string() : "must be positive and finite (got " + fmt(x) + ")";
  };
}

Rule nonnegative() {
  return [](const ConfigValue& v) {
    const double x = std::get<double>(v);
    return x >= 0.0 && std::isfinite(x) ? std::string() : "must be >= 0 (got " + fmt(x) + ")";
  };
}

Rule closed(double lo, double hi) {
  return [lo, hi](const ConfigValue& v) {
    const double x = std::get<double>(v);
    return x >= lo && x <= hi ? std::string()
                              : "must lie in [" + fmt(lo) + ", " + fmt(hi) + "] (got " + fmt(x) + ")";
  };
}

Rule open(double lo, double hi) {
  return [lo, hi](const ConfigValue& v) {
    const double x = std::get<double>(v);
    return x > lo && x < hi ? std::string() : "must lie in (" + fmt(lo) + ", " + fmt(hi) + ") (got " + fmt(x) + ")";
  };
}

Rule list_min(double lo) {
  return [lo](const ConfigValue& v) {
    const auto& xs = std::get<std::vector<double>>(v);
    if (xs.empty()) return std::string("must not be empty");
    for (double x : xs) {
      if (!(x >= lo) || !std::isfinite(x)) return "every entry must be >= " + fmt(lo) + " (got " + fmt(x) + ")";
    }
    return std::string();
  };
}

Rule one_of(std::vector<std::string> choices) {
  return [choices](const ConfigValue& v) {
    const auto& s = std::get<std::string>(v);
    if (std::find(choices.begin(), choices.end(), s) != choices.end()) return std::string();
    std::string msg = "must be one of";
    for (const auto& c : choices) msg += " " + c;
    return msg + " (got '" + s + "')";
  };
}

Rule each_of(std::vector<std::string> choices) {
  return [choices](const ConfigValue& v) {
    const auto& xs = std::get<std::vector<std::string>>(v);
    if (xs.empty()) return std::string("must not be empty");
    for (const auto& s : xs) {
      if (std::find(choices.begin(), choices.end(), s) == choices.end()) {
        std::string msg = "entries must be among";
        for (const auto& c : choices) msg += " " + c;
        return msg + " (got '" + s + "')";
      }
    }
    return std::string();
  };
}

Rule any() {
  return [](const ConfigValue&) { return std::string(); };
}

std::vector<double> geometric(double from, double to) {
  std::vector<double> out;
  for (double x = from; x <= to; x *= 2.0) out.push_back(x);
  return out;
}

std::vector<Key> sigma_grid_keys() {
  return {
      {"L_list", Kind::reals, geometric(16, 512), list_min(1.0)},
      {"n_samples", Kind::integer, std::int64_t{100000}, min_int(100)},
      {"n_grid", Kind::integer, std::int64_t{0}, min_int(0)},
      {"grid_per_unit", Kind::real, 0.0, nonnegative()},
      {"antithetic", Kind::boolean, false, any()},
      {"fit", Kind::boolean, true, any()},
  };
}

std::vector<Key> key_table(Experiment e) {
  std::vector<Key> keys;
  auto add = [&](std::vector<Key> more) { keys.insert(keys.end(), more.begin(), more.end()); };
  switch (e) {
    case Experiment::sigma_sweep:
      add(sigma_grid_keys());
      add({
          {"forms", Kind::texts, std::vector<std::string>{"shifted"}, each_of({"definition", "shifted", "wedge"})},
          {"tolerance", Kind::real, 0.1, positive()},
          {"pair_z", Kind::real, 4.0, positive()},
      });
      break;
    case Experiment::sigma_r:
      add(sigma_grid_keys());
      add({
          {"r", Kind::real, std::nullopt, closed(0.0, 1.0)},
          {"route", Kind::text, std::string("correlated"), one_of({"correlated", "independent", "identical"})},
          {"tolerance", Kind::real, 0.12, positive()},
          {"oracle_z", Kind::real, 3.0, positive()},
      });
      break;
    case Experiment::wedge_exit:
      add({
          {"a_list", Kind::reals, std::vector<double>{2, 3}, list_min(1e-300)},
          {"L_list", Kind::reals, std::vector<double>{16, 64}, list_min(1e-300)},
          {"n_samples", Kind::integer, std::int64_t{1000000}, min_int(64)},
          {"grid_per_unit", Kind::real, 64.0, positive()},
          {"k_sigma", Kind::real, 3.0, positive()},
      });
      break;
    case Experiment::wedge_kernel:
      add({
          {"a_list", Kind::reals, std::vector<double>{1, 2, 4}, list_min(1e-300)},
          {"L_list", Kind::reals, geometric(16, 1024), list_min(1e-300)},
          {"c_max", Kind::real, 100.0, positive()},
          {"ck_tolerance", Kind::real, 1e-6, positive()},
      });
      break;
    case Experiment::harmonic:
      add({
          {"L", Kind::real, 64.0, positive()},
          {"q", Kind::real, 1.0, positive()},
          {"n_samples", Kind::integer, std::int64_t{100000}, min_int(100)},
          {"grid_per_unit", Kind::real, 1024.0, positive()},
          {"xi_list", Kind::reals, std::vector<double>{0.5, 1, 2, 4}, list_min(1e-300)},
          {"ks_level", Kind::real, 0.01, [](const ConfigValue& v) {
             const double x = std::get<double>(v);
             return x == 0.01 || x == 0.05 ? std::string() : "must be 0.01 or 0.05 (got " + fmt(x) + ")";
           }},
          {"k_sigma", Kind::real, 3.0, positive()},
      });
      break;
    case Experiment::she_variance:
      add({
          {"alpha", Kind::real, 0.0, closed(0.0, 2.0 / 3.0)},
          {"lambda", Kind::real, 4.0, positive()},
          {"t_list", Kind::reals, std::vector<double>{4, 8, 16, 32}, list_min(1e-300)},
          {"n_replicas", Kind::integer, std::int64_t{2000}, min_int(4)},
          {"cells_per_unit", Kind::real, 16.0, positive()},
          {"max_cell_updates", Kind::real, 4.0e11, positive()},
          {"tolerance", Kind::real, 0.15, positive()},
      });
      break;
    case Experiment::yl_variance:
      add({
          {"L_list", Kind::reals, std::vector<double>{16, 64, 256}, list_min(1e-300)},
          {"n_outer", Kind::integer, std::int64_t{2000}, min_int(4)},
          {"n_inner", Kind::integer, std::int64_t{100}, min_int(100)},
          {"grid_per_unit", Kind::real, 16.0, positive()},
          {"spread", Kind::real, 0.2, positive()},
      });
      break;
    case Experiment::i_variance:
      add({
          {"L", Kind::real, 4.0, positive()},
          {"t_list", Kind::reals, std::vector<double>{1, 2}, list_min(1e-300)},
          {"n_f", Kind::integer, std::int64_t{100}, min_int(2)},
          {"n_replicas", Kind::integer, std::int64_t{2000}, min_int(4)},
          {"cells_per_unit", Kind::real, 32.0, positive()},
          {"dt_factor", Kind::real, 0.25, open(0.0, 0.25 + 1e-12)},
          {"max_cell_updates", Kind::real, 4.0e11, positive()},
          {"sigma_samples", Kind::integer, std::int64_t{100000}, min_int(100)},
          {"k_sigma", Kind::real, 4.0, positive()},
          {"linearity_k", Kind::real, 3.0, positive()},
          {"nf_check", Kind::boolean, true, any()},
      });
      break;
    case Experiment::time_reversal:
      add({
          {"t", Kind::real, 1.0, positive()},
          {"L", Kind::real, 4.0, positive()},
          {"cells_per_unit", Kind::real, 16.0, positive()},
          {"n_replicas", Kind::integer, std::int64_t{2000}, min_int(4)},
          {"z_max", Kind::real, 4.0, positive()},
      });
      break;
    case Experiment::entropic:
      add({
          {"L_list", Kind::reals, std::vector<double>{8, 16, 32, 64}, list_min(4.0)},
          {"gamma", Kind::real, 0.4, open(0.0, 0.5)},
          {"n_samples", Kind::integer, std::int64_t{200000}, min_int(100)},
          {"grid_per_unit", Kind::real, 32.0, positive()},
          {"floor", Kind::real, 0.01, closed(0.0, 1.0)},
          {"min_ratio", Kind::real, 0.2, closed(0.0, 1.0)},
      });
      break;
  }
  return keys;
}

// Converts a JSON value to the declared kind, or explains the mismatch.
std::optional<ConfigValue> convert(const json& j, Kind kind) {
  auto as_integer = [](const json& x) -> std::optional<std::int64_t> {
    if (x.is_number_integer()) return x.get<std::int64_t>();
    if (x.is_number_float()) {
      const double d = x.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e18) return static_cast<std::int64_t>(d);
    }
    return std::nullopt;
  };
  switch (kind) {
    case Kind::boolean:
      if (j.is_boolean()) return j.get<bool>();
      return std::nullopt;
    case Kind::integer:
      if (auto v = as_integer(j)) return *v;
      return std::nullopt;
    case Kind::real:
      if (j.is_number()) return j.get<double>();
      return std::nullopt;
    case Kind::text:
      if (j.is_string()) return j.get<std::string>();
      return std::nullopt;
    case Kind::reals: {
      if (!j.is_array()) return std::nullopt;
      std::vector<double> out;
      for (const auto& x : j) {
        if (!x.is_number()) return std::nullopt;
        out.push_back(x.get<double>());
      }
      return out;
    }
    case Kind::texts: {
      if (!j.is_array()) return std::nullopt;
      std::vector<std::string> out;
      for (const auto& x : j) {
        if (!x.is_string()) return std::nullopt;
        out.push_back(x.get<std::string>());
      }
      return out;
    }
  }
  return std::nullopt;
}

// Checks that involve more than one key.
void cross_validate(ExperimentConfig& c, std::vector<std::string>& errors) {
  auto has = [&](const std::string& k) { return c.params.count(k) != 0; };
  if (has("n_grid") && has("grid_per_unit") && c.integer("n_grid") > 0 && c.real("grid_per_unit") > 0.0) {
    errors.push_back("n_grid, grid_per_unit: set at most one of them");
  }
  if (has("n_grid") && c.integer("n_grid") == 1) errors.push_back("n_grid: must be 0 (auto) or >= 2");
  if (c.experiment == Experiment::sigma_r && has("route")) {
    const auto& route = c.text("route");
    const bool have_r = has("r");
    if (route == "independent" || route == "identical") {
      const double implied = route == "independent" ? 0.0 : 1.0;
      if (!have_r) {
        c.params["r"] = implied;
      } else if (c.real("r") != implied) {
        errors.push_back("r: route '" + route + "' fixes r = " + fmt(implied) + " (got " + fmt(c.real("r")) + ")");
      }
    } else if (have_r && c.real("r") >= 1.0) {
      errors.push_back("r: the correlated route needs r in [0, 1); use route 'identical' for r = 1");
    } else if (!have_r) {
      errors.push_back("r: missing required key");
    }
  }
  if (c.experiment == Experiment::wedge_exit && has("a_list") && has("L_list") &&
      c.reals("a_list").size() != c.reals("L_list").size()) {
    errors.push_back("a_list, L_list: must have the same length (paired entries)");
  }
}

template <class T>
const T& get_as(const std::map<std::string, ConfigValue>& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) throw ConfigError("config has no key '" + key + "'");
  const T* v = std::get_if<T>(&it->second);
  if (!v) throw ConfigError("config key '" + key + "' has another type");
  return *v;
}

json to_json(const ConfigValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

// ------------------------------------------------------------------ helpers

std::string num(double v) { return format_number(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string num(std::size_t v, int) { return std::to_string(v); }

CheckResult check_le(std::string name, double measured, double bound, std::string detail = {}) {
  return {std::move(name), measured, bound, 0.0, measured <= bound, std::move(detail)};
}

CheckResult check_band(std::string name, double measured, double target, double tol, bool one_sided = false) {
  return {std::move(name), measured, target, tol, band_pass(measured, target, tol, one_sided), {}};
}

std::uint64_t count(const ExperimentConfig& c, const std::string& key) {
  return static_cast<std::uint64_t>(c.integer(key));
}

std::size_t sigma_grid(const ExperimentConfig& c, double L) {
  if (c.integer("n_grid") > 0) return static_cast<std::size_t>(c.integer("n_grid"));
  if (c.real("grid_per_unit") > 0.0) {
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(c.real("grid_per_unit") * L)));
  }
  return 0;
}

std::size_t cells(double per_unit, double L) {
  return std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(per_unit * L)));
}

// Largest dt <= factor dx^2 that divides t.
double she_dt(double t, double L, std::size_t n_x, double factor) {
  const double dx = L / static_cast<double>(n_x);
  return t / std::ceil(t / (factor * dx * dx) - 1e-9);
}

const std::vector<std::string> kSigmaHeader = {"experiment", "form", "r",    "L",        "n_samples",
                                               "n_grid",     "mean", "std_error", "seed"};

const std::vector<std::string> kSheHeader = {"experiment", "alpha",        "lambda",    "t",   "L",   "n_x",
                                             "dt",         "n_replicas",   "var_estimate", "std_error", "seed"};

std::vector<std::string> sigma_row(const ExperimentConfig& c, const std::string& form, const SigmaEstimate& e) {
  return {std::string(to_string(c.experiment)), form, num(e.r), num(e.L), num(e.n_samples), num(e.n_grid, 0),
          num(e.mean), num(e.std_error), num(c.seed)};
}

std::optional<FitResult> fit_if_possible(const std::vector<PowerLawPoint>& pts) {
  if (pts.size() < 3) return std::nullopt;
  return fit_exponent(pts);
}

// The exponent each sigma CSV group claims, with its band.
struct SigmaClaim {
  double predicted;
  double tolerance;
};

SigmaClaim sigma_claim(const std::string& form, double r) {
  if (form == "independent") return {-1.0, 0.05};
  if (form == "identical") return {0.0, 0.1};
  if (r == 0.5) return {-0.5, 0.1};
  return {predicted_exponent(r), 0.12};
}

// ------------------------------------------------------------- experiments

ExperimentResult run_sigma_sweep(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = kSigmaHeader;
  const auto& Ls = c.reals("L_list");
  const SigmaOptions opts{c.flag("antithetic"), exec};
  std::map<std::string, std::vector<SigmaEstimate>> by_form;
  for (const auto& f : c.texts("forms")) {
    for (double L : Ls) {
      const auto e = estimate_sigma2(L, count(c, "n_samples"), sigma_grid(c, L), parse_sigma_form(f), c.seed, opts);
      by_form[f].push_back(e);
      res.table.rows.push_back(sigma_row(c, f, e));
    }
  }
  if (c.flag("fit")) {
    for (const auto& [form, ests] : by_form) {
      std::vector<PowerLawPoint> pts;
      for (const auto& e : ests) pts.push_back({e.L, e.mean, e.std_error});
      if (auto fit = fit_if_possible(pts)) {
        auto chk = check_band("slope[" + form + "]", fit->slope, -0.5, c.real("tolerance"));
        chk.detail = "half-width " + num(fit->slope_halfwidth);
        res.checks.push_back(chk);
      }
    }
  }
  const auto& forms = c.texts("forms");
  for (std::size_t i = 0; i < forms.size(); ++i) {
    for (std::size_t j = i + 1; j < forms.size(); ++j) {
      for (std::size_t k = 0; k < Ls.size(); ++k) {
        const auto& a = by_form[forms[i]][k];
        const auto& b = by_form[forms[j]][k];
        const double z = std::abs(a.mean - b.mean) / std::hypot(a.std_error, b.std_error);
        res.checks.push_back(check_le("pair[" + forms[i] + "," + forms[j] + "]@L=" + num(Ls[k]), z, c.real("pair_z"),
                                      "combined-SE z score"));
      }
    }
  }
  return res;
}

ExperimentResult run_sigma_r(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = kSigmaHeader;
  const auto& route = c.text("route");
  const double r = c.real("r");
  const SigmaOptions opts{c.flag("antithetic"), exec};
  const std::string form = route == "correlated" ? "shifted" : route;
  std::vector<PowerLawPoint> pts;
  for (double L : c.reals("L_list")) {
    const auto n = count(c, "n_samples");
    const auto g = sigma_grid(c, L);
    SigmaEstimate e;
    if (route == "independent") {
      e = estimate_sigma2_independent(L, n, g, c.seed, opts);
      const double z = std::abs(e.mean - 1.0 / L) / e.std_error;
      res.checks.push_back(check_le("oracle[1/L]@L=" + num(L), z, c.real("oracle_z"), "z score against 1/L"));
    } else if (route == "identical") {
      e = estimate_sigma2_identical(L, n, g, c.seed, opts);
    } else {
      e = estimate_sigma2_r(L, r, n, g, c.seed, opts);
    }
    pts.push_back({e.L, e.mean, e.std_error});
    res.table.rows.push_back(sigma_row(c, form, e));
  }
  if (c.flag("fit")) {
    if (auto fit = fit_if_possible(pts)) {
      const double predicted = sigma_claim(form, r).predicted;
      auto chk = check_band("slope[" + form + ",r=" + num(r) + "]", fit->slope, predicted, c.real("tolerance"));
      chk.detail = "half-width " + num(fit->slope_halfwidth);
      res.checks.push_back(chk);
    }
  }
  return res;
}

ExperimentResult run_wedge_exit(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = {"experiment", "a",      "L",          "series",      "mc_fine",
                      "mc_fine_std_error", "mc_coarse", "mc_coarse_std_error", "margin", "n_paths",
                      "n_grid_fine", "seed"};
  const auto& as = c.reals("a_list");
  const auto& Ls = c.reals("L_list");
  for (std::size_t i = 0; i < as.size(); ++i) {
    const double series = survival_probability(as[i], Ls[i]);
    const auto mc = survival_probability_mc(as[i], Ls[i], count(c, "n_samples"), c.seed,
                                            WedgeMcOptions{c.real("grid_per_unit"), exec});
    res.table.rows.push_back({"wedge-exit", num(as[i]), num(Ls[i]), num(series), num(mc.fine),
                              num(mc.fine_std_error), num(mc.coarse), num(mc.coarse_std_error), num(mc.margin),
                              num(mc.n_paths), num(mc.n_grid_fine, 0), num(c.seed)});
    const double bound = c.real("k_sigma") * mc.fine_std_error + std::max(0.0, mc.margin);
    res.checks.push_back(check_le("series-vs-mc@(a=" + num(as[i]) + ",L=" + num(Ls[i]) + ")",
                                  std::abs(series - mc.fine), bound, "k SE + crossing margin"));
  }
  return res;
}

// Smallest C >= 1 with a^3 / (C L^1.5) exp(-C a^2 / L) <= p.
double lower_constant(double a, double L, double p) {
  auto lower = [&](double C) { return a * a * a / (C * std::pow(L, 1.5)) * std::exp(-C * a * a / L); };
  if (lower(1.0) <= p) return 1.0;
  double lo = 1.0;
  double hi = 2.0;
  while (lower(hi) > p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (lower(mid) > p ? lo : hi) = mid;
  }
  return hi;
}

double chapman_kolmogorov_residual() {
  const std::pair<Vec2, Vec2> pairs[] = {
      {{1.0, 0.0}, {1.5, 0.3}},
      {{0.5, 0.2}, {2.0, -0.5}},
      {{2.0, 0.5}, {1.0, -0.2}},
  };
  double worst = 0.0;
  for (const auto& [u, v] : pairs) {
    const double direct = wedge_kernel({2.0, u, v, 0.0});
    worst = std::max(worst, std::abs(wedge_two_step(1.0, 1.0, u, v) - direct));
  }
  return worst;
}

ExperimentResult run_wedge_kernel(const ExperimentConfig& c, Exec) {
  ExperimentResult res;
  res.table.header = {"experiment", "a", "L", "probability", "c_upper", "c_lower", "seed"};
  double C = 1.0;
  for (double a : c.reals("a_list")) {
    for (double L : c.reals("L_list")) {
      const double p = survival_probability(a, L);
      const double c_up = std::max(1.0, p * std::pow(L, 1.5) / (a * a * a));
      const double c_lo = lower_constant(a, L, p);
      C = std::max({C, c_up, c_lo});
      res.table.rows.push_back({"wedge-kernel", num(a), num(L), num(p), num(c_up), num(c_lo), num(c.seed)});
    }
  }
  res.checks.push_back(check_le("sandwich-constant", C, c.real("c_max"), "smallest C making both bounds hold"));
  res.checks.push_back(check_le("chapman-kolmogorov", chapman_kolmogorov_residual(), c.real("ck_tolerance"),
                                "max |int p_1 p_1 - p_2| at s = t = 1"));
  return res;
}

ExperimentResult run_harmonic(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = {"experiment", "q", "L",        "xi",     "empirical_tail", "exact_tail", "std_error",
                      "coarse_tail", "margin", "n_hits", "n_grid_fine", "seed"};
  const double L = c.real("L");
  const double q = c.real("q");
  const auto n_grid = static_cast<std::size_t>(std::ceil(c.real("grid_per_unit") * L));
  const auto batch = simulate_hits(L, q, n_grid, count(c, "n_samples"), c.seed, exec);
  if (batch.fine.size() < 100 || batch.coarse.size() < 100) throw NoHit("harmonic: fewer than 100 boundary hits");
  const auto fine = apex_distances(batch.fine, q);
  const auto coarse = apex_distances(batch.coarse, q);
  const double n = static_cast<double>(fine.size());
  constexpr double kRefine = std::numbers::sqrt2 - 1.0;
  auto tail = [](const std::vector<double>& xs, double xi) {
    return static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double d) { return d >= xi; })) /
           static_cast<double>(xs.size());
  };
  for (double xi : c.reals("xi_list")) {
    const double emp = tail(fine, xi);
    const double exact = arctan_tail(q, xi);
    const double se = std::sqrt(std::max(emp * (1.0 - emp), 1.0 / n) / n);
    const double coarse_tail = tail(coarse, xi);
    const double margin = std::abs(coarse_tail - emp) / kRefine;
    res.table.rows.push_back({"harmonic", num(q), num(L), num(xi), num(emp), num(exact), num(se), num(coarse_tail),
                              num(margin), num(static_cast<std::uint64_t>(fine.size())),
                              num(batch.n_grid_fine, 0), num(c.seed)});
    res.checks.push_back(check_le("tail@xi=" + num(xi), std::abs(emp - exact), c.real("k_sigma") * se + margin,
                                  "k SE + grid margin"));
    // The lemma's displayed inequality for |V(tau)|, checked one-sided.
    const double shifted = q * wedge_geometry::h_norm + xi;
    const double raw_tail =
        static_cast<double>(std::count_if(batch.fine.begin(), batch.fine.end(),
                                          [&](const HitSample& h) { return h.raw.norm() >= shifted; })) /
        n;
    res.checks.push_back(check_le("raw-bound@xi=" + num(xi), raw_tail, exact + c.real("k_sigma") * se,
                                  "P[|V(tau)| >= q|h| + xi] <= arctan tail"));
  }
  const double D = ks_statistic(fine, [q](double x) { return arctan_cdf(q, x); });
  const double crit = ks_critical_value(fine.size(), c.real("ks_level"));
  const double margin = ks_two_sample(fine, coarse) / kRefine;
  res.checks.push_back(check_le("ks", D, crit + margin,
                                "critical " + num(crit) + " + grid margin " + num(margin) + ", no-hit " +
                                    num(batch.no_hit_fine)));
  return res;
}

ExperimentResult run_she_variance(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = kSheHeader;
  ResolutionPolicy policy;
  policy.cells_per_unit = c.real("cells_per_unit");
  policy.max_cell_updates = c.real("max_cell_updates");
  policy.exec = exec;
  const double alpha = c.real("alpha");
  const auto pts =
      estimate_height_variance(alpha, c.real("lambda"), c.reals("t_list"), count(c, "n_replicas"), policy, c.seed);
  std::vector<PowerLawPoint> fit_pts;
  for (const auto& p : pts) {
    res.table.rows.push_back({"she-variance", num(p.alpha), num(p.lambda), num(p.t), num(p.L), num(p.n_x, 0),
                              num(p.dt), num(p.n_replicas), num(p.var_estimate), num(p.std_error), num(c.seed)});
    fit_pts.push_back({p.t, p.var_estimate, p.std_error});
  }
  if (auto fit = fit_if_possible(fit_pts)) {
    const bool one_sided = alpha >= 2.0 / 3.0 - 1e-12;
    auto chk = check_band("slope[alpha=" + num(alpha) + "]", fit->slope, 1.0 - alpha / 2.0, c.real("tolerance"),
                          one_sided);
    chk.detail = "half-width " + num(fit->slope_halfwidth) + (one_sided ? ", upper bound only" : "");
    res.checks.push_back(chk);
  }
  return res;
}

ExperimentResult run_yl_variance(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = {"experiment",         "L",          "n_outer",             "n_inner",
                      "n_grid",             "mean",       "mean_std_error",      "variance",
                      "variance_std_error", "var_over_L", "sandwich_violations", "sandwich_checked",
                      "seed"};
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  std::uint64_t violations = 0;
  for (double L : c.reals("L_list")) {
    const auto n_grid = static_cast<std::size_t>(std::ceil(c.real("grid_per_unit") * L));
    const auto e = estimate_YL_variance(L, count(c, "n_outer"), count(c, "n_inner"), n_grid, c.seed, exec);
    const double ratio = e.variance / L;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    violations += e.sandwich_violations;
    res.table.rows.push_back({"yl-variance", num(L), num(e.n_outer), num(e.n_inner), num(n_grid, 0), num(e.mean),
                              num(e.mean_std_error), num(e.variance), num(e.variance_std_error), num(ratio),
                              num(e.sandwich_violations), num(e.sandwich_checked), num(c.seed)});
  }
  res.checks.push_back({"positive", lo, 0.0, 0.0, lo > 0.0, "min Var(Y_L)/L > 0"});
  res.checks.push_back(check_le("spread", hi / lo - 1.0, c.real("spread"), "max/min - 1 of Var(Y_L)/L"));
  res.checks.push_back(check_le("sandwich", static_cast<double>(violations), 0.0, "samples outside [min, max]"));
  return res;
}

ExperimentResult run_i_variance(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = {"experiment", "role",     "t",   "L",            "n_x",
                      "dt",         "n_f",      "n_outer", "variance", "std_error",
                      "raw_variance", "inner_correction", "seed"};
  const double L = c.real("L");
  const auto& ts = c.reals("t_list");
  ResolutionPolicy policy;
  policy.max_cell_updates = c.real("max_cell_updates");
  policy.exec = exec;
  const std::size_t n_x = cells(c.real("cells_per_unit"), L);
  const std::size_t n_coarse = std::max<std::size_t>(4, n_x / 2);
  const double factor = c.real("dt_factor");
  const auto n_f = count(c, "n_f");
  const auto n_out = count(c, "n_replicas");

  // Budget over every solve this experiment will run, before any of them starts.
  double updates = 0.0;
  auto steps_of = [&](double t, std::size_t nx) { return std::round(t / she_dt(t, L, nx, factor)); };
  for (double t : ts) updates += static_cast<double>(n_out * n_x) * steps_of(t, n_x);
  updates += static_cast<double>(n_out * n_coarse) * steps_of(ts.front(), n_coarse);
  if (c.flag("nf_check")) updates += static_cast<double>(n_out * n_x) * steps_of(ts.front(), n_x);
  if (updates > policy.max_cell_updates) {
    throw ResourceGuard("i-variance needs " + num(updates) + " cell updates, over the budget of " +
                        num(policy.max_cell_updates));
  }

  auto row = [&](const std::string& role, const IVarianceEstimate& e) {
    res.table.rows.push_back({"i-variance", role, num(e.t), num(e.L), num(e.n_x, 0), num(e.dt), num(e.n_f),
                              num(e.n_outer), num(e.variance), num(e.std_error), num(e.raw_variance),
                              num(e.inner_correction), num(c.seed)});
  };
  auto estimate = [&](double t, std::size_t nx, std::uint64_t nf) {
    return estimate_I_variance(t, L, nf, n_out, nx, she_dt(t, L, nx, factor), c.seed, policy);
  };

  std::vector<IVarianceEstimate> main;
  for (double t : ts) {
    main.push_back(estimate(t, n_x, n_f));
    row("main", main.back());
  }
  const auto coarse = estimate(ts.front(), n_coarse, n_f);
  row("coarse", coarse);
  const double margin = std::abs(main.front().variance - coarse.variance);

  const auto sigma = estimate_sigma2(L, count(c, "sigma_samples"), 0, SigmaForm::shifted, c.seed, {false, exec});
  res.table.rows.push_back({"i-variance", "sigma_ref", "1", num(L), num(sigma.n_grid, 0), "0", "0",
                            num(sigma.n_samples), num(sigma.mean), num(sigma.std_error), num(sigma.mean), "0",
                            num(c.seed)});

  const auto& m0 = main.front();
  {
    const double t = m0.t;
    const double diff = std::abs(m0.variance / t - sigma.mean);
    const double bound = c.real("k_sigma") * std::hypot(m0.std_error / t, sigma.std_error) + margin / t;
    res.checks.push_back(check_le("identity@t=" + num(t), diff, bound,
                                  "|Var I / t - sigma^2| vs k combined SE + discretization margin"));
  }
  for (std::size_t k = 1; k < main.size(); ++k) {
    const auto& m = main[k];
    const double diff = std::abs(m.variance / m.t - m0.variance / m0.t);
    const double bound = c.real("linearity_k") * std::hypot(m.std_error / m.t, m0.std_error / m0.t);
    res.checks.push_back(check_le("linearity@t=" + num(m.t), diff, bound, "Var I(t) / t constant in t"));
  }
  if (c.flag("nf_check")) {
    const auto doubled = estimate(ts.front(), n_x, 2 * n_f);
    row("nf_double", doubled);
    res.checks.push_back(check_le("inner-bias", std::abs(doubled.variance - m0.variance), m0.std_error,
                                  "doubling n_f moves the estimate by < 1 SE"));
  }
  return res;
}

ExperimentResult run_time_reversal(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = {"experiment", "t",          "L",          "n_x",           "dt",
                      "n_replicas", "mean_forward", "mean_swapped", "mean_std_error", "var_forward",
                      "var_swapped", "var_std_error", "mean_z",   "var_z",         "seed"};
  const double t = c.real("t");
  const double L = c.real("L");
  const std::size_t n_x = cells(c.real("cells_per_unit"), L);
  const double dt = she_dt(t, L, n_x, 0.25);
  const auto r = check_time_reversal(t, L, n_x, dt, count(c, "n_replicas"), c.seed, false, exec);
  res.table.rows.push_back({"time-reversal", num(t), num(L), num(n_x, 0), num(dt), num(r.n_replicas),
                            num(r.mean_forward), num(r.mean_swapped), num(r.mean_std_error), num(r.var_forward),
                            num(r.var_swapped), num(r.var_std_error), num(r.mean_z), num(r.var_z), num(c.seed)});
  res.checks.push_back(check_le("mean", std::abs(r.mean_z), c.real("z_max"), "two-sample z of the means"));
  res.checks.push_back(check_le("variance", std::abs(r.var_z), c.real("z_max"), "two-sample z of the variances"));
  return res;
}

ExperimentResult run_entropic(const ExperimentConfig& c, Exec exec) {
  ExperimentResult res;
  res.table.header = {"experiment", "L", "gamma", "estimate", "std_error", "acceptance_rate",
                      "n_accepted", "n_samples", "seed"};
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double L : c.reals("L_list")) {
    const auto e = entropic_repulsion(L, c.real("gamma"), count(c, "n_samples"), c.seed,
                                      RejectionOptions{c.real("grid_per_unit"), exec});
    lo = std::min(lo, e.mean);
    hi = std::max(hi, e.mean);
    res.table.rows.push_back({"entropic", num(L), num(c.real("gamma")), num(e.mean), num(e.std_error),
                              num(e.acceptance_rate), num(e.n_accepted), num(e.n_samples), num(c.seed)});
  }
  res.checks.push_back({"floor", lo, c.real("floor"), 0.0, lo >= c.real("floor"), "min estimate >= floor"});
  const double ratio = hi > 0.0 ? lo / hi : 0.0;
  res.checks.push_back({"trend", ratio, c.real("min_ratio"), 0.0, ratio >= c.real("min_ratio"), "min/max ratio"});
  return res;
}

// ------------------------------------------------------------------ report

double field_number(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw ParseError("column '" + column + "': not a number: '" + s + "'", line);
  return v;
}

}  // namespace

// ---------------------------------------------------------------- public API

std::string_view to_string(Experiment e) noexcept {
  for (const auto& n : kNames) {
    if (n.e == e) return n.name;
  }
  return "?";
}

Experiment parse_experiment(std::string_view name) {
  for (const auto& n : kNames) {
    if (name == n.name) return n.e;
  }
  std::string msg = "experiment: unknown name '" + std::string(name) + "' (expected one of";
  for (const auto& n : kNames) msg += std::string(" ") + n.name;
  throw ConfigError(msg + ")");
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all = [] {
    std::vector<Experiment> v;
    for (const auto& n : kNames) v.push_back(n.e);
    return v;
  }();
  return all;
}

bool ExperimentConfig::flag(const std::string& key) const { return get_as<bool>(params, key); }
std::int64_t ExperimentConfig::integer(const std::string& key) const { return get_as<std::int64_t>(params, key); }
double ExperimentConfig::real(const std::string& key) const { return get_as<double>(params, key); }
const std::string& ExperimentConfig::text(const std::string& key) const { return get_as<std::string>(params, key); }
const std::vector<double>& ExperimentConfig::reals(const std::string& key) const {
  return get_as<std::vector<double>>(params, key);
}
const std::vector<std::string>& ExperimentConfig::texts(const std::string& key) const {
  return get_as<std::vector<std::string>>(params, key);
}

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a flat JSON object");

  std::vector<std::string> errors;
  ExperimentConfig c;
  bool have_experiment = false;
  if (!doc.contains("experiment")) {
    errors.push_back("experiment: missing required key");
  } else if (!doc["experiment"].is_string()) {
    errors.push_back("experiment: must be a string");
  } else {
    try {
      c.experiment = parse_experiment(doc["experiment"].get<std::string>());
      have_experiment = true;
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    if (s.is_number_unsigned()) {
      c.seed = s.get<std::uint64_t>();
    } else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) {
      c.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    } else {
      errors.push_back("seed: must be a non-negative integer");
    }
  }
  if (doc.contains("output_path")) {
    if (doc["output_path"].is_string() && !doc["output_path"].get<std::string>().empty()) {
      c.output_path = doc["output_path"].get<std::string>();
    } else {
      errors.push_back("output_path: must be a non-empty string");
    }
  }
  if (have_experiment) {
    if (c.output_path.empty()) c.output_path = std::string(to_string(c.experiment)) + ".csv";
    const auto keys = key_table(c.experiment);
    std::set<std::string> known = {"experiment", "seed", "output_path"};
    for (const auto& k : keys) known.insert(k.name);
    for (const auto& [name, value] : doc.items()) {
      if (!known.count(name)) {
        errors.push_back(name + ": unknown key for experiment '" + std::string(to_string(c.experiment)) + "'");
      }
    }
    for (const auto& k : keys) {
      if (!doc.contains(k.name)) {
        if (k.fallback) {
          c.params[k.name] = *k.fallback;
        } else if (!(c.experiment == Experiment::sigma_r && k.name == "r")) {
          errors.push_back(k.name + ": missing required key");
        }
        continue;
      }
      auto v = convert(doc[k.name], k.kind);
      if (!v) {
        errors.push_back(k.name + ": must be " + kind_name(k.kind));
        continue;
      }
      const auto problem = k.rule(*v);
      if (!problem.empty()) {
        errors.push_back(k.name + ": " + problem);
        continue;
      }
      c.params[k.name] = std::move(*v);
    }
    if (errors.empty()) cross_validate(c, errors);
  }
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

std::string emit_config(const ExperimentConfig& config) {
  ojson out;
  out["experiment"] = std::string(to_string(config.experiment));
  out["seed"] = config.seed;
  out["output_path"] = config.output_path;
  for (const auto& [k, v] : config.params) out[k] = to_json(v);
  return out.dump(2) + "\n";
}

void apply_seed_override(ExperimentConfig& config, const char* value) {
  if (!value) return;
  const std::string_view s(value);
  std::uint64_t seed = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(std::string(kSeedEnvVar) + ": must be a non-negative integer (got '" + std::string(s) + "')");
  }
  config.seed = seed;
}

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string format_csv(const CsvTable& table) {
  std::string out;
  auto put_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      const auto& f = row[i];
      if (f.find_first_of(",\"\r\n") == std::string::npos) {
        out += f;
      } else {
        out += '"';
        for (char ch : f) {
          if (ch == '"') out += '"';
          out += ch;
        }
        out += '"';
      }
    }
    out += "\r\n";
  };
  put_row(table.header);
  for (const auto& r : table.rows) put_row(r);
  return out;
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_line;
  std::vector<std::string> row;
  std::string field;
  std::size_t line = 1;
  std::size_t row_line = 1;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    records.push_back(std::move(row));
    record_line.push_back(row_line);
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
          if (i + 1 < text.size() && text[i + 1] != ',' && text[i + 1] != '\r' && text[i + 1] != '\n') {
            throw ParseError("text after closing quote", line);
          }
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      if (field_started || !field.empty()) throw ParseError("quote inside an unquoted field", line);
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
      ++line;
      row_line = line;
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line);
  if (field_started || !field.empty() || !row.empty()) end_row();
  if (records.empty() || (records.size() == 1 && records[0].size() == 1 && records[0][0].empty())) {
    throw ParseError("empty CSV", 1);
  }
  CsvTable t;
  t.header = records.front();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(records[r].size()),
                       record_line[r]);
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move result into '" + path + "'");
  }
}

bool ExperimentResult::pass() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

ExperimentResult execute_experiment(const ExperimentConfig& config, Exec exec) {
  switch (config.experiment) {
    case Experiment::sigma_sweep:
      return run_sigma_sweep(config, exec);
    case Experiment::sigma_r:
      return run_sigma_r(config, exec);
    case Experiment::wedge_exit:
      return run_wedge_exit(config, exec);
    case Experiment::wedge_kernel:
      return run_wedge_kernel(config, exec);
    case Experiment::harmonic:
      return run_harmonic(config, exec);
    case Experiment::she_variance:
      return run_she_variance(config, exec);
    case Experiment::yl_variance:
      return run_yl_variance(config, exec);
    case Experiment::i_variance:
      return run_i_variance(config, exec);
    case Experiment::time_reversal:
      return run_time_reversal(config, exec);
    case Experiment::entropic:
      return run_entropic(config, exec);
  }
  throw ConfigError("unhandled experiment");
}

int run_experiment(const ExperimentConfig& config, std::ostream& log, Exec exec) {
  const auto start = std::chrono::steady_clock::now();
  const auto result = execute_experiment(config, exec);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ojson summary;
  summary["experiment"] = std::string(to_string(config.experiment));
  summary["seed"] = config.seed;
  summary["output_path"] = config.output_path;
  summary["config"] = ojson::parse(emit_config(config));
  ojson checks = ojson::array();
  for (const auto& c : result.checks) {
    ojson j;
    j["name"] = c.name;
    j["measured"] = c.measured;
    j["target"] = c.target;
    if (c.tolerance != 0.0) j["tolerance"] = c.tolerance;
    j["pass"] = c.pass;
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(j);
  }
  summary["checks"] = checks;
  summary["wall_time_s"] = wall;
  summary["pass"] = result.pass();
  const std::string text = summary.dump(2) + "\n";

  write_file_atomic(config.output_path, format_csv(result.table));
  write_file_atomic(config.output_path + ".summary.json", text);
  log << text;
  return result.pass() ? kExitPass : kExitFail;
}

bool band_pass(double measured, double predicted, double tolerance, bool one_sided) noexcept {
  if (!std::isfinite(measured)) return false;
  if (one_sided) return measured <= predicted + tolerance;
  return std::abs(measured - predicted) <= tolerance;
}

std::vector<ReportRow> report_table(std::string_view csv_text, const std::string& source) {
  const CsvTable t = parse_csv(csv_text);
  auto col = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    return static_cast<std::size_t>(it - t.header.begin());
  };
  auto value = [&](std::size_t row, const std::string& name) {
    return field_number(t.rows[row][col(name)], row + 2, name);
  };
  std::vector<ReportRow> out;

  // Schemas are identified by their exact column list.
  const std::map<std::vector<std::string>, std::string> schemas = {{kSigmaHeader, "sigma"}, {kSheHeader, "she"}};
  const std::set<std::string> other = {"wedge-exit", "wedge-kernel", "harmonic", "yl-variance", "i-variance",
                                       "time-reversal", "entropic"};

  const auto it = schemas.find(t.header);
  if (it == schemas.end()) {
    if (!t.header.empty() && t.header.front() == "experiment" && !t.rows.empty() &&
        other.count(t.rows.front().front())) {
      return out;  // a known result file with no exponent claim
    }
    throw ParseError("unknown CSV schema", 1);
  }
  if (t.rows.empty()) throw ParseError("CSV has a header but no rows", 2);

  if (it->second == "sigma") {
    std::map<std::pair<std::string, double>, std::vector<PowerLawPoint>> groups;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      groups[{t.rows[r][col("form")], value(r, "r")}].push_back(
          {value(r, "L"), value(r, "mean"), value(r, "std_error")});
    }
    for (const auto& [key, pts] : groups) {
      if (pts.size() < 3) continue;
      const auto fit = fit_exponent(pts);
      const auto claim = sigma_claim(key.first, key.second);
      ReportRow row;
      row.source = source;
      row.claim = "sigma^2 ~ L^p [" + key.first + ", r=" + num(key.second) + "]";
      row.predicted = claim.predicted;
      row.measured = fit.slope;
      row.halfwidth = fit.slope_halfwidth;
      row.tolerance = claim.tolerance;
      row.pass = band_pass(row.measured, row.predicted, row.tolerance);
      out.push_back(row);
    }
  } else {
    std::map<std::pair<double, double>, std::vector<PowerLawPoint>> groups;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      groups[{value(r, "alpha"), value(r, "lambda")}].push_back(
          {value(r, "t"), value(r, "var_estimate"), value(r, "std_error")});
    }
    for (const auto& [key, pts] : groups) {
      if (pts.size() < 3) continue;
      const auto fit = fit_exponent(pts);
      ReportRow row;
      row.source = source;
      row.one_sided = key.first >= 2.0 / 3.0 - 1e-12;
      row.claim = "Var h ~ t^p [alpha=" + num(key.first) + ", lambda=" + num(key.second) + "]";
      row.predicted = 1.0 - key.first / 2.0;
      row.measured = fit.slope;
      row.halfwidth = fit.slope_halfwidth;
      row.tolerance = 0.15;
      row.pass = band_pass(row.measured, row.predicted, row.tolerance, row.one_sided);
      out.push_back(row);
    }
  }
  return out;
}

std::vector<ReportRow> report(const std::vector<std::string>& csv_paths) {
  std::vector<ReportRow> rows;
  for (const auto& path : csv_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      auto more = report_table(ss.str(), path);
      rows.insert(rows.end(), more.begin(), more.end());
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(e.line()) + ": " + e.what(), e.line());
    }
  }
  return rows;
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(52) << "claim" << std::right << std::setw(11) << "predicted" << std::setw(11)
      << "measured" << std::setw(11) << "half-width" << std::setw(11) << "band" << "  verdict\n";
  for (const auto& r : rows) {
    std::ostringstream band;
    band << (r.one_sided ? "<= +" : "+-") << std::setprecision(3) << r.tolerance;
    out << std::left << std::setw(52) << r.claim << std::right << std::fixed << std::setprecision(4)
        << std::setw(11) << r.predicted << std::setw(11) << r.measured << std::setw(11) << r.halfwidth
        << std::setw(11) << band.str() << "  " << (r.pass ? "PASS" : "FAIL") << "  " << r.source << "\n";
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

}  // namespace kpzlab
