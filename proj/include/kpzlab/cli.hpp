#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kpzlab/stats.hpp"

namespace kpzlab {

enum class Experiment {
  sigma_sweep,
  sigma_r,
  wedge_exit,
  wedge_kernel,
  harmonic,
  she_variance,
  yl_variance,
  i_variance,
  time_reversal,
  entropic
};

std::string_view to_string(Experiment e) noexcept;
/// Throws ConfigError for unknown names.
Experiment parse_experiment(std::string_view name);
const std::vector<Experiment>& all_experiments();

using ConfigValue =
    std::variant<bool, std::int64_t, double, std::string, std::vector<double>, std::vector<std::string>>;

/// A validated experiment configuration. `params` always holds every key of
/// the experiment's table, defaults filled in.
struct ExperimentConfig {
  Experiment experiment = Experiment::sigma_sweep;
  std::uint64_t seed = 1;
  std::string output_path;
  std::map<std::string, ConfigValue> params;

  bool flag(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::vector<double>& reals(const std::string& key) const;
  const std::vector<std::string>& texts(const std::string& key) const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses a flat JSON object. Every violation (unknown key, wrong type,
/// missing required key, out-of-range value) is collected into one
/// ConfigError whose message names each offending key.
ExperimentConfig parse_config(std::string_view text);

/// Canonical form: experiment, seed, output_path, then the parameters in
/// key order. parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

/// Name of the environment variable that overrides the root seed.
inline constexpr const char* kSeedEnvVar = "KPZLAB_SEED";

/// Applies the override when `value` is non-null; throws ConfigError when it
/// is not a non-negative integer.
void apply_seed_override(ExperimentConfig& config, const char* value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180: CRLF line ends, fields quoted only when they contain a comma,
/// quote, CR or LF.
std::string format_csv(const CsvTable& table);
/// Accepts CRLF or LF line ends. Throws ParseError(line) on unterminated
/// quotes, ragged rows or an empty document.
CsvTable parse_csv(std::string_view text);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

/// Writes to a temporary sibling file and renames it into place.
void write_file_atomic(const std::string& path, std::string_view contents);

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct ExperimentResult {
  CsvTable table;
  std::vector<CheckResult> checks;
  bool pass() const noexcept;
};

/// Runs the experiment in memory.
ExperimentResult execute_experiment(const ExperimentConfig& config, Exec exec = Exec::parallel);

/// Exit statuses of the tool.
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Executes, writes the CSV to output_path and the summary JSON to
/// output_path + ".summary.json" (both atomically, only on success), prints the
/// summary to `log`, and returns kExitPass or kExitFail. Errors propagate.
int run_experiment(const ExperimentConfig& config, std::ostream& log, Exec exec = Exec::parallel);

/// One claimed exponent from a results file.
struct ReportRow {
  std::string source;
  std::string claim;
  double predicted = 0.0;
  double measured = 0.0;
  double halfwidth = 0.0;
  double tolerance = 0.0;
  bool one_sided = false;  // PASS iff measured <= predicted + tolerance
  bool pass = false;
};

/// PASS iff |measured - predicted| <= tolerance (or the one-sided version).
bool band_pass(double measured, double predicted, double tolerance, bool one_sided = false) noexcept;

/// Fits the exponents claimed by a results CSV. Throws ParseError on
/// malformed input or an unknown column set.
std::vector<ReportRow> report_table(std::string_view csv_text, const std::string& source);
std::vector<ReportRow> report(const std::vector<std::string>& csv_paths);
std::string format_report(const std::vector<ReportRow>& rows);

}  // namespace kpzlab
