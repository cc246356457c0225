#pragma once

#include <map>
#include <string>

#include "todasurf/fields.hpp"

namespace todasurf {

/// Raw parsed configuration text. Keys are flattened to "section.key"; values
/// stay strings until typed conversion. Grammar (documented in the README):
/// `[section]` headers, `key = value` lines, full-line comments starting with
/// '#' or ';', names matching [a-z_][a-z0-9_]*. Duplicate keys, keys outside a
/// section, and malformed lines are parse errors with line/column attached.
struct RawConfig {
  struct Entry {
    std::string value;
    int line = -1;
  };
  std::map<std::string, Entry> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
};

RawConfig parse_ini(const std::string& text);  ///< throws ParseError
RawConfig load_ini(const std::string& path);   ///< adds file-open errors

/// Applies one "section.key=value" assignment (command-line override syntax);
/// replaces an existing entry or adds a new one. Throws ParseError on syntax.
void apply_override(RawConfig& cfg, const std::string& assignment);

enum class SolutionKind {
  builtin,    ///< closed-form family from exact_solution
  grid_file,  ///< sampled configuration loaded from a grid CSV
  goursat,    ///< characteristic initial-value solve (edge data from a family)
};

struct CheckSpec {
  bool enabled = true;
  double tolerance = 0.0;
};

/// Fully typed batch-run description. Defaults match the documented grammar.
struct RunConfig {
  // [algebra]
  std::string family = "sl";
  int n = 2;
  double alpha_sq = 2.0;

  // [model]
  double mu_plus = 1.0;
  double mu_minus = 1.0;
  double c = 1.0;
  double lambda = 0.0;

  // [solution]
  SolutionKind kind = SolutionKind::builtin;
  std::string name = "liouville_cosh";  ///< builtin family / Goursat edge data
  std::string file;                     ///< grid CSV path (kind == grid_file)
  double goursat_step = 1e-2;
  std::map<std::string, double> params;  ///< free numeric parameters

  // [grid]
  Domain window{0.0, 1.0, 0.0, 1.0};
  int nz = 21;
  int nzbar = 21;
  double fd_step = 1e-3;
  double transport_step = 1e-3;

  // [output]
  std::string forms_csv;
  std::string immersion_csv;
  std::string report_json;

  // [checks]
  std::map<std::string, CheckSpec> checks;  ///< keyed by the five check names
  int stride = 1;                           ///< decimation for the slow checks
  double max_quarantine_fraction = 0.0;
};

/// The recognized check names with their default tolerances.
const std::map<std::string, double>& default_check_tolerances();

/// Typed conversion and invariant validation (c != 0, mu+- != 0, grid counts
/// >= 2, fd_step > 0, known keys only, ...). Throws ParseError pointing at the
/// offending config line where one exists.
RunConfig make_run_config(const RawConfig& raw);

struct RunOptions {
  bool check_only = false;  ///< verification only: skip CSV artifacts
  bool quiet = false;       ///< suppress the stdout summary
  int threads = 0;          ///< <=0: TODASURF_THREADS env, else hardware count
};

struct RunOutcome {
  int exit_code = 0;    ///< 0 all checks pass; 1 check failure or quarantine excess
  bool pass = false;
  std::string report;   ///< JSON report text (also written to report_json)
  std::string summary;  ///< human-readable one-line-per-check summary
};

/// Runs the configured sweep and writes the artifacts. Input problems (missing
/// grid file, undersized grid domain, divergent characteristic solve, unwritable
/// output paths) throw before any artifact is written; check failures write all
/// artifacts and return exit_code 1.
RunOutcome run_batch(const RunConfig& config, const RunOptions& options = {});

}  // namespace todasurf
