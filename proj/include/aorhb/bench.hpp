#pragma once

// Experiment presets, CSV / plot-data emission and the report bundle used by
// the command-line front end.

#include "aorhb/diagnostics.hpp"
#include "aorhb/problems.hpp"
#include "aorhb/smooth.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aorhb {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr const char* kCsvHeader = "iter,error,obj_gap,lyapunov_E,lyapunov_Ealpha,wall_ms";
inline constexpr const char* kOutDirEnv = "AORHB_OUT_DIR";

enum class Experiment { piecewise_fig1, logistic_fig2, lasso_fig3, l1l2_fig4, mspbe_fig5, scaling_fig6, custom };
enum class Scale { desk, paper };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);
std::string to_string(Scale s);
Scale scale_from_string(const std::string& s);

enum class ProblemClass { smooth, composite, saddle };

/// Every solver identifier understood by run_experiment.
const std::vector<std::string>& solver_ids();
/// Throws ConfigError for unknown ids.
ProblemClass solver_problem_class(const std::string& solver);

struct ExperimentConfig {
  Experiment experiment = Experiment::custom;
  Scale scale = Scale::desk;
  /// Empty means the experiment's default solver set.
  std::vector<std::string> solvers;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::optional<long> max_iters;
  /// Relative-error stopping tolerance (|x_k - x*| / |x_0 - x*|).
  std::optional<double> tolerance;
  /// Writing wall_ms makes CSVs differ between reruns; off by default.
  bool record_time = false;
  /// Problem for `custom`; presets ignore it.
  std::optional<InstanceSpec> instance;
  /// Condition numbers for a sweep; scaling_fig6 defaults to {1e2, 1e3, 1e4}.
  /// A custom experiment with a non-empty list runs as a sweep.
  std::vector<double> kappas;
};

/// Flat key = value text; '#' and ';' start comments, [sections] are ignored.
/// Keys: experiment, scale, solvers, seed, output_dir, max_iters, tolerance,
/// record_time, kind, dims, kappa, kappas, and const.<name> for instance constants.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Default output directory: $AORHB_OUT_DIR, else "aorhb_out".
std::string default_output_dir();

struct RunSummary {
  std::string solver;
  std::string csv_path;
  double kappa = kMissing;  // sweeps only
  long iterations = 0;
  long iterations_to_tol = -1;
  double final_error = kMissing;
  double final_relative_error = kMissing;
  std::string stop;
  long rows = 0;
  double wall_ms = 0.0;
  std::optional<RateCertificate> certificate;
  double certificate_bound = kMissing;
  bool heuristic = false;
  std::string note;
};

struct ReportBundle {
  ExperimentConfig config;
  std::string problem_description;
  std::vector<long> dims;
  bool reference_self_consistent = false;
  std::vector<RunSummary> runs;
  std::map<std::string, double> slopes;
  std::vector<std::string> warnings;
  std::string summary_path;
  std::string metadata_path;
  double wall_ms = 0.0;

  bool certificates_passed() const;
};

/// Runs the configured experiment sequentially and writes one CSV per run plus
/// summary.txt and metadata.txt into output_dir. Solver/problem mismatches are
/// reported as ConfigError before any computation.
ReportBundle run_experiment(const ExperimentConfig& config);

/// 0 when every certificate passes, 1 otherwise.
int exit_code(const ReportBundle& bundle);

void emit_csv(const SolverTrace& trace, const std::string& path);
/// Parses a file written by emit_csv; empty fields come back as NaN.
std::vector<TraceRow> parse_csv(const std::string& path);

enum class PlotStyle { semilog_error, loglog_scaling };

/// Writes <output_dir>/<experiment>_<style>.dat and a matching .gp script,
/// returns the .dat path. Non-positive values are clamped to 1e-300 and a
/// warning is appended to the bundle and its metadata.
std::string emit_plot_data(ReportBundle& bundle, PlotStyle style);

void write_summary(const ReportBundle& bundle);
void write_metadata(const ReportBundle& bundle);

}  // namespace aorhb
