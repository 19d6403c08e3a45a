// aorhb command-line front end: solve / bench / sweep / certify.

#include "aorhb/bench.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

using namespace aorhb;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string scale;
  std::string solvers;
  std::optional<long> max_iters;
  std::optional<double> tol;
  std::string experiment;
  bool timing = false;
  // ad-hoc problem for `solve` / custom sweeps
  std::string kind;
  std::string dims;
  std::optional<double> kappa;
  std::string kappas;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config file (key = value)");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, std::string("output directory (default $") + kOutDirEnv + " or aorhb_out)");
  cmd->add_option("--scale", f.scale, "desk | paper");
  cmd->add_option("--solvers", f.solvers, "comma-separated solver ids");
  cmd->add_option("--max-iters", f.max_iters, "iteration budget");
  cmd->add_option("--tol", f.tol, "relative error tolerance");
  cmd->add_option("--experiment", f.experiment, "preset name");
  cmd->add_flag("--timing", f.timing, "record wall_ms (CSV no longer byte-reproducible)");
  cmd->add_option("--kind", f.kind, "problem kind for custom runs");
  cmd->add_option("--dims", f.dims, "problem dimensions, e.g. 50,5");
  cmd->add_option("--kappa", f.kappa, "condition number");
  cmd->add_option("--kappas", f.kappas, "comma-separated condition numbers (custom sweep)");
}

ExperimentConfig build_config(const Flags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_experiment_config(f.config);
  // Command-line values override the file.
  std::string text;
  if (!f.experiment.empty()) text += "experiment = " + f.experiment + "\n";
  if (!f.scale.empty()) text += "scale = " + f.scale + "\n";
  if (!f.solvers.empty()) text += "solvers = " + f.solvers + "\n";
  if (!f.kappas.empty()) text += "kappas = " + f.kappas + "\n";
  const ExperimentConfig over = parse_experiment_config(text);
  if (!f.experiment.empty()) cfg.experiment = over.experiment;
  if (!f.scale.empty()) cfg.scale = over.scale;
  if (!f.solvers.empty()) cfg.solvers = over.solvers;
  if (!f.kappas.empty()) cfg.kappas = over.kappas;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.max_iters) cfg.max_iters = *f.max_iters;
  if (f.tol) cfg.tolerance = *f.tol;
  if (f.timing) cfg.record_time = true;
  if (!f.kind.empty() || !f.dims.empty() || f.kappa) {
    InstanceSpec spec = cfg.instance.value_or(InstanceSpec{});
    if (!f.kind.empty()) spec.kind = problem_kind_from_string(f.kind);
    if (!f.dims.empty()) spec.dims = parse_experiment_config("dims = " + f.dims).instance->dims;
    if (f.kappa) spec.kappa = *f.kappa;
    cfg.instance = spec;
    if (f.experiment.empty() && f.config.empty()) cfg.experiment = Experiment::custom;
  }
  if (cfg.instance) cfg.instance->seed = cfg.seed;
  return cfg;
}

void print_runs(const ReportBundle& b, bool details) {
  for (const auto& r : b.runs) {
    std::cout << r.solver;
    if (!std::isnan(r.kappa)) std::cout << " kappa=" << r.kappa;
    std::cout << " iters=" << r.iterations << " stop=" << r.stop << " rel_error=" << r.final_relative_error;
    if (r.certificate) {
      std::cout << " certificate=" << (r.certificate->passed() ? "PASS" : "FAIL")
                << " worst_ratio=" << r.certificate->worst_ratio << " bound=" << r.certificate_bound;
      if (details)
        for (std::size_t i = 0; i < r.certificate->violations.size() && i < 10; ++i)
          std::cout << "\n  violation k=" << r.certificate->violations[i].first
                    << " ratio=" << r.certificate->violations[i].second;
    }
    if (!r.note.empty()) std::cout << " (" << r.note << ")";
    std::cout << '\n';
  }
  for (const auto& [id, s] : b.slopes) std::cout << "slope " << id << " " << s << '\n';
  for (const auto& w : b.warnings) std::cout << "warning: " << w << '\n';
  std::cout << "summary: " << b.summary_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AOR-HB solver benchmarks"};
  app.require_subcommand(1);
  Flags flags;
  auto* solve = app.add_subcommand("solve", "run solvers on one problem instance");
  auto* bench = app.add_subcommand("bench", "run an experiment preset and write CSV/plot data");
  auto* sweep = app.add_subcommand("sweep", "condition-number sweep with fitted iteration slopes");
  auto* certify = app.add_subcommand("certify", "run and report per-step Lyapunov certificates");
  for (auto* cmd : {solve, bench, sweep, certify}) add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = build_config(flags);
    if (solve->parsed()) {
      if (cfg.experiment != Experiment::custom)
        throw ConfigError("solve runs a custom problem; use --kind/--dims/--kappa or a config with kind");
      cfg.kappas.clear();
    } else if (sweep->parsed()) {
      if (cfg.experiment != Experiment::scaling_fig6 && !(cfg.experiment == Experiment::custom && !cfg.kappas.empty())) {
        if (!flags.experiment.empty() || !flags.config.empty())
          throw ConfigError("sweep needs scaling_fig6 or a custom problem with kappas");
        cfg.experiment = Experiment::scaling_fig6;
      }
    } else if (cfg.experiment == Experiment::custom && !cfg.instance) {
      throw ConfigError("choose --experiment or give a problem via --kind/--dims/--kappa");
    }
    ReportBundle bundle = run_experiment(cfg);
    if (bench->parsed() || sweep->parsed()) {
      const bool scaling = !bundle.slopes.empty();
      const std::string dat = emit_plot_data(bundle, scaling ? PlotStyle::loglog_scaling : PlotStyle::semilog_error);
      std::cout << "plot data: " << dat << '\n';
    }
    print_runs(bundle, certify->parsed());
    return exit_code(bundle);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
