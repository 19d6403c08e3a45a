#include "aorhb/bench.hpp"

#include "aorhb/composite.hpp"
#include "aorhb/saddle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace aorhb {

namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<Experiment, std::string>> kExperimentNames = {
    {Experiment::piecewise_fig1, "piecewise_fig1"}, {Experiment::logistic_fig2, "logistic_fig2"},
    {Experiment::lasso_fig3, "lasso_fig3"},         {Experiment::l1l2_fig4, "l1l2_fig4"},
    {Experiment::mspbe_fig5, "mspbe_fig5"},         {Experiment::scaling_fig6, "scaling_fig6"},
    {Experiment::custom, "custom"}};

const std::vector<std::pair<std::string, ProblemClass>> kSolvers = {
    {"gd", ProblemClass::smooth},
    {"hb", ProblemClass::smooth},
    {"nag", ProblemClass::smooth},
    {"aor_hb", ProblemClass::smooth},
    {"aor_hb_two_var", ProblemClass::smooth},
    {"aor_hb_zero", ProblemClass::smooth},
    {"aor_hb_composite", ProblemClass::composite},
    {"proximal_gradient", ProblemClass::composite},
    {"aor_hb_saddle", ProblemClass::saddle},
    {"aor_hb_saddle_euler_form", ProblemClass::saddle},
    {"aor_hb_saddle_implicit", ProblemClass::saddle},
    {"extragradient", ProblemClass::saddle},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t' || c == 'x') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  }
}

long parse_long(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError("config: " + key + " expects an integer");
  return static_cast<long>(d);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + " expects a boolean");
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  if (std::isnan(v)) return "-";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ProblemClass class_of(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::lasso:
    case ProblemKind::l1l2:
      return ProblemClass::composite;
    case ProblemKind::mspbe:
      return ProblemClass::saddle;
    default:
      return ProblemClass::smooth;
  }
}

std::string class_name(ProblemClass c) {
  switch (c) {
    case ProblemClass::smooth:
      return "smooth";
    case ProblemClass::composite:
      return "composite";
    case ProblemClass::saddle:
      return "saddle";
  }
  return "?";
}

// Resolved plan for one experiment.
struct Plan {
  std::vector<InstanceSpec> instances;  // one, or one per kappa for sweeps
  std::vector<std::string> solvers;
  long max_iters = 10000;
  double tolerance = 1e-10;
  bool sweep = false;
};

InstanceSpec make_spec(ProblemKind kind, std::vector<long> dims, std::optional<double> kappa, std::uint64_t seed) {
  InstanceSpec s;
  s.kind = kind;
  s.dims = std::move(dims);
  s.kappa = kappa;
  s.seed = seed;
  return s;
}

std::vector<std::string> default_solvers(ProblemClass c, bool zero_mu) {
  switch (c) {
    case ProblemClass::smooth:
      if (zero_mu) return {"gd", "nag", "aor_hb_zero"};
      return {"gd", "hb", "nag", "aor_hb", "aor_hb_two_var"};
    case ProblemClass::composite:
      return {"aor_hb_composite", "proximal_gradient"};
    case ProblemClass::saddle:
      return {"aor_hb_saddle", "aor_hb_saddle_implicit", "extragradient"};
  }
  return {};
}

Plan make_plan(const ExperimentConfig& cfg) {
  Plan plan;
  const bool desk = cfg.scale == Scale::desk;
  const std::uint64_t seed = cfg.seed;
  switch (cfg.experiment) {
    case Experiment::piecewise_fig1: {
      auto s = make_spec(ProblemKind::piecewise, {desk ? 50L : 100L, 5L}, std::nullopt, seed);
      s.constants = {{"mu", 1.0}, {"L", 1e4}, {"r", 1e-6}};
      plan.instances = {s};
      plan.solvers = default_solvers(ProblemClass::smooth, false);
      plan.max_iters = 10000;
      break;
    }
    case Experiment::logistic_fig2: {
      auto s = make_spec(ProblemKind::logistic, {50L, desk ? 200L : 1000L}, std::nullopt, seed);
      s.constants = {{"lambda", 0.1}};
      plan.instances = {s};
      plan.solvers = default_solvers(ProblemClass::smooth, false);
      plan.max_iters = 10000;
      break;
    }
    case Experiment::lasso_fig3:
    case Experiment::l1l2_fig4: {
      const auto kind = cfg.experiment == Experiment::lasso_fig3 ? ProblemKind::lasso : ProblemKind::l1l2;
      auto s = make_spec(kind, {desk ? 256L : 1024L, desk ? 64L : 256L}, std::nullopt, seed);
      s.constants = {{"lambda", 0.8}, {"sparsity", 5.0}};
      plan.instances = {s};
      plan.solvers = default_solvers(ProblemClass::composite, false);
      plan.max_iters = 5000;
      break;
    }
    case Experiment::mspbe_fig5: {
      plan.instances = {make_spec(ProblemKind::mspbe, {desk ? 250L : 2500L, desk ? 20L : 50L}, 1e4, seed)};
      plan.solvers = default_solvers(ProblemClass::saddle, false);
      plan.max_iters = 20000;
      break;
    }
    case Experiment::scaling_fig6: {
      const std::vector<double> kappas = cfg.kappas.empty() ? std::vector<double>{1e2, 1e3, 1e4} : cfg.kappas;
      for (double k : kappas)
        plan.instances.push_back(make_spec(ProblemKind::mspbe, {desk ? 250L : 2500L, desk ? 20L : 50L}, k, seed));
      plan.solvers = default_solvers(ProblemClass::saddle, false);
      plan.max_iters = 5000000;
      plan.tolerance = 1e-6;
      plan.sweep = true;
      break;
    }
    case Experiment::custom: {
      if (!cfg.instance) throw ConfigError("custom experiment needs a problem (kind, dims, kappa)");
      InstanceSpec base = *cfg.instance;
      base.seed = seed;
      if (cfg.kappas.empty()) {
        plan.instances = {base};
      } else {
        for (double k : cfg.kappas) {
          InstanceSpec s = base;
          s.kappa = k;
          plan.instances.push_back(s);
        }
        plan.sweep = true;
        plan.tolerance = 1e-6;
        plan.max_iters = 5000000;
      }
      const bool zero_mu = base.kind == ProblemKind::least_squares_singular;
      plan.solvers = default_solvers(class_of(base.kind), zero_mu);
      break;
    }
  }
  if (!cfg.solvers.empty()) plan.solvers = cfg.solvers;
  if (cfg.max_iters) plan.max_iters = *cfg.max_iters;
  if (cfg.tolerance) plan.tolerance = *cfg.tolerance;
  if (plan.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(plan.tolerance >= 0)) throw ConfigError("tolerance must be >= 0");

  const ProblemClass want = class_of(plan.instances.front().kind);
  for (const auto& s : plan.solvers) {
    if (solver_problem_class(s) != want)
      throw ConfigError("solver '" + s + "' is a " + class_name(solver_problem_class(s)) + " solver but " +
                        to_string(plan.instances.front().kind) + " is a " + class_name(want) + " problem");
  }
  return plan;
}

bool certified(const std::string& solver) {
  return solver == "aor_hb_two_var" || solver == "aor_hb_composite" || solver == "aor_hb_saddle" ||
         solver == "aor_hb_saddle_euler_form" || solver == "aor_hb_saddle_implicit";
}

// Rounding floors below which E^alpha ratios are not meaningful, relative to E^alpha_0.
constexpr double kExactReferenceFloor = 1e-20;
constexpr double kSelfConsistentFloor = 1e-16;

struct Reference {
  Vector x;
  bool self_consistent = false;
};

Reference reference_for(const Instance& inst) {
  Reference ref;
  if (inst.reference) {
    ref.x = *inst.reference;
    return ref;
  }
  ref.self_consistent = true;
  if (inst.is_smooth()) {
    const auto& f = *inst.smooth();
    SolverConfig c;
    c.max_iters = 1000000;
    c.grad_tolerance = 1e-12;
    c.record_every = c.max_iters;
    c.record_objective = false;
    c.record_time = false;
    ref.x = aor_hb(f, Vector::Zero(f.dim()), std::nullopt, c).x_final;
  } else if (inst.is_composite()) {
    ref.x = composite_reference(inst.composite()).x;
  } else {
    throw ConfigError("no reference available for this saddle problem");
  }
  return ref;
}

SolverTrace run_solver(const std::string& id, const Instance& inst, const SolverConfig& c) {
  if (inst.is_smooth()) {
    const auto& f = *inst.smooth();
    const Vector x0 = Vector::Zero(f.dim());
    if (id == "gd") return gradient_descent(f, x0, c);
    if (id == "hb") return heavy_ball_polyak(f, x0, std::nullopt, c);
    if (id == "nag") return nag(f, x0, std::nullopt, c);
    if (id == "aor_hb") return aor_hb(f, x0, std::nullopt, c);
    if (id == "aor_hb_two_var") return aor_hb_two_var(f, x0, x0, c);
    if (id == "aor_hb_zero") return aor_hb_zero(f, x0, c);
  } else if (inst.is_composite()) {
    const auto& pr = inst.composite();
    const Vector x0 = Vector::Zero(pr.f->dim());
    if (id == "aor_hb_composite") return aor_hb_composite(pr, x0, x0, c);
    if (id == "proximal_gradient") return proximal_gradient(pr, x0, c);
  } else {
    const auto& pr = inst.saddle();
    const Vector u0 = Vector::Zero(pr.m()), p0 = Vector::Zero(pr.n());
    const SaddleState s0 = saddle_state_from(u0, p0);
    if (id == "aor_hb_saddle") return aor_hb_saddle(pr, s0, c);
    if (id == "aor_hb_saddle_euler_form") return aor_hb_saddle_euler_form(pr, s0, c);
    if (id == "aor_hb_saddle_implicit") return aor_hb_saddle_implicit(pr, s0, c);
    if (id == "extragradient") {
      Vector z0(pr.m() + pr.n());
      z0 << u0, p0;
      return extragradient(pr, z0, c);
    }
  }
  throw ConfigError("solver '" + id + "' does not apply to this problem");
}

std::string kappa_tag(double kappa) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_k%.0e", kappa);
  std::string s = buf;
  s.erase(std::remove(s.begin(), s.end(), '+'), s.end());
  return s;
}

std::string describe(const InstanceSpec& s) {
  std::ostringstream os;
  os << to_string(s.kind) << " dims";
  for (long d : s.dims) os << ' ' << d;
  if (s.kappa) os << " kappa " << fmt_short(*s.kappa);
  for (const auto& [k, v] : s.constants) os << ' ' << k << '=' << fmt_short(v);
  os << " seed " << s.seed;
  return os.str();
}

double least_squares_slope(const std::vector<std::pair<double, double>>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double den = n * sxx - sx * sx;
  return den != 0 ? (n * sxy - sx * sy) / den : kMissing;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Experiment e) {
  for (const auto& [k, v] : kExperimentNames)
    if (k == e) return v;
  return "custom";
}

Experiment experiment_from_string(const std::string& s) {
  for (const auto& [k, v] : kExperimentNames)
    if (v == s) return k;
  throw ConfigError("unknown experiment '" + s + "'");
}

std::string to_string(Scale s) { return s == Scale::desk ? "desk" : "paper"; }

Scale scale_from_string(const std::string& s) {
  if (s == "desk") return Scale::desk;
  if (s == "paper") return Scale::paper;
  throw ConfigError("unknown scale '" + s + "' (expected desk or paper)");
}

const std::vector<std::string>& solver_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [id, c] : kSolvers) v.push_back(id);
    return v;
  }();
  return ids;
}

ProblemClass solver_problem_class(const std::string& solver) {
  for (const auto& [id, c] : kSolvers)
    if (id == solver) return c;
  throw ConfigError("unknown solver '" + solver + "'");
}

std::string default_output_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return env && *env ? std::string(env) : std::string("aorhb_out");
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  InstanceSpec inst;
  bool have_instance = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "experiment") {
      cfg.experiment = experiment_from_string(val);
    } else if (key == "scale") {
      cfg.scale = scale_from_string(val);
    } else if (key == "solvers") {
      cfg.solvers = split_names(val);
      for (const auto& s : cfg.solvers) solver_problem_class(s);
    } else if (key == "seed") {
      const long s = parse_long(key, val);
      if (s < 0) throw ConfigError("config: seed must be nonnegative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "output_dir") {
      cfg.output_dir = val;
    } else if (key == "max_iters") {
      cfg.max_iters = parse_long(key, val);
    } else if (key == "tolerance") {
      cfg.tolerance = parse_double(key, val);
    } else if (key == "record_time") {
      cfg.record_time = parse_bool(key, val);
    } else if (key == "kind") {
      inst.kind = problem_kind_from_string(val);
      have_instance = true;
    } else if (key == "dims") {
      inst.dims.clear();
      for (const auto& d : split_list(val)) inst.dims.push_back(parse_long(key, d));
      have_instance = true;
    } else if (key == "kappa") {
      inst.kappa = parse_double(key, val);
      have_instance = true;
    } else if (key == "kappas") {
      cfg.kappas.clear();
      for (const auto& k : split_names(val)) cfg.kappas.push_back(parse_double(key, k));
    } else if (key.rfind("const.", 0) == 0 && key.size() > 6) {
      inst.constants[key.substr(6)] = parse_double(key, val);
      have_instance = true;
    } else {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (have_instance) {
    inst.seed = cfg.seed;
    cfg.instance = inst;
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

// ---------------------------------------------------------------------------

void emit_csv(const SolverTrace& trace, const std::string& path) {
  if (trace.rows.empty()) throw ConfigError("emit_csv: trace has no rows");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("emit_csv: cannot open " + path);
  out << kCsvHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.k << ',' << fmt17(r.error) << ',' << fmt17(r.obj_gap) << ',' << fmt17(r.E) << ',' << fmt17(r.Ealpha)
        << ',' << fmt17(r.wall_ms) << '\n';
  }
  if (!out) throw Error("emit_csv: write failed for " + path);
}

std::vector<TraceRow> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("parse_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error("parse_csv: bad header in " + path);
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    f.push_back(cur);
    if (f.size() != 6) throw Error("parse_csv: expected 6 fields in " + path);
    auto num = [](const std::string& s) { return s.empty() ? kMissing : std::strtod(s.c_str(), nullptr); };
    TraceRow r;
    r.k = std::strtol(f[0].c_str(), nullptr, 10);
    r.error = num(f[1]);
    r.obj_gap = num(f[2]);
    r.E = num(f[3]);
    r.Ealpha = num(f[4]);
    r.wall_ms = num(f[5]);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------

bool ReportBundle::certificates_passed() const {
  for (const auto& r : runs)
    if (r.certificate && !r.certificate->passed()) return false;
  return true;
}

int exit_code(const ReportBundle& bundle) { return bundle.certificates_passed() ? 0 : 1; }

ReportBundle run_experiment(const ExperimentConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const Plan plan = make_plan(config);

  ReportBundle bundle;
  bundle.config = config;
  bundle.config.solvers = plan.solvers;
  bundle.config.max_iters = plan.max_iters;
  bundle.config.tolerance = plan.tolerance;
  if (bundle.config.output_dir.empty()) bundle.config.output_dir = default_output_dir();
  const fs::path dir(bundle.config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("output_dir not writable: " + dir.string());

  bundle.dims = plan.instances.front().dims;
  if (plan.instances.size() == 1) {
    bundle.problem_description = describe(plan.instances.front());
  } else {
    InstanceSpec first = plan.instances.front();
    first.kappa.reset();
    std::string kappas;
    for (const auto& spec : plan.instances)
      if (spec.kappa) kappas += (kappas.empty() ? "" : ",") + fmt_short(*spec.kappa);
    bundle.problem_description = describe(first) + " kappas " + kappas;
  }
  const std::string stem = to_string(config.experiment);

  for (const InstanceSpec& spec : plan.instances) {
    const Instance inst = generate_instance(spec);
    const Reference ref = reference_for(inst);
    if (ref.self_consistent) bundle.reference_self_consistent = true;
    const double floor = ref.self_consistent ? kSelfConsistentFloor : kExactReferenceFloor;

    for (const std::string& id : plan.solvers) {
      SolverConfig c;
      c.max_iters = plan.max_iters;
      c.rel_error_tolerance = plan.tolerance;
      c.reference_x = ref.x;
      c.record_time = config.record_time;
      // Long sweep runs without a certificate are thinned; the stopping test still runs every step.
      c.record_every = plan.sweep && !certified(id) ? 100 : 1;

      const auto t0 = std::chrono::steady_clock::now();
      SolverTrace trace = run_solver(id, inst, c);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

      RunSummary run;
      run.solver = id;
      run.kappa = plan.sweep && spec.kappa ? *spec.kappa : kMissing;
      const std::string file = stem + "_" + id + (plan.sweep && spec.kappa ? kappa_tag(*spec.kappa) : "") + ".csv";
      run.csv_path = (dir / file).string();
      emit_csv(trace, run.csv_path);
      run.iterations = trace.iterations;
      run.iterations_to_tol = trace.stop == StopReason::rel_error_tolerance ? trace.iterations : -1;
      run.final_error = trace.rows.back().error;
      run.final_relative_error = trace.relative_error();
      run.stop = to_string(trace.stop);
      run.rows = static_cast<long>(trace.rows.size());
      run.wall_ms = ms;
      run.heuristic = trace.heuristic;
      if (trace.diverged()) run.note = "diverged at iteration " + std::to_string(trace.diverged_at);
      if (certified(id) && !trace.heuristic && trace.rows.size() >= 2) {
        run.certificate_bound = 1.0 / (1.0 + trace.alpha / 2.0);
        run.certificate = certify_decay_above(trace, run.certificate_bound, floor);
      }
      if (trace.heuristic) run.note = "heuristic: non-convex regulariser, no certificate";
      bundle.runs.push_back(std::move(run));
    }
  }

  if (plan.sweep) {
    for (const std::string& id : plan.solvers) {
      std::vector<std::pair<double, double>> pts;
      bool complete = true;
      for (const auto& r : bundle.runs) {
        if (r.solver != id) continue;
        if (r.iterations_to_tol < 1) {
          complete = false;
          continue;
        }
        pts.emplace_back(r.kappa, static_cast<double>(r.iterations_to_tol));
      }
      if (!complete)
        bundle.warnings.push_back(id + ": some sweep points did not reach the tolerance; slope uses the rest");
      if (pts.size() >= 2) bundle.slopes[id] = fit_iteration_scaling(pts);
    }
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : bundle.runs)
      if (!std::isnan(r.final_error)) best = std::min(best, r.final_error);
    for (auto& r : bundle.runs) {
      if (r.solver == "hb" && (r.final_error > 10.0 * best || std::isnan(r.final_error)) && r.note.empty())
        r.note = "non-convergent baseline";
    }
    if (config.experiment == Experiment::logistic_fig2)
      bundle.warnings.push_back("solver ranking on logistic regression is seed-dependent and is not reported");
  }
  if (bundle.reference_self_consistent)
    bundle.warnings.push_back("reference solution is self-consistent (computed by a long solver run)");

  bundle.summary_path = (dir / (stem + "_summary.txt")).string();
  bundle.metadata_path = (dir / (stem + "_metadata.txt")).string();
  bundle.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  write_summary(bundle);
  write_metadata(bundle);
  return bundle;
}

// ---------------------------------------------------------------------------

void write_summary(const ReportBundle& b) {
  std::ofstream out(b.summary_path, std::ios::trunc);
  if (!out) throw Error("write_summary: cannot open " + b.summary_path);
  out << "experiment " << to_string(b.config.experiment) << '\n';
  out << "scale " << to_string(b.config.scale) << '\n';
  out << "problem " << b.problem_description << '\n';
  out << "reference " << (b.reference_self_consistent ? "self-consistent" : "exact") << '\n';
  out << "\nsolver kappa iterations iters_to_tol stop final_error final_rel_error certificate worst_ratio bound csv "
         "note\n";
  for (const auto& r : b.runs) {
    std::string cert = "n/a";
    std::string worst = "-";
    if (r.certificate) {
      cert = r.certificate->passed() ? "PASS" : "FAIL(" + std::to_string(r.certificate->violations.size()) + ")";
      worst = fmt_short(r.certificate->worst_ratio);
    }
    out << r.solver << ' ' << fmt_short(r.kappa) << ' ' << r.iterations << ' ' << r.iterations_to_tol << ' ' << r.stop
        << ' ' << fmt_short(r.final_error) << ' ' << fmt_short(r.final_relative_error) << ' ' << cert << ' ' << worst
        << ' ' << fmt_short(r.certificate_bound) << ' ' << fs::path(r.csv_path).filename().string() << ' '
        << (r.note.empty() ? "-" : "\"" + r.note + "\"") << '\n';
  }
  if (!b.slopes.empty()) {
    out << '\n';
    for (const auto& [id, s] : b.slopes) out << "slope " << id << ' ' << fmt_short(s) << '\n';
  }
  out << "\ncertificates " << (b.certificates_passed() ? "PASS" : "FAIL") << '\n';
}

void write_metadata(const ReportBundle& b) {
  std::ofstream out(b.metadata_path, std::ios::trunc);
  if (!out) throw Error("write_metadata: cannot open " + b.metadata_path);
  out << "library_version " << kLibraryVersion << '\n';
  out << "experiment " << to_string(b.config.experiment) << '\n';
  out << "scale " << to_string(b.config.scale) << '\n';
  out << "seed " << b.config.seed << '\n';
  out << "output_dir " << b.config.output_dir << '\n';
  out << "solvers";
  for (const auto& s : b.config.solvers) out << ' ' << s;
  out << '\n';
  if (b.config.max_iters) out << "max_iters " << *b.config.max_iters << '\n';
  if (b.config.tolerance) out << "tolerance " << fmt17(*b.config.tolerance) << '\n';
  out << "record_time " << (b.config.record_time ? "true" : "false") << '\n';
  out << "dims";
  for (long d : b.dims) out << ' ' << d;
  out << '\n';
  out << "problem " << b.problem_description << '\n';
  for (const auto& r : b.runs)
    out << "wall_ms " << r.solver << (std::isnan(r.kappa) ? "" : kappa_tag(r.kappa)) << ' ' << fmt_short(r.wall_ms)
        << '\n';
  out << "wall_ms_total " << fmt_short(b.wall_ms) << '\n';
  for (const auto& w : b.warnings) out << "warning " << w << '\n';
}

// ---------------------------------------------------------------------------

std::string emit_plot_data(ReportBundle& bundle, PlotStyle style) {
  if (bundle.runs.empty()) throw ConfigError("emit_plot_data: bundle has no runs");
  const fs::path dir(bundle.config.output_dir.empty() ? default_output_dir() : bundle.config.output_dir);
  const std::string stem = to_string(bundle.config.experiment) + "_" +
                           (style == PlotStyle::semilog_error ? "semilog_error" : "loglog_scaling");
  const fs::path dat = dir / (stem + ".dat");
  const fs::path gp = dir / (stem + ".gp");

  std::ofstream out(dat, std::ios::trunc);
  if (!out) throw Error("emit_plot_data: cannot open " + dat.string());
  long clamped = 0;
  auto clamp = [&](double v) {
    if (!(v > 0)) {
      ++clamped;
      return 1e-300;
    }
    return v;
  };

  std::vector<std::string> titles;
  std::map<std::string, double> slopes;
  if (style == PlotStyle::semilog_error) {
    out << "# iter log10(error)\n";
    for (const auto& r : bundle.runs) {
      const std::string title = r.solver + (std::isnan(r.kappa) ? "" : kappa_tag(r.kappa));
      if (!titles.empty()) out << "\n\n";
      titles.push_back(title);
      out << "# " << title << '\n';
      for (const auto& row : parse_csv(r.csv_path)) {
        if (std::isnan(row.error)) continue;
        out << row.k << ' ' << fmt17(std::log10(clamp(row.error))) << '\n';
      }
    }
  } else {
    out << "# log10(kappa) log10(iterations)\n";
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> pts;
    for (const auto& r : bundle.runs) {
      if (std::isnan(r.kappa) || r.iterations_to_tol < 0) continue;
      if (!pts.count(r.solver)) order.push_back(r.solver);
      pts[r.solver].emplace_back(std::log10(clamp(r.kappa)),
                                 std::log10(clamp(static_cast<double>(r.iterations_to_tol))));
    }
    for (const auto& id : order) {
      if (!titles.empty()) out << "\n\n";
      titles.push_back(id);
      out << "# " << id << '\n';
      for (auto [x, y] : pts[id]) out << fmt17(x) << ' ' << fmt17(y) << '\n';
      if (pts[id].size() >= 2) slopes[id] = least_squares_slope(pts[id]);
    }
  }
  if (!out) throw Error("emit_plot_data: write failed for " + dat.string());
  out.close();

  std::ofstream script(gp, std::ios::trunc);
  if (!script) throw Error("emit_plot_data: cannot open " + gp.string());
  if (style == PlotStyle::semilog_error) {
    script << "set xlabel 'iteration'\nset ylabel 'log10 error'\n";
  } else {
    script << "set xlabel 'log10 kappa'\nset ylabel 'log10 iterations'\n";
    for (const auto& [id, s] : slopes) script << "# slope " << id << " = " << fmt_short(s) << '\n';
    int label = 0;
    for (const auto& [id, s] : slopes) {
      script << "set label " << label + 1 << " '" << id << " slope " << fmt_short(s) << "' at graph 0.05, graph "
             << fmt_short(0.95 - 0.05 * label) << '\n';
      ++label;
    }
  }
  script << "plot";
  for (std::size_t i = 0; i < titles.size(); ++i)
    script << (i ? "," : "") << " '" << dat.filename().string() << "' index " << i << " using 1:2 with lines title '"
           << titles[i] << "'";
  script << '\n';

  if (clamped > 0) {
    bundle.warnings.push_back("plot data: " + std::to_string(clamped) + " non-positive value(s) clamped to 1e-300");
    if (!bundle.metadata_path.empty()) write_metadata(bundle);
  }
  return dat.string();
}

}  // namespace aorhb
