#include "aorhb/composite.hpp"

#include "aorhb/diagnostics.hpp"
#include "recorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aorhb {

using detail::TraceRecorder;

namespace {

void check_threshold(double lambda, double weight, const char* who) {
  if (!(lambda > 0) || !(weight > 0)) throw ConfigError(std::string(who) + ": lambda and weight must be positive");
}

}  // namespace

Vector prox_l1(const Vector& x, double lambda, double weight) {
  check_threshold(lambda, weight, "prox_l1");
  const double t = lambda * weight;
  Vector y(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]) - t;
    y[i] = a > 0 ? std::copysign(a, x[i]) : 0.0;
  }
  return y;
}

double l1_minus_l2_prox_objective(const Vector& y, const Vector& x, double t) {
  return t * (y.lpNorm<1>() - y.norm()) + 0.5 * (y - x).squaredNorm();
}

Vector prox_l1_minus_l2(const Vector& x, double lambda, double weight) {
  check_threshold(lambda, weight, "prox_l1_minus_l2");
  const double t = lambda * weight;
  const Index d = x.size();
  if (d == 0) return x;
  const double xinf = x.lpNorm<Eigen::Infinity>();
  if (xinf > t) {
    const Vector z = prox_l1(x, t, 1.0);
    const double nz = z.norm();
    return z * ((nz + t) / nz);
  }
  if (xinf == 0.0) return Vector::Zero(d);
  // 1-sparse minimisers: any index attaining |x|_inf; pick by objective,
  // then lowest index.
  Vector best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < d; ++i) {
    if (std::abs(x[i]) != xinf) continue;
    Vector y = Vector::Zero(d);
    y[i] = std::copysign(xinf, x[i]);
    const double obj = l1_minus_l2_prox_objective(y, x, t);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(y);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

struct Coordinate1D {
  const GValue& g;
  Vector& y;
  Index i;
  double xi;
  double lambda;

  double g_at(double s) const {
    const double old = y[i];
    y[i] = s;
    const double v = g(y);
    y[i] = old;
    return v;
  }
  double phi(double s) const { return g_at(s) + (s - xi) * (s - xi) / (2.0 * lambda); }
  // Central-difference slope of g plus the exact slope of the quadratic.
  double slope(double s) const {
    const double h = 1e-5 * (1.0 + std::abs(s));
    return (g_at(s + h) - g_at(s - h)) / (2.0 * h) + (s - xi) / lambda;
  }
};

double minimize_coordinate(const Coordinate1D& c) {
  const double cur = c.y[c.i];
  const double w = 1.0 + std::abs(c.xi);
  double lo = std::min({c.xi, 0.0, cur}) - w;
  double hi = std::max({c.xi, 0.0, cur}) + w;
  for (int it = 0; it < 60 && c.slope(lo) >= 0; ++it) lo -= (hi - lo);
  for (int it = 0; it < 60 && c.slope(hi) <= 0; ++it) hi += (hi - lo);

  std::vector<double> candidates;
  constexpr int kGrid = 64;
  double s_prev = lo, d_prev = c.slope(lo);
  for (int j = 1; j <= kGrid; ++j) {
    const double s = lo + (hi - lo) * j / kGrid;
    const double d = c.slope(s);
    if (d_prev < 0 && d >= 0) {
      double a = s_prev, b = s;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        (c.slope(m) < 0 ? a : b) = m;
      }
      candidates.push_back(0.5 * (a + b));
    }
    s_prev = s;
    d_prev = d;
  }
  // Kinks of the nonsmooth part sit on the coordinate axes.
  candidates.push_back(0.0);
  candidates.push_back(cur);

  double best = candidates.front();
  double best_phi = c.phi(best);
  for (std::size_t j = 1; j < candidates.size(); ++j) {
    const double v = c.phi(candidates[j]);
    if (v < best_phi - 1e-15 * (1.0 + std::abs(best_phi))) {
      best_phi = v;
      best = candidates[j];
    }
  }
  return best;
}

NumericProxResult coordinate_descent(const GValue& g, const Vector& x, double lambda, Vector y, double tol,
                                     int max_sweeps) {
  NumericProxResult res;
  res.residual = std::numeric_limits<double>::infinity();
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double change = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      Coordinate1D c{g, y, i, x[i], lambda};
      const double s = minimize_coordinate(c);
      change = std::max(change, std::abs(s - y[i]));
      y[i] = s;
    }
    res.sweeps = sweep;
    res.residual = change;
    if (change <= tol) break;
  }
  res.y = y;
  res.objective = g(y) + (y - x).squaredNorm() / (2.0 * lambda);
  return res;
}

}  // namespace

NumericProxResult prox_numeric(const GValue& g_value, const Vector& x, double lambda, double tol, int max_sweeps) {
  if (!(lambda > 0) || !(tol > 0)) throw ConfigError("prox_numeric: lambda and tol must be positive");
  if (!std::isfinite(g_value(x))) throw EvaluationError("prox_numeric: g is not finite at x");
  NumericProxResult best;
  bool have = false;
  for (const Vector& start : {Vector(x), Vector(Vector::Zero(x.size()))}) {
    NumericProxResult r = coordinate_descent(g_value, x, lambda, start, tol, max_sweeps);
    if (!have || r.objective < best.objective) {
      best = std::move(r);
      have = true;
    }
  }
  if (!(best.residual <= tol)) throw SolveError("prox_numeric: no convergence", best.residual);
  return best;
}

// ---------------------------------------------------------------------------

L1Prox::L1Prox(double weight) : weight_(weight) {
  if (!(weight > 0)) throw ConstructionError("l1 prox: weight must be positive");
}

L1MinusL2Prox::L1MinusL2Prox(double weight) : weight_(weight) {
  if (!(weight > 0)) throw ConstructionError("l1 - l2 prox: weight must be positive");
}

NumericProx::NumericProx(std::string name, GValue g, bool convex, double tol)
    : name_(std::move(name)), g_(std::move(g)), convex_(convex), tol_(tol) {}

Vector NumericProx::prox(const Vector& x, double lambda) const { return prox_numeric(g_, x, lambda, tol_).y; }

void ProxRegistry::add(ProxPtr prox) {
  if (!prox) throw ConfigError("prox registry: null entry");
  ProxRegistryEntry e;
  e.name = prox->name();
  e.convex_flag = prox->convex();
  e.prox = std::move(prox);
  entries_[e.name] = std::move(e);
}

const ProxRegistryEntry& ProxRegistry::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown prox '" + name + "'");
  return it->second;
}

std::vector<std::string> ProxRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

ProxRegistry default_prox_registry(double weight) {
  ProxRegistry reg;
  reg.add(std::make_shared<const ZeroProx>());
  reg.add(std::make_shared<const L1Prox>(weight));
  reg.add(std::make_shared<const L1MinusL2Prox>(weight));
  return reg;
}

// ---------------------------------------------------------------------------

namespace {

void check_problem(const CompositeProblem& p, const Vector& x0, const char* who) {
  if (!p.f || !p.g) throw ConfigError(std::string(who) + ": problem needs f and g");
  if (x0.size() != p.f->dim()) throw ConfigError(std::string(who) + ": starting point has wrong dimension");
}

detail::ObjectiveFn composite_objective(const CompositeProblem& p) {
  if (!p.g->value(Vector::Zero(p.f->dim()))) return detail::value_fn(*p.f);
  return [&p](const Vector& x) { return p.objective(x); };
}

SolverConfig with_reference(const CompositeProblem& p, SolverConfig cfg) {
  if (!cfg.reference_x && p.reference_solution) cfg.reference_x = p.reference_solution;
  return cfg;
}

}  // namespace

SolverTrace aor_hb_composite(const CompositeProblem& problem, const Vector& x0, const Vector& y0,
                             const SolverConfig& config_in) {
  const char* name = "aor_hb_composite";
  check_problem(problem, x0, name);
  if (y0.size() != x0.size()) throw ConfigError("aor_hb_composite: y0 has wrong dimension");
  const SmoothOracle& f = *problem.f;
  const double mu = f.mu(), L = f.lipschitz();
  if (!(mu > 0)) throw ConfigError("aor_hb_composite requires f.mu > 0");
  const double alpha = config_in.alpha_override.value_or(std::sqrt(mu / L));
  const double lambda = alpha / ((1.0 + alpha) * mu);
  const SolverConfig config = with_reference(problem, config_in);
  // y is the solution sequence, so the recorder tracks y.
  TraceRecorder rec(name, config, y0, composite_objective(problem));

  const bool lyap = rec.has_reference();
  Vector g_star;
  if (lyap) g_star = f.gradient(rec.reference());
  auto& x_err = rec.trace().series["x_error"];
  auto emit = [&](long k, const Vector& x, const Vector& g, const Vector& y) {
    const std::size_t before = rec.trace().rows.size();
    if (lyap) {
      const double E = lyapunov_E(f, x, y, rec.reference());
      const double Ea = lyapunov_E_alpha(f, x, g, y, rec.reference(), g_star, alpha);
      rec.record(k, y, &x, E, Ea);
    } else {
      rec.record(k, y, &x);
    }
    if (rec.trace().rows.size() > before) x_err.push_back(rec.error(x));
  };

  Vector x = x0, y = y0;
  Vector g = f.gradient(x);
  long evals = 1;
  require_finite(g, name, 0);
  emit(0, x, g, y);
  long k = 0;
  double fp_residual = kMissing;
  for (; k < config.max_iters; ++k) {
    if (rec.should_stop(y, fp_residual)) break;
    Vector x_next = (x + alpha * y) / (1.0 + alpha);
    Vector g_next = f.gradient(x_next);
    ++evals;
    const Vector z = (y + alpha * x_next) / (1.0 + alpha) - lambda * (2.0 * g_next - g);
    Vector y_next = problem.g->prox(z, lambda);
    require_finite(x_next, name, k + 1);
    require_finite(y_next, name, k + 1);
    fp_residual = L * (y_next - y).norm();
    x = std::move(x_next);
    y = std::move(y_next);
    g = std::move(g_next);
    if (rec.due(k + 1)) emit(k + 1, x, g, y);
  }
  emit(k, x, g, y);
  auto trace = rec.finish(k, y, &x, evals);
  trace.alpha = alpha;
  trace.heuristic = !problem.g->convex();
  return trace;
}

SolverTrace proximal_gradient(const CompositeProblem& problem, const Vector& x0, const SolverConfig& config_in) {
  const char* name = "proximal_gradient";
  check_problem(problem, x0, name);
  const SmoothOracle& f = *problem.f;
  const double L = f.lipschitz();
  if (!(L > 0)) throw ConfigError("proximal_gradient requires L > 0");
  const SolverConfig config = with_reference(problem, config_in);
  TraceRecorder rec(name, config, x0, composite_objective(problem));
  Vector x = x0;
  long evals = 0;
  rec.record(0, x, nullptr);
  long k = 0;
  double fp_residual = kMissing;
  for (; k < config.max_iters; ++k) {
    if (rec.should_stop(x, fp_residual)) break;
    const Vector g = f.gradient(x);
    ++evals;
    Vector x_next = problem.g->prox(x - g / L, 1.0 / L);
    require_finite(x_next, name, k + 1);
    fp_residual = L * (x_next - x).norm();
    x = std::move(x_next);
    if (rec.due(k + 1)) rec.record(k + 1, x, nullptr);
  }
  rec.record(k, x, nullptr);
  auto trace = rec.finish(k, x, nullptr, evals);
  trace.heuristic = !problem.g->convex();
  return trace;
}

CompositeReference composite_reference(const CompositeProblem& problem, long max_iters, double tol) {
  if (!problem.f || !problem.g) throw ConfigError("composite_reference: problem needs f and g");
  const SmoothOracle& f = *problem.f;
  const double L = f.lipschitz();
  Vector x = Vector::Zero(f.dim());
  CompositeReference ref;
  for (long k = 0; k < max_iters; ++k) {
    Vector x_next = problem.g->prox(x - f.gradient(x) / L, 1.0 / L);
    require_finite(x_next, "composite_reference", k + 1);
    ref.residual = (x_next - x).norm();
    x = std::move(x_next);
    ref.iterations = k + 1;
    if (ref.residual <= tol) break;
  }
  ref.x = x;
  ref.objective = problem.objective(x);
  return ref;
}

}  // namespace aorhb
