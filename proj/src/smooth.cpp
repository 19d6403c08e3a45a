#include "aorhb/smooth.hpp"

#include "aorhb/diagnostics.hpp"
#include "recorder.hpp"

#include <cmath>

namespace aorhb {

using detail::TraceRecorder;

void SolverConfig::validate() const {
  if (max_iters < 0) throw ConfigError("max_iters must be nonnegative");
  if (record_every < 1) throw ConfigError("record_every must be >= 1");
  if (!(grad_tolerance >= 0) || !(rel_error_tolerance >= 0)) throw ConfigError("tolerances must be >= 0");
  if (alpha_override && !(*alpha_override > 0)) throw ConfigError("alpha_override must be positive");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::max_iters: return "max_iters";
    case StopReason::grad_tolerance: return "grad_tolerance";
    case StopReason::rel_error_tolerance: return "rel_error_tolerance";
    case StopReason::diverged: return "diverged";
  }
  return "unknown";
}

double SolverTrace::relative_error() const {
  if (rows.empty() || std::isnan(rows.front().error)) return kMissing;
  const double e0 = rows.front().error;
  return e0 > 0 ? rows.back().error / e0 : rows.back().error;
}

long SolverTrace::iterations_to(double tol) const {
  if (rows.empty() || std::isnan(rows.front().error)) return -1;
  const double e0 = rows.front().error;
  for (const auto& r : rows)
    if (r.error <= tol * e0) return r.k;
  return -1;
}

AorHbParams aor_hb_params(double mu, double L, std::optional<double> alpha) {
  if (!(mu > 0)) throw ConfigError("aor_hb requires mu > 0; use aor_hb_zero for mu = 0");
  if (!(L >= mu)) throw ConfigError("aor_hb requires L >= mu");
  if (alpha) {
    const double a = *alpha;
    return {a * a / (mu * (1 + a) * (1 + a)), 1.0 / ((1 + a) * (1 + a))};
  }
  const double s = std::sqrt(L) + std::sqrt(mu);
  return {1.0 / (s * s), L / (s * s)};
}

PolyakParams polyak_params(double mu, double L) {
  if (!(mu > 0) || !(L >= mu)) throw ConfigError("heavy ball requires 0 < mu <= L");
  const double sl = std::sqrt(L), sm = std::sqrt(mu);
  const double r = (sl - sm) / (sl + sm);
  return {4.0 / ((sl + sm) * (sl + sm)), r * r};
}

namespace {

void check_dim(const SmoothOracle& f, const Vector& x, const char* who) {
  if (x.size() != f.dim()) throw ConfigError(std::string(who) + ": starting point has wrong dimension");
}

}  // namespace

// ---------------------------------------------------------------------------

SolverTrace aor_hb(const SmoothOracle& oracle, const Vector& x0, const std::optional<Vector>& x1,
                   const SolverConfig& config) {
  const char* name = "aor_hb";
  check_dim(oracle, x0, name);
  if (x1) check_dim(oracle, *x1, name);
  const AorHbParams prm = aor_hb_params(oracle.mu(), oracle.lipschitz(), config.alpha_override);
  TraceRecorder rec(name, config, x0, detail::value_fn(oracle));

  Vector x_prev = x0;
  Vector g_prev = oracle.gradient(x0);
  long evals = 1;
  Vector x = x1 ? *x1 : x0;
  Vector g = x1 ? oracle.gradient(x) : g_prev;
  if (x1) ++evals;
  require_finite(g, name, 0);

  rec.record(0, x0, nullptr);
  long k = 1;
  if (x1) {
    if (rec.due(1)) rec.record(1, x, nullptr);
  } else {
    k = 0;  // x1 = x0 is the same point; count iterations from x0.
  }
  long iters = 0;
  // With x1 = x0 the first step uses 2 grad f(x0) - grad f(x0) = grad f(x0).
  for (; iters < config.max_iters; ++iters) {
    if (rec.should_stop(x, g.norm())) break;
    Vector x_next = x - prm.gamma * (2.0 * g - g_prev) + prm.beta * (x - x_prev);
    ++k;
    require_finite(x_next, name, k);
    x_prev = std::move(x);
    x = std::move(x_next);
    g_prev = std::move(g);
    g = oracle.gradient(x);
    ++evals;
    if (rec.due(k)) rec.record(k, x, nullptr);
  }
  rec.record(k, x, nullptr);
  auto trace = rec.finish(iters, x, nullptr, evals);
  trace.alpha = config.alpha_override.value_or(std::sqrt(oracle.mu() / oracle.lipschitz()));
  return trace;
}

SolverTrace aor_hb_two_var(const SmoothOracle& oracle, const Vector& x0, const Vector& y0,
                           const SolverConfig& config) {
  const char* name = "aor_hb_two_var";
  check_dim(oracle, x0, name);
  check_dim(oracle, y0, name);
  const double mu = oracle.mu();
  if (!(mu > 0)) throw ConfigError("aor_hb_two_var requires mu > 0; use aor_hb_zero for mu = 0");
  const double alpha = config.alpha_override.value_or(std::sqrt(mu / oracle.lipschitz()));
  TraceRecorder rec(name, config, x0, detail::value_fn(oracle));

  const bool lyap = rec.has_reference();
  Vector g_star;
  if (lyap) g_star = oracle.gradient(rec.reference());
  auto emit = [&](long k, const Vector& x, const Vector& g, const Vector& y) {
    if (lyap) {
      const double E = lyapunov_E(oracle, x, y, rec.reference());
      const double Ea = lyapunov_E_alpha(oracle, x, g, y, rec.reference(), g_star, alpha);
      rec.record(k, x, &y, E, Ea);
    } else {
      rec.record(k, x, &y);
    }
  };

  Vector x = x0, y = y0;
  Vector g = oracle.gradient(x);
  long evals = 1;
  require_finite(g, name, 0);
  emit(0, x, g, y);
  long k = 0;
  for (; k < config.max_iters; ++k) {
    if (rec.should_stop(x, g.norm())) break;
    Vector x_next = (x + alpha * y) / (1.0 + alpha);
    Vector g_next = oracle.gradient(x_next);
    ++evals;
    Vector y_next = (y + alpha * x_next - (alpha / mu) * (2.0 * g_next - g)) / (1.0 + alpha);
    require_finite(x_next, name, k + 1);
    require_finite(y_next, name, k + 1);
    x = std::move(x_next);
    y = std::move(y_next);
    g = std::move(g_next);
    if (rec.due(k + 1)) emit(k + 1, x, g, y);
  }
  emit(k, x, g, y);
  auto trace = rec.finish(k, x, &y, evals);
  trace.alpha = alpha;
  return trace;
}

double aor_hb_zero_initial_energy(const SmoothOracle& oracle, const Vector& x0, const Vector& x_star,
                                  double f_star) {
  const double L = oracle.lipschitz();
  const Vector v0 = x0 + oracle.gradient(x0) / (2.0 * L);
  return oracle.value(x0) - f_star + L * (v0 - x_star).squaredNorm();
}

SolverTrace aor_hb_zero(const SmoothOracle& oracle, const Vector& x0, const SolverConfig& config) {
  const char* name = "aor_hb_zero";
  check_dim(oracle, x0, name);
  const double L = oracle.lipschitz();
  if (!(L > 0)) throw ConfigError("aor_hb_zero requires L > 0");
  TraceRecorder rec(name, config, x0, detail::value_fn(oracle));

  // Shadow variables of the two-variable form: with x_1 = x_0 the first
  // step forces y_1 = x_0 - grad f(x_0) / (2L).
  double f_star = kMissing;
  if (config.reference_f)
    f_star = *config.reference_f;
  else if (rec.has_reference())
    f_star = oracle.value(rec.reference());
  const bool lyap = rec.has_reference() && !std::isnan(f_star);

  auto& gt_series = rec.trace().series["gamma_tilde"];
  auto emit = [&](long k, const Vector& x, const Vector& g, const Vector& y) {
    // Row 0 duplicates row 1 since (x_1, v_1, gamma~_1) = (x_0, v_0, gamma~_0).
    const double kk = static_cast<double>(std::max(k, 1L));
    const double a = 2.0 / (kk + 1.0);
    const double gamma_tilde = (kk + 1.0) / kk * a * a * L;
    const double beta = 1.0 / (a * L);
    const Vector v = y + beta * g;
    double E = kMissing;
    if (lyap) E = oracle.value(x) - f_star + 0.5 * gamma_tilde * (v - rec.reference()).squaredNorm();
    const std::size_t before = rec.trace().rows.size();
    rec.record(k, x, &v, E);
    if (rec.trace().rows.size() > before) gt_series.push_back(gamma_tilde);
  };

  Vector x_prev = x0, x = x0;
  Vector g = oracle.gradient(x0);
  Vector g_prev = g;
  long evals = 1;
  require_finite(g, name, 0);
  Vector y = x0 - g / (2.0 * L);
  emit(0, x, g, y);

  long k = 0;  // iterations performed; x holds x_{idx}, with x_1 = x_0
  long idx = 1;  // index of the current iterate x
  if (config.max_iters > 0 && rec.due(1)) emit(1, x, g, y);
  for (; k < config.max_iters; ++k) {
    if (rec.should_stop(x, g.norm())) break;
    const double c = static_cast<double>(idx) / (idx + 3.0);
    Vector x_next = x - c / L * (2.0 * g - g_prev) + c * (x - x_prev);
    require_finite(x_next, name, idx + 1);
    Vector g_next = oracle.gradient(x_next);
    ++evals;
    const double a = 2.0 / (idx + 1.0);
    y -= (2.0 * g_next - g) / (a * L);
    x_prev = std::move(x);
    x = std::move(x_next);
    g_prev = std::move(g);
    g = std::move(g_next);
    ++idx;
    if (rec.due(idx)) emit(idx, x, g, y);
  }
  emit(idx, x, g, y);
  auto trace = rec.finish(k, x, nullptr, evals);
  return trace;
}

SolverTrace gradient_descent(const SmoothOracle& oracle, const Vector& x0, const SolverConfig& config) {
  const char* name = "gd";
  check_dim(oracle, x0, name);
  const double L = oracle.lipschitz();
  if (!(L > 0)) throw ConfigError("gradient_descent requires L > 0");
  TraceRecorder rec(name, config, x0, detail::value_fn(oracle));
  Vector x = x0;
  long evals = 0;
  rec.record(0, x, nullptr);
  long k = 0;
  for (; k < config.max_iters; ++k) {
    const Vector g = oracle.gradient(x);
    ++evals;
    require_finite(g, name, k);
    if (rec.should_stop(x, g.norm())) break;
    x -= g / L;
    require_finite(x, name, k + 1);
    if (rec.due(k + 1)) rec.record(k + 1, x, nullptr);
  }
  rec.record(k, x, nullptr);
  return rec.finish(k, x, nullptr, evals);
}

SolverTrace heavy_ball_polyak(const SmoothOracle& oracle, const Vector& x0, const std::optional<Vector>& x1,
                              const SolverConfig& config) {
  const char* name = "hb";
  check_dim(oracle, x0, name);
  if (x1) check_dim(oracle, *x1, name);
  const PolyakParams prm = polyak_params(oracle.mu(), oracle.lipschitz());
  TraceRecorder rec(name, config, x0, detail::value_fn(oracle));
  Vector x_prev = x0;
  Vector x = x1 ? *x1 : x0;
  long evals = 0;
  rec.record(0, x0, nullptr);
  long k = x1 ? 1 : 0;
  if (x1 && rec.due(1)) rec.record(1, x, nullptr);
  long iters = 0;
  for (; iters < config.max_iters; ++iters) {
    const Vector g = oracle.gradient(x);
    ++evals;
    if (!g.allFinite()) {
      rec.mark_diverged(k);
      break;
    }
    if (rec.should_stop(x, g.norm())) break;
    Vector x_next = x - prm.gamma * g + prm.beta * (x - x_prev);
    if (!x_next.allFinite()) {
      rec.mark_diverged(k + 1);
      break;
    }
    x_prev = std::move(x);
    x = std::move(x_next);
    ++k;
    if (rec.due(k)) rec.record(k, x, nullptr);
  }
  rec.record(k, x, nullptr);
  return rec.finish(iters, x, nullptr, evals);
}

SolverTrace nag(const SmoothOracle& oracle, const Vector& x0, const std::optional<Vector>& x1,
                const SolverConfig& config) {
  const char* name = "nag";
  check_dim(oracle, x0, name);
  if (x1) check_dim(oracle, *x1, name);
  const double mu = oracle.mu(), L = oracle.lipschitz();
  if (!(mu > 0) || !(L >= mu)) throw ConfigError("nag requires 0 < mu <= L");
  const double beta = (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu));
  TraceRecorder rec(name, config, x0, detail::value_fn(oracle));
  Vector x_prev = x0;
  Vector x = x1 ? *x1 : x0;
  long evals = 0;
  rec.record(0, x0, nullptr);
  long k = x1 ? 1 : 0;
  if (x1 && rec.due(1)) rec.record(1, x, nullptr);
  double look_ahead_grad = kMissing;
  long iters = 0;
  for (; iters < config.max_iters; ++iters) {
    // The only gradient is taken at the look-ahead point, so the gradient
    // stopping test uses the previous look-ahead gradient.
    if (rec.should_stop(x, look_ahead_grad)) break;
    const Vector z = x + beta * (x - x_prev);
    const Vector g = oracle.gradient(z);
    ++evals;
    look_ahead_grad = g.norm();
    Vector x_next = z - g / L;
    require_finite(x_next, name, k + 1);
    x_prev = std::move(x);
    x = std::move(x_next);
    ++k;
    if (rec.due(k)) rec.record(k, x, nullptr);
  }
  rec.record(k, x, nullptr);
  return rec.finish(iters, x, nullptr, evals);
}

}  // namespace aorhb
