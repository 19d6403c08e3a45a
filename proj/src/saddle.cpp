#include "aorhb/saddle.hpp"

#include "recorder.hpp"

#include <cmath>
#include <limits>

namespace aorhb {

using detail::TraceRecorder;

SaddleStepSize saddle_step_size(double mu_f, double L_f, double mu_g, double L_g, double B_norm) {
  if (!(mu_f > 0 && mu_g > 0 && L_f >= mu_f && L_g >= mu_g))
    throw ConfigError("saddle_step_size: need 0 < mu <= L for both blocks");
  if (!(B_norm >= 0)) throw ConfigError("saddle_step_size: |B| must be nonnegative");
  SaddleStepSize s;
  s.components.f_bound = std::sqrt(mu_f / L_f);
  s.components.g_bound = std::sqrt(mu_g / L_g);
  s.components.coupling_bound =
      B_norm > 0 ? std::sqrt(mu_f * mu_g) / B_norm : std::numeric_limits<double>::infinity();
  const double m = std::min(s.components.f_bound, s.components.g_bound);
  const double c = s.components.coupling_bound;
  if (std::isinf(c)) {
    s.beta_star = 1.0;
    s.alpha = m;
  } else {
    // c r^2 + m r - c = 0 for r = sqrt(beta); the rationalised root avoids cancellation.
    const double r = 2.0 * c / (m + std::sqrt(m * m + 4.0 * c * c));
    s.beta_star = r * r;
    s.alpha = r * m;
  }
  s.alpha_simple = (std::sqrt(2.0) - 1.0) * std::min(m, c);
  return s;
}

double saddle_implicit_alpha(const SaddleProblem& problem) {
  return std::min(std::sqrt(problem.f().mu() / problem.f().lipschitz()),
                  std::sqrt(problem.g().mu() / problem.g().lipschitz()));
}

SaddleState saddle_state_from(const Vector& u, const Vector& p) { return {u, u, p, p}; }

namespace {

void check_state(const SaddleProblem& pr, const SaddleState& s, const char* who) {
  if (s.u.size() != pr.m() || s.v.size() != pr.m() || s.p.size() != pr.n() || s.q.size() != pr.n())
    throw ConfigError(std::string(who) + ": state dimensions do not match the problem");
}

Vector concat(const Vector& a, const Vector& b) {
  Vector z(a.size() + b.size());
  z << a, b;
  return z;
}

// Lyapunov bookkeeping with gradients supplied by the solver loop.
struct SaddleEnergy {
  const SaddleProblem& pr;
  Vector u_star, p_star, gu_star, gp_star;
  double alpha;
  bool include_Bsym;

  SaddleEnergy(const SaddleProblem& problem, const Vector& ref, double a, bool bsym)
      : pr(problem), alpha(a), include_Bsym(bsym) {
    u_star = ref.head(pr.m());
    p_star = ref.tail(pr.n());
    gu_star = pr.f().gradient(u_star);
    gp_star = pr.g().gradient(p_star);
  }

  std::pair<double, double> operator()(const SaddleState& s, const Vector& gu, const Vector& gp) const {
    const Vector dv = s.v - u_star, dq = s.q - p_star;
    const double E = pr.f().bregman(s.u, u_star) + pr.g().bregman(s.p, p_star) +
                     0.5 * pr.f().mu() * dv.squaredNorm() + 0.5 * pr.g().mu() * dq.squaredNorm();
    double Ea = E + alpha * (pr.f().gradient_difference(s.u, u_star, gu, gu_star).dot(dv) +
                             pr.g().gradient_difference(s.p, p_star, gp, gp_star).dot(dq));
    if (include_Bsym) Ea -= alpha * dq.dot(pr.B() * dv);
    return {E, Ea};
  }
};

double operator_norm(const SaddleProblem& pr, const SaddleState& s, const Vector& gu, const Vector& gp) {
  return std::sqrt((gu + pr.B().transpose() * s.p).squaredNorm() + (gp - pr.B() * s.u).squaredNorm());
}

// Shared driver: `step` advances (s, gu, gp) by one iteration.
template <class Step>
SolverTrace run_saddle(const char* name, const SaddleProblem& pr, const SaddleState& s0, const SolverConfig& config,
                       double alpha, bool include_Bsym, Step&& step) {
  check_state(pr, s0, name);
  TraceRecorder rec(name, config, concat(s0.u, s0.p), {});
  std::optional<SaddleEnergy> energy;
  if (rec.has_reference()) energy.emplace(pr, rec.reference(), alpha, include_Bsym);

  SaddleState s = s0;
  Vector gu = pr.f().gradient(s.u), gp = pr.g().gradient(s.p);
  long evals = 2;
  auto emit = [&](long k) {
    const Vector x = concat(s.u, s.p), y = concat(s.v, s.q);
    if (energy) {
      auto [E, Ea] = (*energy)(s, gu, gp);
      rec.record(k, x, &y, E, Ea);
    } else {
      rec.record(k, x, &y);
    }
  };
  emit(0);
  long k = 0;
  for (; k < config.max_iters; ++k) {
    const double gnorm = config.grad_tolerance > 0 ? operator_norm(pr, s, gu, gp) : kMissing;
    if (rec.should_stop(concat(s.u, s.p), gnorm)) break;
    step(s, gu, gp, k);
    evals += 2;
    require_finite(s.u, name, k + 1);
    require_finite(s.v, name, k + 1);
    require_finite(s.p, name, k + 1);
    require_finite(s.q, name, k + 1);
    if (rec.due(k + 1)) emit(k + 1);
  }
  emit(k);
  const Vector y = concat(s.v, s.q);
  auto trace = rec.finish(k, concat(s.u, s.p), &y, evals);
  trace.alpha = alpha;
  return trace;
}

}  // namespace

SolverTrace aor_hb_saddle(const SaddleProblem& pr, const SaddleState& s0, const SolverConfig& config) {
  const double alpha =
      config.alpha_override.value_or(saddle_step_size(pr.f().mu(), pr.f().lipschitz(), pr.g().mu(),
                                                      pr.g().lipschitz(), pr.B_norm())
                                         .alpha);
  const double mf = pr.f().mu(), mg = pr.g().mu();
  const Matrix& B = pr.B();
  return run_saddle("aor_hb_saddle", pr, s0, config, alpha, true,
                    [&](SaddleState& s, Vector& gu, Vector& gp, long) {
                      const Vector u1 = (s.u + alpha * s.v) / (1.0 + alpha);
                      const Vector p1 = (s.p + alpha * s.q) / (1.0 + alpha);
                      Vector gu1 = pr.f().gradient(u1);
                      Vector gp1 = pr.g().gradient(p1);
                      const Vector v1 =
                          (s.v + alpha * u1 - (alpha / mf) * (2.0 * gu1 - gu + B.transpose() * s.q)) / (1.0 + alpha);
                      const Vector q1 =
                          (s.q + alpha * p1 - (alpha / mg) * (2.0 * gp1 - gp - B * (2.0 * v1 - s.v))) / (1.0 + alpha);
                      s = {u1, v1, p1, q1};
                      gu = std::move(gu1);
                      gp = std::move(gp1);
                    });
}

SolverTrace aor_hb_saddle_euler_form(const SaddleProblem& pr, const SaddleState& s0, const SolverConfig& config) {
  const double alpha =
      config.alpha_override.value_or(saddle_step_size(pr.f().mu(), pr.f().lipschitz(), pr.g().mu(),
                                                      pr.g().lipschitz(), pr.B_norm())
                                         .alpha);
  const double mf = pr.f().mu(), mg = pr.g().mu();
  const Matrix& B = pr.B();
  // (w_{k+1} - w_k)/alpha = rhs - w_{k+1}  =>  w_{k+1} = w_k + alpha/(1+alpha) (rhs - w_k).
  const double h = alpha / (1.0 + alpha);
  return run_saddle("aor_hb_saddle_euler_form", pr, s0, config, alpha, true,
                    [&](SaddleState& s, Vector& gu, Vector& gp, long) {
                      const Vector u1 = s.u + h * (s.v - s.u);
                      const Vector p1 = s.p + h * (s.q - s.p);
                      Vector gu1 = pr.f().gradient(u1);
                      Vector gp1 = pr.g().gradient(p1);
                      const Vector v1 = s.v + h * (u1 - s.v - (2.0 * gu1 - gu + B.transpose() * s.q) / mf);
                      const Vector q1 = s.q + h * (p1 - s.q - (2.0 * gp1 - gp - B * (2.0 * v1 - s.v)) / mg);
                      s = {u1, v1, p1, q1};
                      gu = std::move(gu1);
                      gp = std::move(gp1);
                    });
}

// ---------------------------------------------------------------------------

ImplicitSolveCache::ImplicitSolveCache(const SaddleProblem& problem, double alpha, InnerSolver inner,
                                       double cg_tol)
    : alpha_(alpha), mu_f_(problem.f().mu()), mu_g_(problem.g().mu()), inner_(inner), cg_tol_(cg_tol) {
  if (!(alpha > 0)) throw ConfigError("implicit cache: alpha must be positive");
  const Matrix& B = problem.B();
  side_ = problem.n() <= problem.m() ? 'n' : 'm';
  const Matrix G = side_ == 'n' ? Matrix(B * B.transpose()) : Matrix(B.transpose() * B);
  const double a = alpha;
  schur_ = (a * a / (mu_f_ * mu_g_)) * G;
  schur_.diagonal().array() += (1.0 + a) * (1.0 + a);
  llt_.compute(schur_);
  if (llt_.info() != Eigen::Success) throw ConstructionError("implicit cache: Schur matrix factorisation failed");
}

Vector ImplicitSolveCache::schur_solve(const Vector& rhs) const {
  if (inner_ == InnerSolver::cholesky) return llt_.solve(rhs);
  // Conjugate gradients on the SPD Schur matrix.
  Vector x = Vector::Zero(rhs.size());
  Vector r = rhs, p = r;
  double rr = r.squaredNorm();
  const double stop = cg_tol_ * cg_tol_ * rhs.squaredNorm();
  for (Index it = 0; it < 10 * rhs.size() + 100 && rr > stop; ++it) {
    const Vector Ap = schur_ * p;
    const double a = rr / p.dot(Ap);
    x += a * p;
    r -= a * Ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

void ImplicitSolveCache::solve(const SaddleProblem& problem, const Vector& r_v, const Vector& r_q, Vector& v,
                               Vector& q, double& residual) const {
  // (1+a) v + (a/mu_f) B^T q = r_v
  // (1+a) q - (a/mu_g) B v   = r_q
  const Matrix& B = problem.B();
  const double a = alpha_, c = 1.0 + a;
  auto direct = [&](const Vector& rv, const Vector& rq, Vector& vo, Vector& qo) {
    if (side_ == 'n') {
      qo = schur_solve(c * rq + (a / mu_g_) * (B * rv));
      vo = (rv - (a / mu_f_) * (B.transpose() * qo)) / c;
    } else {
      vo = schur_solve(c * rv - (a / mu_f_) * (B.transpose() * rq));
      qo = (rq + (a / mu_g_) * (B * vo)) / c;
    }
  };
  auto block_residual = [&](const Vector& vo, const Vector& qo, Vector& ev, Vector& eq) {
    ev = r_v - (c * vo + (a / mu_f_) * (B.transpose() * qo));
    eq = r_q - (c * qo - (a / mu_g_) * (B * vo));
  };
  direct(r_v, r_q, v, q);
  const double scale = std::sqrt(r_v.squaredNorm() + r_q.squaredNorm());
  Vector ev, eq;
  block_residual(v, q, ev, eq);
  residual = std::sqrt(ev.squaredNorm() + eq.squaredNorm()) / (scale > 0 ? scale : 1.0);
  if (residual > 0.1 * kImplicitResidualTolerance) {
    Vector dv, dq;
    direct(ev, eq, dv, dq);
    v += dv;
    q += dq;
    block_residual(v, q, ev, eq);
    residual = std::sqrt(ev.squaredNorm() + eq.squaredNorm()) / (scale > 0 ? scale : 1.0);
  }
}

SolverTrace aor_hb_saddle_implicit(const SaddleProblem& pr, const SaddleState& s0, const SolverConfig& config,
                                   const ImplicitSolveCache& cache) {
  const double alpha = config.alpha_override.value_or(saddle_implicit_alpha(pr));
  if (std::abs(cache.alpha() - alpha) > 1e-14 * alpha)
    throw ConfigError("aor_hb_saddle_implicit: cache was built for a different alpha");
  const double mf = pr.f().mu(), mg = pr.g().mu();
  double worst = 0.0;
  auto trace = run_saddle("aor_hb_saddle_implicit", pr, s0, config, alpha, false,
                          [&](SaddleState& s, Vector& gu, Vector& gp, long k) {
                            const Vector u1 = (s.u + alpha * s.v) / (1.0 + alpha);
                            const Vector p1 = (s.p + alpha * s.q) / (1.0 + alpha);
                            Vector gu1 = pr.f().gradient(u1);
                            Vector gp1 = pr.g().gradient(p1);
                            const Vector r_v = s.v + alpha * u1 - (alpha / mf) * (2.0 * gu1 - gu);
                            const Vector r_q = s.q + alpha * p1 - (alpha / mg) * (2.0 * gp1 - gp);
                            Vector v1, q1;
                            double res = 0.0;
                            cache.solve(pr, r_v, r_q, v1, q1, res);
                            if (!(res <= kImplicitResidualTolerance))
                              throw SolveError("aor_hb_saddle_implicit: block solve at iteration " +
                                                   std::to_string(k + 1),
                                               res);
                            worst = std::max(worst, res);
                            s = {u1, v1, p1, q1};
                            gu = std::move(gu1);
                            gp = std::move(gp1);
                          });
  trace.series["max_block_residual"] = {worst};
  return trace;
}

SolverTrace aor_hb_saddle_implicit(const SaddleProblem& pr, const SaddleState& s0, const SolverConfig& config) {
  const double alpha = config.alpha_override.value_or(saddle_implicit_alpha(pr));
  const ImplicitSolveCache cache(pr, alpha);
  return aor_hb_saddle_implicit(pr, s0, config, cache);
}

// ---------------------------------------------------------------------------

SolverTrace extragradient(const SaddleProblem& pr, const Vector& z0, const SolverConfig& config,
                          ExtragradientOptions options) {
  const char* name = "extragradient";
  const Index m = pr.m(), n = pr.n();
  if (z0.size() != m + n) throw ConfigError("extragradient: z0 must have length m + n");
  if (!(options.c > 0)) throw ConfigError("extragradient: c must be positive");
  const double LA = std::max(pr.f().lipschitz(), pr.g().lipschitz()) + pr.B_norm();
  const double eta = options.c / LA;
  TraceRecorder rec(name, config, z0, {});
  Vector z = z0;
  Vector F = pr.monotone_operator(z.head(m), z.tail(n));
  Vector F_prev = F;
  long evals = 2;
  rec.record(0, z, nullptr);
  long k = 0;
  for (; k < config.max_iters; ++k) {
    if (!F.allFinite()) {
      rec.mark_diverged(k);
      break;
    }
    if (rec.should_stop(z, F.norm())) break;
    Vector z_next = z - eta * (2.0 * F - F_prev);
    if (!z_next.allFinite()) {
      rec.mark_diverged(k + 1);
      break;
    }
    z = std::move(z_next);
    F_prev = std::move(F);
    F = pr.monotone_operator(z.head(m), z.tail(n));
    evals += 2;
    if (rec.due(k + 1)) rec.record(k + 1, z, nullptr);
  }
  rec.record(k, z, nullptr);
  auto trace = rec.finish(k, z, nullptr, evals);
  trace.alpha = eta;
  return trace;
}

}  // namespace aorhb
