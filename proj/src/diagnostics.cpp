#include "aorhb/diagnostics.hpp"

#include "aorhb/problems.hpp"

#include <cmath>
#include <sstream>

namespace aorhb {

double bregman(const SmoothOracle& oracle, const Vector& y, const Vector& x) { return oracle.bregman(y, x); }

double lyapunov_E(const SmoothOracle& oracle, const Vector& x, const Vector& y, const Vector& x_star) {
  if (!(oracle.mu() > 0)) throw ConfigError("lyapunov_E requires mu > 0");
  return oracle.bregman(x, x_star) + 0.5 * oracle.mu() * (y - x_star).squaredNorm();
}

namespace {

void check_integrity(double value, double E, double alpha, double alpha_max, const char* what) {
  if (alpha <= alpha_max * (1.0 + 1e-12) && value < -1e-12 * E) {
    std::ostringstream os;
    os << what << ": E^alpha = " << value << " < 0 with E = " << E << " and alpha = " << alpha;
    throw CertificateIntegrityError(os.str());
  }
}

}  // namespace

double lyapunov_E_alpha(const SmoothOracle& oracle, const Vector& x, const Vector& grad_x, const Vector& y,
                        const Vector& x_star, const Vector& grad_star, double alpha) {
  const double E = lyapunov_E(oracle, x, y, x_star);
  const double value = E + alpha * oracle.gradient_difference(x, x_star, grad_x, grad_star).dot(y - x_star);
  check_integrity(value, E, alpha, std::sqrt(oracle.mu() / oracle.lipschitz()), "lyapunov_E_alpha");
  return value;
}

double lyapunov_E_alpha(const SmoothOracle& oracle, const Vector& x, const Vector& y, const Vector& x_star,
                        double alpha) {
  return lyapunov_E_alpha(oracle, x, oracle.gradient(x), y, x_star, oracle.gradient(x_star), alpha);
}

double lyapunov_saddle_E(const SaddleProblem& problem, const SaddleState& s, const Vector& u_star,
                         const Vector& p_star) {
  const auto& f = problem.f();
  const auto& g = problem.g();
  return f.bregman(s.u, u_star) + g.bregman(s.p, p_star) + 0.5 * f.mu() * (s.v - u_star).squaredNorm() +
         0.5 * g.mu() * (s.q - p_star).squaredNorm();
}

double lyapunov_saddle(const SaddleProblem& problem, const SaddleState& s, const Vector& u_star,
                       const Vector& p_star, double alpha, bool include_Bsym) {
  const auto& f = problem.f();
  const auto& g = problem.g();
  const double E = lyapunov_saddle_E(problem, s, u_star, p_star);
  const Vector dv = s.v - u_star;
  const Vector dq = s.q - p_star;
  const Vector du = f.gradient_difference(s.u, u_star, f.gradient(s.u), f.gradient(u_star));
  const Vector dp = g.gradient_difference(s.p, p_star, g.gradient(s.p), g.gradient(p_star));
  double value = E + alpha * (du.dot(dv) + dp.dot(dq));
  if (include_Bsym) value -= alpha * dq.dot(problem.B() * dv);
  const double alpha_max = std::min(std::sqrt(f.mu() / f.lipschitz()), std::sqrt(g.mu() / g.lipschitz()));
  check_integrity(value, E, alpha, alpha_max, "lyapunov_saddle");
  return value;
}

// ---------------------------------------------------------------------------

double strong_lyapunov_margin(const SmoothOracle& oracle, const Vector& x, const Vector& y,
                              const Vector& x_star) {
  const double mu = oracle.mu();
  const Vector gx = oracle.gradient(x);
  const Vector gs = oracle.gradient(x_star);
  const Vector Gx = y - x;
  const Vector Gy = x - y - gx / mu;
  const double lhs = -((gx - gs).dot(Gx) + mu * (y - x_star).dot(Gy));
  return lhs - lyapunov_E(oracle, x, y, x_star) - 0.5 * mu * (x - y).squaredNorm();
}

double strong_lyapunov_margin_composite(const SmoothOracle& f, const Vector& x, const Vector& y,
                                        const Vector& xi, const Vector& x_star) {
  const double mu = f.mu();
  const Vector gx = f.gradient(x);
  const Vector gs = f.gradient(x_star);
  const Vector Gx = y - x;
  const Vector Gy = x - y - (gx + xi) / mu;
  const double lhs = -((gx - gs).dot(Gx) + mu * (y - x_star).dot(Gy));
  return lhs - lyapunov_E(f, x, y, x_star) - 0.5 * mu * (x - y).squaredNorm();
}

double strong_lyapunov_margin_saddle(const SaddleProblem& problem, const SaddleState& s, const Vector& u_star,
                                     const Vector& p_star) {
  const auto& f = problem.f();
  const auto& g = problem.g();
  const Matrix& B = problem.B();
  const double mf = f.mu(), mg = g.mu();
  const Vector gu = f.gradient(s.u), gp = g.gradient(s.p);
  const Vector Gu = s.v - s.u;
  const Vector Gv = s.u - s.v - (gu + B.transpose() * s.q) / mf;
  const Vector Gp = s.q - s.p;
  const Vector Gq = s.p - s.q - (gp - B * s.v) / mg;
  const double lhs = -((gu - f.gradient(u_star)).dot(Gu) + mf * (s.v - u_star).dot(Gv) +
                       (gp - g.gradient(p_star)).dot(Gp) + mg * (s.q - p_star).dot(Gq));
  return lhs - lyapunov_saddle_E(problem, s, u_star, p_star) - 0.5 * mf * (s.v - s.u).squaredNorm() -
         0.5 * mg * (s.q - s.p).squaredNorm();
}

// ---------------------------------------------------------------------------

double fitted_rate(const std::vector<double>& values) {
  const std::size_t start = values.size() / 10;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (std::size_t i = start; i < values.size(); ++i) {
    if (!(values[i] > 0) || !std::isfinite(values[i])) continue;
    const double x = static_cast<double>(i), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  if (n < 2) return kMissing;
  const double denom = n * sxx - sx * sx;
  return denom > 0 ? std::exp((n * sxy - sx * sy) / denom) : kMissing;
}

RateCertificate certify_sequence(const std::vector<double>& values, double bound, double slack) {
  if (values.size() < 2) throw ConfigError("certify_decay: need at least 2 Lyapunov records");
  RateCertificate cert;
  cert.theoretical_bound = bound;
  cert.slack = slack;
  cert.worst_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    const double a = values[k], b = values[k + 1];
    if (std::isnan(a) || std::isnan(b)) throw ConfigError("certify_decay: missing Lyapunov value");
    if (a == 0.0) {
      // Exactly at the optimum: nothing left to certify.
      if (b != 0.0) cert.violations.emplace_back(static_cast<long>(k), std::numeric_limits<double>::infinity());
      continue;
    }
    const double ratio = b / a;
    cert.ratios.push_back(ratio);
    cert.worst_ratio = std::max(cert.worst_ratio, ratio);
    if (b > bound * a + slack * std::abs(a)) cert.violations.emplace_back(static_cast<long>(k), ratio);
  }
  cert.fitted_rate = fitted_rate(values);
  return cert;
}

RateCertificate certify_decay(const SolverTrace& trace, double bound, double slack) {
  std::vector<double> values;
  values.reserve(trace.rows.size());
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    if (i > 0 && trace.rows[i].k != trace.rows[i - 1].k + 1)
      throw ConfigError("certify_decay: trace must be recorded at every iteration (record_every = 1)");
    values.push_back(trace.rows[i].Ealpha);
  }
  RateCertificate cert = certify_sequence(values, bound, slack);
  // Report violations by iteration index rather than row position.
  for (auto& [k, r] : cert.violations) k = trace.rows[static_cast<std::size_t>(k)].k;
  return cert;
}

RateCertificate certify_decay_above(const SolverTrace& trace, double bound, double rel_floor, double slack) {
  if (trace.rows.empty()) throw ConfigError("certify_decay: empty trace");
  const double floor = rel_floor * std::abs(trace.rows.front().Ealpha);
  SolverTrace head;
  head.rows.push_back(trace.rows.front());
  for (std::size_t i = 1; i < trace.rows.size() && trace.rows[i - 1].Ealpha > floor; ++i)
    head.rows.push_back(trace.rows[i]);
  return certify_decay(head, bound, slack);
}

double fit_iteration_scaling(const std::vector<std::pair<double, double>>& sweep) {
  if (sweep.size() < 2) throw ConfigError("fit_iteration_scaling: need at least 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto [kappa, iters] = sweep[i];
    if (!(iters > 0)) throw ConfigError("fit_iteration_scaling: iteration counts must be positive");
    if (!(kappa > 0)) throw ConfigError("fit_iteration_scaling: kappa must be positive");
    if (i > 0 && !(kappa > sweep[i - 1].first))
      throw ConfigError("fit_iteration_scaling: kappa must be strictly increasing");
    const double x = std::log(kappa), y = std::log(iters);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(sweep.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace aorhb
