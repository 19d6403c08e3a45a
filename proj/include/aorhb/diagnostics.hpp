#pragma once

// Bregman divergences, Lyapunov functions for the smooth / composite / saddle
// settings, per-step decay certificates and empirical rate fits.

#include "aorhb/core.hpp"
#include "aorhb/smooth.hpp"

#include <utility>
#include <vector>

namespace aorhb {

class SaddleProblem;

/// f(y) - f(x) - <grad f(x), y - x>, via the oracle's (possibly closed-form) override.
double bregman(const SmoothOracle& oracle, const Vector& y, const Vector& x);

/// D_f(x, x*) + mu/2 |y - x*|^2.
double lyapunov_E(const SmoothOracle& oracle, const Vector& x, const Vector& y, const Vector& x_star);

/// E + alpha <grad f(x) - grad f(x*), y - x*>. Throws CertificateIntegrityError
/// if the result is below -1e-12 E while alpha <= sqrt(mu/L).
double lyapunov_E_alpha(const SmoothOracle& oracle, const Vector& x, const Vector& y,
                        const Vector& x_star, double alpha);

/// Same, reusing gradients the caller already has.
double lyapunov_E_alpha(const SmoothOracle& oracle, const Vector& x, const Vector& grad_x,
                        const Vector& y, const Vector& x_star, const Vector& grad_star, double alpha);

struct SaddleState {
  Vector u, v, p, q;
};

/// E = D_f(u,u*) + D_g(p,p*) + mu_f/2 |v-u*|^2 + mu_g/2 |q-p*|^2 plus
/// alpha <grad F(x) - grad F(x*), y - x*>; with include_Bsym the coupling term
/// -alpha <B(v-u*), q-p*> is added (the explicit scheme's energy).
double lyapunov_saddle(const SaddleProblem& problem, const SaddleState& s, const Vector& u_star,
                       const Vector& p_star, double alpha, bool include_Bsym);

/// The alpha = 0 part of lyapunov_saddle.
double lyapunov_saddle_E(const SaddleProblem& problem, const SaddleState& s, const Vector& u_star,
                         const Vector& p_star);

// Strong Lyapunov property: returns lhs - rhs of -<grad E, G> >= E + extra,
// so a nonnegative value means the inequality holds at the point.

double strong_lyapunov_margin(const SmoothOracle& oracle, const Vector& x, const Vector& y,
                              const Vector& x_star);

/// xi is a subgradient of g at y, xi_star = -grad f(x*).
double strong_lyapunov_margin_composite(const SmoothOracle& f, const Vector& x, const Vector& y,
                                        const Vector& xi, const Vector& x_star);

double strong_lyapunov_margin_saddle(const SaddleProblem& problem, const SaddleState& s,
                                     const Vector& u_star, const Vector& p_star);

struct RateCertificate {
  std::vector<double> ratios;
  double theoretical_bound = 0.0;
  double slack = 0.0;
  std::vector<std::pair<long, double>> violations;
  double fitted_rate = 0.0;
  double worst_ratio = 0.0;

  bool passed() const { return violations.empty(); }
};

inline constexpr double kDefaultCertificateSlack = 1e-8;

/// Ratios E^a_{k+1}/E^a_k over consecutive rows. Step k violates when
/// E^a_{k+1} > bound * E^a_k + slack * |E^a_k|. Rows after E^a has hit exactly
/// zero are skipped. Needs >= 2 E^alpha records.
RateCertificate certify_decay(const SolverTrace& trace, double bound,
                              double slack = kDefaultCertificateSlack);

/// certify_decay restricted to the leading rows with E^a > rel_floor * E^a_0:
/// once the energy reaches the rounding level of the reference solution the
/// per-step ratios carry no information.
RateCertificate certify_decay_above(const SolverTrace& trace, double bound, double rel_floor,
                                    double slack = kDefaultCertificateSlack);

/// Same on a raw sequence (values[k] at consecutive iterations).
RateCertificate certify_sequence(const std::vector<double>& values, double bound,
                                 double slack = kDefaultCertificateSlack);

/// exp of the least-squares slope of log(values) after discarding the first
/// 10% as burn-in.
double fitted_rate(const std::vector<double>& values);

/// Least-squares slope of log(iterations) against log(kappa).
double fit_iteration_scaling(const std::vector<std::pair<double, double>>& sweep);

}  // namespace aorhb
