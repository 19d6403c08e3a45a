#pragma once

// AOR-HB (triple and two-variable forms), AOR-HB-0, and the GD / Polyak HB /
// NAG baselines over SmoothOracle problems. Also defines the trace types
// shared by every solver family.

#include "aorhb/core.hpp"

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aorhb {

struct SolverConfig {
  long max_iters = 1000;
  /// Stop once |grad f(x_k)| <= grad_tolerance (0 disables).
  double grad_tolerance = 0.0;
  /// Stop once |x_k - x*| / |x_0 - x*| <= rel_error_tolerance; needs reference_x.
  double rel_error_tolerance = 0.0;
  std::optional<double> alpha_override;
  long record_every = 1;
  std::uint64_t seed = 0;
  /// Known minimiser / saddle point (concatenated (u, p) for saddle problems).
  std::optional<Vector> reference_x;
  std::optional<double> reference_f;
  bool store_iterates = false;
  /// Evaluate f at recorded iterates (needed for obj_gap).
  bool record_objective = true;
  /// When false wall_ms is left empty so traces are bit-reproducible.
  bool record_time = true;

  void validate() const;
};

enum class StopReason { max_iters, grad_tolerance, rel_error_tolerance, diverged };
std::string to_string(StopReason reason);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One recorded iteration; NaN marks a quantity the solver could not compute.
struct TraceRow {
  long k = 0;
  double error = kMissing;
  double obj_gap = kMissing;
  double E = kMissing;
  double Ealpha = kMissing;
  double wall_ms = kMissing;
};

struct IterateRecord {
  long k = 0;
  Vector x;
  std::optional<Vector> y;
};

struct SolverTrace {
  std::string solver;
  std::vector<TraceRow> rows;
  std::vector<IterateRecord> iterates;
  /// Extra per-row series keyed by name (e.g. "objective", "x_error", "gamma_tilde").
  std::map<std::string, std::vector<double>> series;

  Vector x_final;
  std::optional<Vector> y_final;
  long iterations = 0;
  StopReason stop = StopReason::max_iters;
  long diverged_at = -1;
  double alpha = kMissing;
  /// Set when convexity-dependent guarantees do not apply (non-convex g).
  bool heuristic = false;
  double wall_ms = 0.0;
  long gradient_evaluations = 0;

  bool diverged() const { return stop == StopReason::diverged; }
  /// error of the last row divided by the first, NaN if missing.
  double relative_error() const;
  /// First recorded k with error / error_0 <= tol, or -1.
  long iterations_to(double tol) const;
};

struct AorHbParams {
  double gamma;
  double beta;
};
/// gamma = 1/(sqrt L + sqrt mu)^2, beta = L/(sqrt L + sqrt mu)^2, or the
/// alpha-parametrised equivalents alpha^2/(mu (1+alpha)^2), 1/(1+alpha)^2.
AorHbParams aor_hb_params(double mu, double L, std::optional<double> alpha = {});

struct PolyakParams {
  double gamma;
  double beta;
};
PolyakParams polyak_params(double mu, double L);

/// x_{k+1} = x_k - gamma (2 grad f(x_k) - grad f(x_{k-1})) + beta (x_k - x_{k-1}).
/// x1 defaults to x0.
SolverTrace aor_hb(const SmoothOracle& oracle, const Vector& x0, const std::optional<Vector>& x1,
                   const SolverConfig& config);

/// Two-variable form; records y_k and the Lyapunov pair (E, E^alpha) when the
/// reference is known.
SolverTrace aor_hb_two_var(const SmoothOracle& oracle, const Vector& x0, const Vector& y0,
                           const SolverConfig& config);

/// mu = 0 variant with k/(k+3) coefficients; E column carries
/// f(x_k) - f* + (gamma~_k / 2)|v_k - x*|^2.
SolverTrace aor_hb_zero(const SmoothOracle& oracle, const Vector& x0, const SolverConfig& config);

/// E_0 = f(x0) - f* + L |x0 + grad f(x0)/(2L) - x*|^2, the initial energy of aor_hb_zero.
double aor_hb_zero_initial_energy(const SmoothOracle& oracle, const Vector& x0, const Vector& x_star,
                                  double f_star);

SolverTrace gradient_descent(const SmoothOracle& oracle, const Vector& x0, const SolverConfig& config);

/// Never throws on divergence; the trace stops with StopReason::diverged.
SolverTrace heavy_ball_polyak(const SmoothOracle& oracle, const Vector& x0,
                              const std::optional<Vector>& x1, const SolverConfig& config);

SolverTrace nag(const SmoothOracle& oracle, const Vector& x0, const std::optional<Vector>& x1,
                const SolverConfig& config);

}  // namespace aorhb
