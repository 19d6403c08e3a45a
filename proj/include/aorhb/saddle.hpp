#pragma once

// AOR-HB-saddle (explicit), AOR-HB-saddle-I (coupling treated implicitly),
// the step-size optimisation and the extra-gradient baseline.

#include "aorhb/diagnostics.hpp"
#include "aorhb/problems.hpp"
#include "aorhb/smooth.hpp"

#include <Eigen/Cholesky>

namespace aorhb {

struct SaddleStepSize {
  double alpha = 0.0;
  double beta_star = 0.0;
  double alpha_simple = 0.0;
  struct Components {
    double f_bound;         // sqrt(mu_f / L_f)
    double g_bound;         // sqrt(mu_g / L_g)
    double coupling_bound;  // sqrt(mu_f mu_g) / |B|, +inf when B = 0
  } components{};
};

/// beta* solves sqrt(b) m = (1 - b) c with m = min(f_bound, g_bound),
/// c = coupling_bound; alpha = sqrt(beta*) m.
SaddleStepSize saddle_step_size(double mu_f, double L_f, double mu_g, double L_g, double B_norm);

/// alpha used by the implicit scheme: min(sqrt(mu_f/L_f), sqrt(mu_g/L_g)).
double saddle_implicit_alpha(const SaddleProblem& problem);

SaddleState saddle_state_from(const Vector& u, const Vector& p);

/// AOR-HB-saddle (explicit coupling). Trace x = (u, p), y = (v, q); the error column is |(u,p) - (u*,p*)|
/// and E^alpha includes the B^sym coupling term.
SolverTrace aor_hb_saddle(const SaddleProblem& problem, const SaddleState& s0,
                          const SolverConfig& config);

/// The same scheme written as the mixed implicit/explicit Euler discretisation
/// of the saddle flow. Kept as an independent implementation for cross-checks.
SolverTrace aor_hb_saddle_euler_form(const SaddleProblem& problem, const SaddleState& s0,
                                     const SolverConfig& config);

enum class InnerSolver { cholesky, conjugate_gradient };

/// Factorisation of (1+a)^2 I + a^2/(mu_f mu_g) (B B^T or B^T B), on the
/// smaller of n and m. Immutable once built.
class ImplicitSolveCache {
 public:
  ImplicitSolveCache(const SaddleProblem& problem, double alpha,
                     InnerSolver inner = InnerSolver::cholesky, double cg_tol = 1e-10);

  double alpha() const { return alpha_; }
  /// 'n' when the system is solved for q (B B^T), 'm' for v (B^T B).
  char dimension_solved() const { return side_; }
  const Matrix& schur_matrix() const { return schur_; }

  /// Solves the coupled block system for (v_{k+1}, q_{k+1}) given the explicit
  /// right-hand sides r_v, r_q (see the implementation). Returns the relative
  /// residual of the block system in `residual`.
  void solve(const SaddleProblem& problem, const Vector& r_v, const Vector& r_q, Vector& v, Vector& q,
             double& residual) const;

 private:
  Vector schur_solve(const Vector& rhs) const;

  double alpha_;
  double mu_f_, mu_g_;
  char side_;
  InnerSolver inner_;
  double cg_tol_;
  Matrix schur_;
  Eigen::LLT<Matrix> llt_;
};

inline constexpr double kImplicitResidualTolerance = 1e-10;

/// AOR-HB-saddle-I. The cache must be built for the solver's alpha
/// (saddle_implicit_alpha unless overridden); a mismatch is a ConfigError.
SolverTrace aor_hb_saddle_implicit(const SaddleProblem& problem, const SaddleState& s0,
                                   const SolverConfig& config, const ImplicitSolveCache& cache);

/// Builds the cache internally.
SolverTrace aor_hb_saddle_implicit(const SaddleProblem& problem, const SaddleState& s0,
                                   const SolverConfig& config);

struct ExtragradientOptions {
  double c = 0.25;
};

/// z_{k+1} = z_k - eta (2 F(z_k) - F(z_{k-1})), eta = c / (max(L_f, L_g) + |B|).
/// z0 = (u0, p0). Divergence ends the trace instead of throwing.
SolverTrace extragradient(const SaddleProblem& problem, const Vector& z0, const SolverConfig& config,
                          ExtragradientOptions options = {});

}  // namespace aorhb
