#pragma once

// Experimental objectives with certified (mu, L) constants, and seeded
// generators that replay them exactly.

#include "aorhb/core.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <variant>

namespace aorhb {

// ---------------------------------------------------------------------------
// Quadratic: f(x) = 1/2 x^T A x - b^T x + c

struct QuadraticSpec {
  Matrix A;
  Vector b;
  double c = 0.0;
};

class QuadraticOracle final : public SmoothOracle {
 public:
  /// Throws ConstructionError unless A is symmetric positive definite.
  explicit QuadraticOracle(QuadraticSpec spec);

  Index dim() const override { return spec_.A.rows(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double bregman(const Vector& y, const Vector& x) const override;
  Vector gradient_difference(const Vector& x, const Vector& y, const Vector&, const Vector&) const override {
    return spec_.A * (x - y);
  }
  double mu() const override { return mu_; }
  double lipschitz() const override { return lipschitz_; }

  const Matrix& hessian() const { return spec_.A; }
  const Vector& linear_term() const { return spec_.b; }
  /// A^{-1} b by Cholesky.
  const Vector& minimizer() const { return minimizer_; }

 private:
  QuadraticSpec spec_;
  double mu_;
  double lipschitz_;
  Vector minimizer_;
};

std::shared_ptr<const QuadraticOracle> make_quadratic(QuadraticSpec spec);

// ---------------------------------------------------------------------------
// Piecewise objective: f(x) = sum_i h(a_i^T x - b_i) + mu/2 |x|^2,
// h(t) = 1/2 t^2 exp(-r/t) for t > 0 and 0 otherwise.

struct PiecewiseSpec {
  Matrix A;  // d x p, columns a_i
  Vector b;  // p
  double mu = 1.0;
  double lipschitz = 1.0;  // target L; requires |A| = sqrt(L - mu)
  double r = 1e-6;
};

double piecewise_h(double t, double r);
double piecewise_h_prime(double t, double r);
double piecewise_h_second(double t, double r);

class PiecewiseOracle final : public SmoothOracle {
 public:
  explicit PiecewiseOracle(PiecewiseSpec spec);

  Index dim() const override { return spec_.A.rows(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double bregman(const Vector& y, const Vector& x) const override;
  double mu() const override { return spec_.mu; }
  double lipschitz() const override { return spec_.lipschitz; }

  const PiecewiseSpec& spec() const { return spec_; }

 private:
  PiecewiseSpec spec_;
};

/// Verifies |A| = sqrt(L - mu) within 1e-4 relative by power iteration.
std::shared_ptr<const PiecewiseOracle> make_piecewise(PiecewiseSpec spec);

// ---------------------------------------------------------------------------
// l2-regularised logistic regression

struct LogisticSpec {
  Matrix features;  // m x d, rows a_i
  Vector labels;    // m entries in {-1, +1}
  double lambda_reg = 0.1;
};

class LogisticOracle final : public SmoothOracle {
 public:
  explicit LogisticOracle(LogisticSpec spec);

  Index dim() const override { return spec_.features.cols(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double bregman(const Vector& y, const Vector& x) const override;
  double mu() const override { return spec_.lambda_reg; }
  /// lambda_max(sum a_i a_i^T) + lambda, without the 1/4 sigmoid factor.
  double lipschitz() const override { return lipschitz_; }

  const LogisticSpec& spec() const { return spec_; }

 private:
  LogisticSpec spec_;
  double lipschitz_;
};

std::shared_ptr<const LogisticOracle> make_logistic(LogisticSpec spec);

// ---------------------------------------------------------------------------
// Least squares: f(x) = 1/2 |Ax - b|^2

class LeastSquaresOracle final : public SmoothOracle {
 public:
  /// With allow_singular = false, a singular A^T A is a ConstructionError.
  LeastSquaresOracle(Matrix A, Vector b, bool allow_singular);

  Index dim() const override { return A_.cols(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double bregman(const Vector& y, const Vector& x) const override;
  Vector gradient_difference(const Vector& x, const Vector& y, const Vector&, const Vector&) const override {
    return A_.transpose() * (A_ * (x - y));
  }
  double mu() const override { return mu_; }
  double lipschitz() const override { return lipschitz_; }

  const Matrix& matrix() const { return A_; }
  const Vector& rhs() const { return b_; }
  /// Minimum-norm minimiser.
  Vector min_norm_solution() const;
  double min_value() const;
  /// Orthogonal projection onto null(A).
  Vector null_space_projection(const Vector& x) const;

 private:
  Matrix A_;
  Vector b_;
  double mu_;
  double lipschitz_;
};

// ---------------------------------------------------------------------------
// Composite and saddle problems

struct CompositeProblem {
  OraclePtr f;
  ProxPtr g;
  std::optional<Vector> reference_solution;

  double objective(const Vector& x) const;
};

/// min_u max_p f(u) - g(p) + <B u, p>, with B of size n x m.
class SaddleProblem {
 public:
  SaddleProblem(OraclePtr f, OraclePtr g, Matrix B, std::optional<double> B_norm = {});

  const SmoothOracle& f() const { return *f_; }
  const SmoothOracle& g() const { return *g_; }
  OraclePtr f_ptr() const { return f_; }
  OraclePtr g_ptr() const { return g_; }
  const Matrix& B() const { return B_; }
  double B_norm() const { return B_norm_; }
  Index m() const { return B_.cols(); }
  Index n() const { return B_.rows(); }

  double lagrangian(const Vector& u, const Vector& p) const;
  /// F(u, p) = (grad f(u) + B^T p, grad g(p) - B u), the monotone operator J grad L.
  Vector monotone_operator(const Vector& u, const Vector& p) const;

 private:
  OraclePtr f_;
  OraclePtr g_;
  Matrix B_;
  double B_norm_;
};

struct SaddlePoint {
  Vector u;
  Vector p;
};

/// Solves the critical-point system grad_u L = 0, grad_p L = 0 by dense
/// factorisation with iterative refinement. Requires quadratic f and g.
SaddlePoint solve_quadratic_saddle(const SaddleProblem& problem);

/// f(u) = 1/2 |u|^2, g(p) = 1/2 |p|_C^2 + <b, p>, coupling B (n x m).
std::shared_ptr<const SaddleProblem> make_mspbe(const Matrix& B, const Matrix& C, const Vector& b);

/// f = 1/2 |Ax - b|^2 and g = lambda |.|_1 with the soft-threshold prox.
/// lambda = 0 drops the regulariser (identity prox).
CompositeProblem make_lasso(const Matrix& A, const Vector& b, double lambda);

// ---------------------------------------------------------------------------
// Seeded instance generation

enum class ProblemKind { quadratic, piecewise, logistic, lasso, l1l2, least_squares_singular, mspbe };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);

/// Everything needed to regenerate an instance bit-for-bit.
/// dims: quadratic/least_squares_singular {d}; piecewise {d, p};
/// logistic {m, d}; lasso/l1l2 {rows, cols}; mspbe {m, n}.
struct InstanceSpec {
  ProblemKind kind = ProblemKind::quadratic;
  std::vector<long> dims;
  /// Requested condition number. Optional for logistic/lasso/l1l2, where the
  /// unshaped Gaussian data is used when absent.
  std::optional<double> kappa;
  std::uint64_t seed = 0;
  /// Kind-specific constants (mu, L, r, lambda, ...); defaults per kind.
  std::map<std::string, double> constants;

  double constant(const std::string& key, double fallback) const;
};

/// Line-oriented "key value" text; `format_instance_spec` and
/// `parse_instance_spec` round-trip exactly.
std::string format_instance_spec(const InstanceSpec& spec);
InstanceSpec parse_instance_spec(const std::string& text);

struct Instance {
  InstanceSpec spec;
  std::variant<OraclePtr, CompositeProblem, std::shared_ptr<const SaddleProblem>> problem;
  /// Exact for quadratic/mspbe/least squares; empty otherwise.
  std::optional<Vector> reference;

  const OraclePtr& smooth() const;
  const CompositeProblem& composite() const;
  const SaddleProblem& saddle() const;
  std::shared_ptr<const SaddleProblem> saddle_ptr() const;
  bool is_smooth() const { return problem.index() == 0; }
  bool is_composite() const { return problem.index() == 1; }
  bool is_saddle() const { return problem.index() == 2; }
};

Instance generate_instance(const InstanceSpec& spec);

/// Convenience wrapper.
Instance generate_instance(ProblemKind kind, std::vector<long> dims, std::optional<double> kappa,
                           std::uint64_t seed);

/// Random orthogonal matrix (QR of a Gaussian matrix with sign fix).
Matrix random_orthogonal(Index n, std::uint64_t seed);

/// Eigenvalues geometrically spaced from lo to hi (both endpoints included).
Vector log_spaced(Index n, double lo, double hi);

}  // namespace aorhb
