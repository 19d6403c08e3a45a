#pragma once

// Oracle abstractions, vector helpers, gradient checking, matrix-free
// spectral estimates and ODE flow integration shared by every solver.

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aorhb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite function or gradient value at a probe point.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Invalid problem data (non-PD matrix, dimension mismatch, ...).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// Invalid solver or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A solver produced a non-finite iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string op, long iteration);
  const std::string& operation() const { return op_; }
  long iteration() const { return iteration_; }

 private:
  std::string op_;
  long iteration_;
};

/// Non-finite state while integrating a flow.
class IntegrationError : public Error {
 public:
  explicit IntegrationError(long step);
  long step() const { return step_; }

 private:
  long step_;
};

/// An inner solve (prox fallback, implicit block system) missed its tolerance.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, double residual);
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A Lyapunov quantity that must be nonnegative came out negative.
class CertificateIntegrityError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Vector helpers

bool all_finite(const Vector& v);
void require_finite(const Vector& v, const std::string& op, long iteration);

/// Seeded standard-normal vector. All randomness in the library goes through
/// an explicit 64-bit seed.
Vector random_normal(Index n, std::uint64_t seed);
Matrix random_normal(Index rows, Index cols, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Oracles

/// Black-box access to a differentiable f together with certified constants:
/// mu (strong convexity, 0 allowed) and lipschitz (gradient Lipschitz constant).
/// Implementations are immutable after construction and safe to share.
class SmoothOracle {
 public:
  virtual ~SmoothOracle() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  /// D_f(y, x) = f(y) - f(x) - <grad f(x), y - x>. Oracles with a closed form
  /// override this to avoid cancellation when y is close to x.
  virtual double bregman(const Vector& y, const Vector& x) const;

  /// grad f(x) - grad f(y) given both gradients. Oracles with linear
  /// gradients override this to evaluate H (x - y) directly, which stays
  /// accurate when x approaches y and the gradients themselves are large.
  virtual Vector gradient_difference(const Vector& x, const Vector& y, const Vector& grad_x,
                                     const Vector& grad_y) const;

  virtual double mu() const = 0;
  virtual double lipschitz() const = 0;

  double condition_number() const { return lipschitz() / mu(); }
};

using OraclePtr = std::shared_ptr<const SmoothOracle>;

/// Oracle assembled from callables; handy for tests and one-off objectives.
class FunctionOracle final : public SmoothOracle {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  FunctionOracle(Index dim, ValueFn value, GradientFn gradient, double mu, double lipschitz);

  Index dim() const override { return dim_; }
  double value(const Vector& x) const override { return value_(x); }
  Vector gradient(const Vector& x) const override { return gradient_(x); }
  double mu() const override { return mu_; }
  double lipschitz() const override { return lipschitz_; }

 private:
  Index dim_;
  ValueFn value_;
  GradientFn gradient_;
  double mu_;
  double lipschitz_;
};

/// Forwards to another oracle and counts evaluations.
class CountingOracle final : public SmoothOracle {
 public:
  explicit CountingOracle(OraclePtr inner) : inner_(std::move(inner)) {}

  Index dim() const override { return inner_->dim(); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double bregman(const Vector& y, const Vector& x) const override { return inner_->bregman(y, x); }
  Vector gradient_difference(const Vector& x, const Vector& y, const Vector& gx, const Vector& gy) const override {
    return inner_->gradient_difference(x, y, gx, gy);
  }
  double mu() const override { return inner_->mu(); }
  double lipschitz() const override { return inner_->lipschitz(); }

  long value_calls() const { return value_calls_.load(); }
  long gradient_calls() const { return gradient_calls_.load(); }

 private:
  OraclePtr inner_;
  mutable std::atomic<long> value_calls_{0};
  mutable std::atomic<long> gradient_calls_{0};
};

/// prox_{lambda g}(x) = argmin_y g(y) + |y - x|^2 / (2 lambda).
class ProxOracle {
 public:
  virtual ~ProxOracle() = default;

  virtual Vector prox(const Vector& x, double lambda) const = 0;
  /// g itself, when it can be evaluated.
  virtual std::optional<double> value(const Vector& x) const = 0;
  virtual bool convex() const = 0;
  virtual std::string name() const = 0;
};

using ProxPtr = std::shared_ptr<const ProxOracle>;

// ---------------------------------------------------------------------------
// Gradient checking

/// Default probe step 1e-6 * (1 + |x|).
double default_fd_step(const Vector& x);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) per coordinate.
Vector finite_difference_gradient(const SmoothOracle& oracle, const Vector& x, double h);

/// |grad - fd| / max(|grad|, |fd|), or the absolute difference when both vanish.
double gradient_check(const SmoothOracle& oracle, const Vector& x);

// ---------------------------------------------------------------------------
// Spectral estimates

/// A matrix-free linear map R^cols -> R^rows. When `apply_transpose` is empty
/// the map must be square and symmetric.
struct LinearMap {
  Index rows = 0;
  Index cols = 0;
  std::function<Vector(const Vector&)> apply;
  std::function<Vector(const Vector&)> apply_transpose;

  static LinearMap from_matrix(const Matrix& m);
  static LinearMap symmetric(Index n, std::function<Vector(const Vector&)> apply);
  LinearMap transposed() const;
};

inline constexpr int kDefaultPowerIterations = 200;

/// Power iteration on M^T M. Returns an estimate of the largest singular value;
/// the estimate is nondecreasing in `iters`. A zero map yields 0.
double spectral_norm(const LinearMap& map, int iters = kDefaultPowerIterations,
                     std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Continuous-time flows

class SaddleProblem;

enum class FlowKind { hb_flow, agd_flow, saddle_flow };

/// hb_flow:     x'' + theta x' + eta grad f(x) = 0, state (x, x').
/// agd_flow:    x' = y - x, y' = x - y - grad f(x) / mu, state (x, y).
/// saddle_flow: the bilinear-coupled flow over state (u, v, p, q).
struct FlowSpec {
  FlowKind kind = FlowKind::agd_flow;
  double theta = 2.0;
  double eta = 1.0;
  OraclePtr oracle;                             // hb_flow, agd_flow
  std::shared_ptr<const SaddleProblem> saddle;  // saddle_flow

  Index state_dim() const;
  void validate() const;
  /// Right-hand side G(z).
  Vector field(const Vector& z) const;
};

/// Classical RK4; returns steps + 1 states including z0.
std::vector<Vector> integrate_flow(const FlowSpec& spec, const Vector& z0, double dt, long steps);

}  // namespace aorhb
