#include "aorhb/core.hpp"

#include "aorhb/problems.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace aorhb {

DivergenceError::DivergenceError(std::string op, long iteration)
    : Error(op + ": non-finite iterate at iteration " + std::to_string(iteration)),
      op_(std::move(op)),
      iteration_(iteration) {}

IntegrationError::IntegrationError(long step)
    : Error("integrate_flow: non-finite state at step " + std::to_string(step)), step_(step) {}

SolveError::SolveError(const std::string& what, double residual)
    : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

bool all_finite(const Vector& v) { return v.allFinite(); }

void require_finite(const Vector& v, const std::string& op, long iteration) {
  if (!v.allFinite()) throw DivergenceError(op, iteration);
}

Vector random_normal(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Matrix random_normal(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  // Fill row-major so the sequence does not depend on Eigen's storage order.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// ---------------------------------------------------------------------------

double SmoothOracle::bregman(const Vector& y, const Vector& x) const {
  return value(y) - value(x) - gradient(x).dot(y - x);
}

Vector SmoothOracle::gradient_difference(const Vector&, const Vector&, const Vector& grad_x,
                                         const Vector& grad_y) const {
  return grad_x - grad_y;
}

FunctionOracle::FunctionOracle(Index dim, ValueFn value, GradientFn gradient, double mu,
                               double lipschitz)
    : dim_(dim), value_(std::move(value)), gradient_(std::move(gradient)), mu_(mu), lipschitz_(lipschitz) {
  if (dim <= 0) throw ConstructionError("FunctionOracle: dim must be positive");
  if (mu < 0 || lipschitz <= 0 || mu > lipschitz)
    throw ConstructionError("FunctionOracle: need 0 <= mu <= L, L > 0");
}

double CountingOracle::value(const Vector& x) const {
  ++value_calls_;
  return inner_->value(x);
}

Vector CountingOracle::gradient(const Vector& x) const {
  ++gradient_calls_;
  return inner_->gradient(x);
}

// ---------------------------------------------------------------------------

double default_fd_step(const Vector& x) { return 1e-6 * (1.0 + x.norm()); }

Vector finite_difference_gradient(const SmoothOracle& oracle, const Vector& x, double h) {
  if (!(h > 0)) throw ConfigError("finite_difference_gradient: h must be positive");
  if (x.size() != oracle.dim()) throw ConfigError("finite_difference_gradient: dimension mismatch");
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    probe[i] = xi + h;
    const double fp = oracle.value(probe);
    probe[i] = xi - h;
    const double fm = oracle.value(probe);
    probe[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      std::ostringstream msg;
      msg << "finite_difference_gradient: non-finite value probing coordinate " << i;
      throw EvaluationError(msg.str());
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double gradient_check(const SmoothOracle& oracle, const Vector& x) {
  const Vector g = oracle.gradient(x);
  const Vector fd = finite_difference_gradient(oracle, x, default_fd_step(x));
  const double scale = std::max(g.norm(), fd.norm());
  const double diff = (g - fd).norm();
  return scale > 0 ? diff / scale : diff;
}

// ---------------------------------------------------------------------------

LinearMap LinearMap::from_matrix(const Matrix& m) {
  LinearMap map;
  map.rows = m.rows();
  map.cols = m.cols();
  map.apply = [m](const Vector& x) -> Vector { return m * x; };
  map.apply_transpose = [m](const Vector& x) -> Vector { return m.transpose() * x; };
  return map;
}

LinearMap LinearMap::symmetric(Index n, std::function<Vector(const Vector&)> apply) {
  LinearMap map;
  map.rows = n;
  map.cols = n;
  map.apply = std::move(apply);
  return map;
}

LinearMap LinearMap::transposed() const {
  if (!apply_transpose) return *this;
  LinearMap t;
  t.rows = cols;
  t.cols = rows;
  t.apply = apply_transpose;
  t.apply_transpose = apply;
  return t;
}

double spectral_norm(const LinearMap& map, int iters, std::uint64_t seed) {
  if (iters < 1) throw ConfigError("spectral_norm: iters must be >= 1");
  if (!map.apply) throw ConfigError("spectral_norm: map has no apply");
  if (!map.apply_transpose && map.rows != map.cols)
    throw ConfigError("spectral_norm: non-square map needs apply_transpose");
  const auto& adjoint = map.apply_transpose ? map.apply_transpose : map.apply;

  Vector x = random_normal(map.cols, seed);
  double best = 0.0;
  for (int k = 0; k < iters; ++k) {
    const double nx = x.norm();
    if (nx == 0.0) return best;
    x /= nx;
    const Vector mx = map.apply(x);
    // |M x_k| / |x_k| is the Rayleigh quotient of M^T M at the k-th power
    // iterate, which is monotone in k; the max guards against rounding.
    best = std::max(best, mx.norm());
    if (mx.norm() == 0.0) return best;
    x = adjoint(mx);
  }
  return best;
}

// ---------------------------------------------------------------------------

Index FlowSpec::state_dim() const {
  switch (kind) {
    case FlowKind::hb_flow:
    case FlowKind::agd_flow:
      return 2 * oracle->dim();
    case FlowKind::saddle_flow:
      return 2 * (saddle->m() + saddle->n());
  }
  return 0;
}

void FlowSpec::validate() const {
  if (kind == FlowKind::saddle_flow) {
    if (!saddle) throw ConfigError("saddle_flow needs a SaddleProblem");
    if (!(saddle->f().mu() > 0 && saddle->g().mu() > 0))
      throw ConfigError("saddle_flow needs mu_f, mu_g > 0");
    return;
  }
  if (!oracle) throw ConfigError("flow needs a SmoothOracle");
  if (kind == FlowKind::agd_flow && !(oracle->mu() > 0))
    throw ConfigError("agd_flow divides by mu; mu must be positive");
  if (kind == FlowKind::hb_flow && !(theta > 0 && eta > 0))
    throw ConfigError("hb_flow needs theta, eta > 0");
}

Vector FlowSpec::field(const Vector& z) const {
  Vector out(z.size());
  switch (kind) {
    case FlowKind::hb_flow: {
      const Index d = oracle->dim();
      const auto x = z.head(d);
      const auto v = z.tail(d);
      out.head(d) = v;
      out.tail(d) = -theta * v - eta * oracle->gradient(x);
      break;
    }
    case FlowKind::agd_flow: {
      const Index d = oracle->dim();
      const Vector x = z.head(d);
      const Vector y = z.tail(d);
      out.head(d) = y - x;
      out.tail(d) = x - y - oracle->gradient(x) / oracle->mu();
      break;
    }
    case FlowKind::saddle_flow: {
      const Index m = saddle->m();
      const Index n = saddle->n();
      const Vector u = z.segment(0, m);
      const Vector v = z.segment(m, m);
      const Vector p = z.segment(2 * m, n);
      const Vector q = z.segment(2 * m + n, n);
      const Matrix& B = saddle->B();
      out.segment(0, m) = v - u;
      out.segment(m, m) = u - v - (saddle->f().gradient(u) + B.transpose() * q) / saddle->f().mu();
      out.segment(2 * m, n) = q - p;
      out.segment(2 * m + n, n) = p - q - (saddle->g().gradient(p) - B * v) / saddle->g().mu();
      break;
    }
  }
  return out;
}

std::vector<Vector> integrate_flow(const FlowSpec& spec, const Vector& z0, double dt, long steps) {
  spec.validate();
  if (!(dt > 0) || steps < 1) throw ConfigError("integrate_flow: need dt > 0 and steps >= 1");
  if (z0.size() != spec.state_dim()) throw ConfigError("integrate_flow: state dimension mismatch");

  std::vector<Vector> traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);
  traj.push_back(z0);
  Vector z = z0;
  for (long s = 1; s <= steps; ++s) {
    const Vector k1 = spec.field(z);
    const Vector k2 = spec.field(z + 0.5 * dt * k1);
    const Vector k3 = spec.field(z + 0.5 * dt * k2);
    const Vector k4 = spec.field(z + dt * k3);
    z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite()) throw IntegrationError(s);
    traj.push_back(z);
  }
  return traj;
}

}  // namespace aorhb
