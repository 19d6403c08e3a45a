#pragma once

// Proximal operators (analytic l1, l1 - l2, numeric fallback), a small
// registry, AOR-HB-composite and the proximal-gradient baseline.

#include "aorhb/problems.hpp"
#include "aorhb/smooth.hpp"

#include <functional>
#include <map>

namespace aorhb {

/// sign(x_i) max(|x_i| - lambda*weight, 0).
Vector prox_l1(const Vector& x, double lambda, double weight = 1.0);

/// prox of lambda*weight*(|y|_1 - |y|_2) in closed form (Lou & Yan). Ties among
/// 1-sparse candidates go to the smallest objective, then the lowest index.
Vector prox_l1_minus_l2(const Vector& x, double lambda, double weight = 1.0);

/// Objective of the l1 - l2 prox subproblem, t (|y|_1 - |y|_2) + |y - x|^2 / 2.
double l1_minus_l2_prox_objective(const Vector& y, const Vector& x, double t);

struct NumericProxResult {
  Vector y;
  double residual = 0.0;
  double objective = 0.0;
  int sweeps = 0;
};

using GValue = std::function<double(const Vector&)>;

/// Minimises g(y) + |y - x|^2 / (2 lambda) by cyclic coordinate minimisation.
/// Each 1-D subproblem is solved by a slope scan plus bisection on the
/// central-difference derivative, with y_i = 0 always tried as a candidate.
/// Multi-start from x and from 0; the best objective wins. Throws SolveError
/// carrying the best residual if the sweep change stays above tol.
NumericProxResult prox_numeric(const GValue& g_value, const Vector& x, double lambda,
                               double tol = 1e-10, int max_sweeps = 500);

class ZeroProx final : public ProxOracle {
 public:
  Vector prox(const Vector& x, double) const override { return x; }
  std::optional<double> value(const Vector&) const override { return 0.0; }
  bool convex() const override { return true; }
  std::string name() const override { return "zero"; }
};

class L1Prox final : public ProxOracle {
 public:
  explicit L1Prox(double weight);
  Vector prox(const Vector& x, double lambda) const override { return prox_l1(x, lambda, weight_); }
  std::optional<double> value(const Vector& x) const override { return weight_ * x.lpNorm<1>(); }
  bool convex() const override { return true; }
  std::string name() const override { return "l1"; }
  double weight() const { return weight_; }

 private:
  double weight_;
};

class L1MinusL2Prox final : public ProxOracle {
 public:
  explicit L1MinusL2Prox(double weight);
  Vector prox(const Vector& x, double lambda) const override {
    return prox_l1_minus_l2(x, lambda, weight_);
  }
  std::optional<double> value(const Vector& x) const override {
    return weight_ * (x.lpNorm<1>() - x.norm());
  }
  bool convex() const override { return false; }
  std::string name() const override { return "l1_minus_l2"; }
  double weight() const { return weight_; }

 private:
  double weight_;
};

/// Wraps prox_numeric around an arbitrary g.
class NumericProx final : public ProxOracle {
 public:
  NumericProx(std::string name, GValue g, bool convex, double tol = 1e-10);
  Vector prox(const Vector& x, double lambda) const override;
  std::optional<double> value(const Vector& x) const override { return g_(x); }
  bool convex() const override { return convex_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  GValue g_;
  bool convex_;
  double tol_;
};

struct ProxRegistryEntry {
  std::string name;
  bool convex_flag = true;
  ProxPtr prox;
};

class ProxRegistry {
 public:
  void add(ProxPtr prox);
  const ProxRegistryEntry& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, ProxRegistryEntry> entries_;
};

/// zero, l1 and l1_minus_l2 with the given weight.
ProxRegistry default_prox_registry(double weight);

/// AOR-HB-composite with alpha = sqrt(mu/L) (or the override) and
/// lambda = alpha / ((1 + alpha) mu). Rows report the y-sequence; the series
/// "x_error" carries |x_k - x*|. Lyapunov columns use the smooth energy of f.
SolverTrace aor_hb_composite(const CompositeProblem& problem, const Vector& x0, const Vector& y0,
                             const SolverConfig& config);

/// x_{k+1} = prox_{g/L}(x_k - grad f(x_k) / L).
SolverTrace proximal_gradient(const CompositeProblem& problem, const Vector& x0,
                              const SolverConfig& config);

struct CompositeReference {
  Vector x;
  double objective = 0.0;
  /// |x - prox(x - grad f(x)/L)| at exit.
  double residual = 0.0;
  long iterations = 0;
};

/// Long proximal-gradient run until the prox fixed-point residual is <= tol.
CompositeReference composite_reference(const CompositeProblem& problem, long max_iters = 1000000,
                                       double tol = 1e-12);

}  // namespace aorhb
