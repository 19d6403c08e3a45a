#include "aorhb/composite.hpp"
#include "aorhb/diagnostics.hpp"
#include "aorhb/problems.hpp"
#include "aorhb/saddle.hpp"

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"

using namespace aorhb;
namespace to = testing_oracles;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

OraclePtr half_square() { return make_quadratic({Matrix::Identity(1, 1), Vector::Zero(1), 0.0}); }

SolverConfig quiet(long iters) {
  SolverConfig c;
  c.max_iters = iters;
  c.record_time = false;
  return c;
}

SolverTrace synthetic(const std::vector<double>& ealpha) {
  SolverTrace t;
  for (std::size_t k = 0; k < ealpha.size(); ++k) {
    TraceRow r;
    r.k = static_cast<long>(k);
    r.Ealpha = ealpha[k];
    r.E = ealpha[k];
    t.rows.push_back(r);
  }
  return t;
}

std::shared_ptr<const QuadraticOracle> random_quadratic(long d, double kappa, unsigned seed) {
  Vector eig(d);
  for (long i = 0; i < d; ++i) eig[i] = std::pow(kappa, static_cast<double>(i) / (d - 1));
  return make_quadratic({to::spd(eig, seed), to::normal(d, seed + 1), 0.0});
}

Vector minimizer(const QuadraticOracle& q) { return q.hessian().ldlt().solve(q.linear_term()); }

Vector mspbe_saddle(const SaddleProblem& sp) {
  const auto& f = dynamic_cast<const QuadraticOracle&>(sp.f());
  const auto& g = dynamic_cast<const QuadraticOracle&>(sp.g());
  Matrix K(sp.m() + sp.n(), sp.m() + sp.n());
  K << f.hessian(), sp.B().transpose(), -sp.B(), g.hessian();
  Vector rhs(sp.m() + sp.n());
  rhs << f.linear_term(), g.linear_term();
  return K.partialPivLu().solve(rhs);
}

}  // namespace

TEST_CASE("bregman") {
  auto f = half_square();
  CHECK(bregman(*f, scalar(3), scalar(3)) == 0.0);
  CHECK(bregman(*f, scalar(1), scalar(0)) == doctest::Approx(0.5));
  auto q = random_quadratic(12, 50.0, 1);
  for (unsigned i = 0; i < 20; ++i) {
    const Vector x = to::normal(12, 10 + i), y = to::normal(12, 40 + i);
    const double matrix_form = 0.5 * (y - x).dot(q->hessian() * (y - x));
    CHECK(std::abs(bregman(*q, y, x) - matrix_form) <= 1e-10 * std::max(1.0, matrix_form));
  }
}

TEST_CASE("lyapunov E and E^alpha") {
  auto f = half_square();
  const Vector zero = scalar(0), one = scalar(1);
  CHECK(lyapunov_E(*f, zero, zero, zero) == 0.0);
  CHECK(lyapunov_E(*f, one, one, zero) == doctest::Approx(1.0));
  CHECK(lyapunov_E_alpha(*f, zero, zero, zero, 1.0) == 0.0);
  CHECK(lyapunov_E_alpha(*f, one, one, zero, 1.0) == doctest::Approx(2.0));

  auto q = random_quadratic(10, 100.0, 2);
  const Vector xs = minimizer(*q);
  for (unsigned i = 0; i < 20; ++i) {
    const Vector x = to::normal(10, 100 + i), y = to::normal(10, 200 + i);
    // 1/2 |z - z*|_D^2 with D = diag(A, mu I).
    const double dform = 0.5 * (x - xs).dot(q->hessian() * (x - xs)) + 0.5 * q->mu() * (y - xs).squaredNorm();
    CHECK(lyapunov_E(*q, x, y, xs) == doctest::Approx(dform).epsilon(1e-10));
    CHECK(lyapunov_E_alpha(*q, x, y, xs, 0.0) == lyapunov_E(*q, x, y, xs));
    const double a = 0.05;
    const double cross = a * (q->hessian() * (x - xs)).dot(y - xs);
    CHECK(lyapunov_E_alpha(*q, x, y, xs, a) == doctest::Approx(dform + cross).epsilon(1e-10));
  }
}

TEST_CASE("sandwich 0 <= E^alpha <= 2E on the zoo") {
  std::vector<OraclePtr> zoo = {
      random_quadratic(15, 1e3, 3),
      generate_instance(ProblemKind::piecewise, {15, 5}, std::nullopt, 4).smooth(),
      generate_instance(ProblemKind::logistic, {10, 20}, std::nullopt, 5).smooth(),
      generate_instance(ProblemKind::lasso, {30, 10}, std::nullopt, 6).composite().f,
  };
  for (const auto& f : zoo) {
    const double amax = std::sqrt(f->mu() / f->lipschitz());
    const Vector xs = to::normal(f->dim(), 7, 0.3);  // the sandwich needs no stationarity
    long bad = 0;
    for (unsigned i = 0; i < 300; ++i) {
      const Vector x = xs + to::normal(f->dim(), 1000 + i, 0.5), y = xs + to::normal(f->dim(), 3000 + i, 0.5);
      const double E = lyapunov_E(*f, x, y, xs);
      for (double a : {amax, 0.5 * amax, 0.0}) {
        const double Ea = lyapunov_E_alpha(*f, x, y, xs, a);
        if (Ea < -1e-12 * E || Ea > 2 * E * (1 + 1e-12)) ++bad;
      }
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("certificate integrity error") {
  // A gradient with the wrong sign and scale drives E^alpha negative.
  FunctionOracle liar(
      1, [](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) -> Vector { return -3 * x; },
      1.0, 1.0);
  CHECK_THROWS_AS(lyapunov_E_alpha(liar, scalar(1), scalar(1), scalar(0), 1.0), CertificateIntegrityError);
}

TEST_CASE("lyapunov_saddle") {
  auto f = half_square();
  SaddleProblem sp(f, f, Matrix::Identity(1, 1));
  const SaddleState at{scalar(0), scalar(0), scalar(0), scalar(0)};
  CHECK(lyapunov_saddle(sp, at, scalar(0), scalar(0), 0.5, true) == 0.0);

  // Direct formula for f = u^2/2, g = p^2/2, B = 1, state (1,1,1,1), reference 0, alpha = 1/2:
  // D_f + D_g + mu_f/2 v^2 + mu_g/2 q^2 + a (u v + p q) - a (B v) q.
  const double u = 1, v = 1, p = 1, q = 1, a = 0.5;
  const double E = 0.5 * u * u + 0.5 * p * p + 0.5 * v * v + 0.5 * q * q;
  const double direct = E + a * (u * v + p * q) - a * v * q;
  CHECK(direct == doctest::Approx(2.5));
  const SaddleState s{scalar(u), scalar(v), scalar(p), scalar(q)};
  CHECK(lyapunov_saddle_E(sp, s, scalar(0), scalar(0)) == doctest::Approx(E));
  CHECK(lyapunov_saddle(sp, s, scalar(0), scalar(0), a, true) == doctest::Approx(direct));
  CHECK(lyapunov_saddle(sp, s, scalar(0), scalar(0), a, false) == doctest::Approx(E + a * (u * v + p * q)));

  // B = 0 splits into the per-block smooth energies.
  auto qf = random_quadratic(5, 10.0, 8);
  auto qg = random_quadratic(3, 20.0, 9);
  SaddleProblem dec(qf, qg, Matrix::Zero(3, 5));
  const Vector us = minimizer(*qf), ps = minimizer(*qg);
  const SaddleState r{to::normal(5, 10), to::normal(5, 11), to::normal(3, 12), to::normal(3, 13)};
  const double sum = lyapunov_E_alpha(*qf, r.u, r.v, us, 0.1) + lyapunov_E_alpha(*qg, r.p, r.q, ps, 0.1);
  CHECK(lyapunov_saddle(dec, r, us, ps, 0.1, true) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("certify_decay on synthetic sequences") {
  std::vector<double> geo;
  for (int k = 0; k < 40; ++k) geo.push_back(std::pow(0.5, k));
  const auto c1 = certify_decay(synthetic(geo), 0.6);
  CHECK(c1.passed());
  CHECK(c1.fitted_rate == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(c1.ratios.size() == 39);
  CHECK(c1.worst_ratio == doctest::Approx(0.5));

  const auto c2 = certify_decay(synthetic(std::vector<double>(10, 3.0)), 0.9);
  CHECK(c2.violations.size() == 9);
  CHECK_FALSE(c2.passed());

  CHECK_THROWS_AS(certify_decay(synthetic({1.0}), 0.9), ConfigError);

  // Slack is relative to E^alpha_k.
  const auto c3 = certify_decay(synthetic({1e6, 0.5e6 * (1 + 5e-9)}), 0.5, 1e-8);
  CHECK(c3.passed());
  const auto c4 = certify_decay(synthetic({1e6, 0.5e6 + 0.02}), 0.5, 1e-8);
  CHECK_FALSE(c4.passed());

  // Floor variant ignores rows below the relative floor.
  const auto c5 = certify_decay_above(synthetic({1.0, 0.5, 1e-25, 2e-25}), 0.6, 1e-20);
  CHECK(c5.passed());
  CHECK_FALSE(certify_decay(synthetic({1.0, 0.5, 1e-25, 2e-25}), 0.6).passed());
}

TEST_CASE("certify_decay on an aor_hb run, kappa 1e4, alpha 0.01") {
  auto q = random_quadratic(40, 1e4, 14);
  SolverConfig c = quiet(200000);
  c.reference_x = minimizer(*q);
  c.alpha_override = 0.01;
  c.rel_error_tolerance = 1e-7;
  const auto t = aor_hb_two_var(*q, to::normal(40, 15), to::normal(40, 16), c);
  CHECK(t.stop == StopReason::rel_error_tolerance);
  const auto cert = certify_decay(t, 1 / (1 + 0.005));
  CHECK(cert.passed());
  CHECK(cert.fitted_rate <= 1 / (1 + 0.005));
}

TEST_CASE("fit_iteration_scaling") {
  CHECK(fit_iteration_scaling({{10, 10}, {100, 100}, {1000, 1000}}) == doctest::Approx(1.0));
  CHECK(fit_iteration_scaling({{100, 10}, {10000, 100}}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(fit_iteration_scaling({{10, 10}}), ConfigError);
  CHECK_THROWS_AS(fit_iteration_scaling({{10, 10}, {100, 0}, {1000, 30}}), ConfigError);
  CHECK_THROWS_AS(fit_iteration_scaling({{100, 10}, {10, 20}, {1000, 30}}), ConfigError);

  std::vector<std::pair<double, double>> sweep;
  for (double kappa : {1e2, 1e3, 1e4}) {
    auto q = random_quadratic(60, kappa, 17);
    SolverConfig c = quiet(1000000);
    c.reference_x = minimizer(*q);
    c.rel_error_tolerance = 1e-6;
    c.record_every = 1000000;
    c.record_objective = false;
    sweep.emplace_back(kappa, aor_hb(*q, to::normal(60, 18), std::nullopt, c).iterations);
  }
  const double slope = fit_iteration_scaling(sweep);
  MESSAGE("aor_hb quadratic slope " << slope);
  CHECK(std::abs(slope - 0.5) <= 0.15);
}

TEST_CASE("strong lyapunov property, smooth") {
  std::vector<std::pair<OraclePtr, Vector>> cases;
  {
    auto q = random_quadratic(10, 1e3, 19);
    cases.emplace_back(q, minimizer(*q));
  }
  for (auto kind : {ProblemKind::piecewise, ProblemKind::logistic}) {
    auto f = generate_instance(kind, {10, 5}, std::nullopt, 20).smooth();
    SolverConfig c = quiet(5000000);
    c.grad_tolerance = 1e-12;
    c.record_every = 5000000;
    c.record_objective = false;
    cases.emplace_back(f, nag(*f, Vector::Zero(f->dim()), std::nullopt, c).x_final);
  }
  for (const auto& [f, xs] : cases) {
    long bad = 0;
    for (unsigned i = 0; i < 1000; ++i) {
      const Vector x = xs + to::normal(f->dim(), 5000 + i, 0.5), y = xs + to::normal(f->dim(), 9000 + i, 0.5);
      const double E = lyapunov_E(*f, x, y, xs);
      // Independent evaluation of -<grad E, G> with G = (y - x, x - y - grad f(x)/mu).
      const double mu = f->mu();
      const Vector gx = f->gradient(x), gs = f->gradient(xs);
      const double lhs = -((gx - gs).dot(y - x) + mu * (y - xs).dot(x - y - gx / mu));
      const double margin = strong_lyapunov_margin(*f, x, y, xs);
      CHECK(margin == doctest::Approx(lhs - E - 0.5 * mu * (x - y).squaredNorm()).epsilon(1e-9).scale(1 + E));
      if (margin < -1e-9 * (1 + E)) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("strong lyapunov property, composite") {
  auto inst = generate_instance(ProblemKind::lasso, {40, 10}, std::nullopt, 21);
  const auto& pr = inst.composite();
  const Vector xs = composite_reference(pr).x;
  const double lambda = 0.3;
  long bad = 0;
  for (unsigned i = 0; i < 1000; ++i) {
    const Vector x = xs + to::normal(10, 100 + i, 0.5);
    const Vector z = xs + to::normal(10, 3000 + i, 1.0);
    const Vector y = pr.g->prox(z, lambda);
    const Vector xi = (z - y) / lambda;  // a subgradient of g at y
    const double E = lyapunov_E(*pr.f, x, y, xs);
    if (strong_lyapunov_margin_composite(*pr.f, x, y, xi, xs) < -1e-9 * (1 + E)) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("strong lyapunov property, saddle") {
  for (unsigned seed : {22u, 23u}) {
    auto sp = generate_instance(ProblemKind::mspbe, {20, 6}, 100.0, seed).saddle_ptr();
    const Vector z = mspbe_saddle(*sp);
    const Vector us = z.head(20), ps = z.tail(6);
    long bad = 0;
    for (unsigned i = 0; i < 1000; ++i) {
      const SaddleState s{us + to::normal(20, 100 + i), us + to::normal(20, 2000 + i), ps + to::normal(6, 4000 + i),
                          ps + to::normal(6, 6000 + i)};
      const double E = lyapunov_saddle_E(*sp, s, us, ps);
      if (strong_lyapunov_margin_saddle(*sp, s, us, ps) < -1e-9 * (1 + E)) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("per-step certificate implies the aggregate bounds") {
  auto q = random_quadratic(30, 1e3, 24);
  const Vector xs = minimizer(*q);
  const double fs = q->value(xs);
  SolverConfig c = quiet(20000);
  c.reference_x = xs;
  c.rel_error_tolerance = 1e-7;
  c.store_iterates = true;
  const auto t = aor_hb_two_var(*q, to::normal(30, 25), to::normal(30, 26), c);
  const double alpha = t.alpha;
  const double r = 1 / (1 + alpha / 2);
  const double slack = 1e-8;
  const auto cert = certify_decay(t, r, slack);
  REQUIRE(cert.passed());

  const double E0 = t.rows.front().Ealpha;
  const double C0 = E0 / alpha;
  long bad_geo = 0, bad_c0 = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double k = static_cast<double>(t.rows[i].k);
    if (t.rows[i].Ealpha > E0 * std::pow(r + slack, k)) ++bad_geo;
    // f(x_{k+1}) - f* + mu/2 |y_{k+1} - x*|^2 <= C_0 r^k for k >= 1.
    if (t.rows[i].k >= 2) {
      const auto& it = t.iterates[i];
      const double lhs = q->value(it.x) - fs + 0.5 * q->mu() * (*it.y - xs).squaredNorm();
      if (lhs > C0 * std::pow(r, k - 1) * (1 + 1e-10)) ++bad_c0;
    }
  }
  CHECK(bad_geo == 0);
  CHECK(bad_c0 == 0);
}

TEST_CASE("fitted rate discards burn-in") {
  std::vector<double> v;
  for (int k = 0; k < 100; ++k) v.push_back(k < 10 ? 1e6 : std::pow(0.9, k));
  CHECK(fitted_rate(v) == doctest::Approx(0.9).epsilon(1e-10));
}
