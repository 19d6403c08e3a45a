#include "aorhb/diagnostics.hpp"
#include "aorhb/problems.hpp"
#include "aorhb/smooth.hpp"

#include <doctest.h>

#include <Eigen/QR>
#include <cmath>
#include <cstring>

#include "oracles.hpp"

using namespace aorhb;
namespace to = testing_oracles;

namespace {

OraclePtr half_square() { return make_quadratic({Matrix::Identity(1, 1), Vector::Zero(1), 0.0}); }

Vector scalar(double v) { return Vector::Constant(1, v); }

SolverConfig quiet(long iters) {
  SolverConfig c;
  c.max_iters = iters;
  c.record_time = false;
  return c;
}

std::shared_ptr<const QuadraticOracle> random_quadratic(long d, double kappa, unsigned seed) {
  Vector eig(d);
  for (long i = 0; i < d; ++i) eig[i] = std::pow(kappa, static_cast<double>(i) / (d - 1));
  return make_quadratic({to::spd(eig, seed), to::normal(d, seed + 1), 0.0});
}

Vector quadratic_minimizer(const QuadraticOracle& q) { return q.hessian().ldlt().solve(q.linear_term()); }

// Minimiser by NAG to a tight gradient tolerance (a different method from the one under test).
Vector tight_minimizer(const SmoothOracle& f) {
  SolverConfig c = quiet(5'000'000);
  c.grad_tolerance = 1e-13;
  c.record_every = 1'000'000;
  c.record_objective = false;
  return nag(f, Vector::Zero(f.dim()), std::nullopt, c).x_final;
}

std::vector<Vector> xs(const SolverTrace& t) {
  std::vector<Vector> out;
  for (const auto& it : t.iterates) out.push_back(it.x);
  return out;
}

}  // namespace

TEST_CASE("parameters") {
  const auto p = aor_hb_params(1.0, 4.0);
  CHECK(p.gamma == doctest::Approx(1.0 / 9));
  CHECK(p.beta == doctest::Approx(4.0 / 9));
  const auto p1 = aor_hb_params(1.0, 1.0);
  CHECK(p1.gamma == doctest::Approx(0.25));
  CHECK(p1.beta == doctest::Approx(0.25));
  // alpha form with alpha = sqrt(mu/L) coincides with the (mu, L) form.
  const auto pa = aor_hb_params(2.0, 50.0, std::sqrt(2.0 / 50.0));
  const auto pl = aor_hb_params(2.0, 50.0);
  CHECK(pa.gamma == doctest::Approx(pl.gamma).epsilon(1e-14));
  CHECK(pa.beta == doctest::Approx(pl.beta).epsilon(1e-14));

  const auto h = polyak_params(1.0, 4.0);
  CHECK(h.beta == doctest::Approx(1.0 / 9));
  CHECK(h.gamma == doctest::Approx(4.0 / 9));
  const auto h1 = polyak_params(1.0, 1.0);
  CHECK(h1.beta == doctest::Approx(0.0));
  CHECK(h1.gamma == doctest::Approx(1.0));
}

TEST_CASE("single steps on f = x^2 / 2") {
  auto f = half_square();
  SolverConfig c = quiet(1);
  c.store_iterates = true;

  // aor_hb: x0 = x1 = 1 -> x2 = 1 - (2 - 1) / 4
  auto t = aor_hb(*f, scalar(1), scalar(1), c);
  CHECK(t.x_final[0] == doctest::Approx(0.75));

  SolverConfig c2 = c;
  c2.alpha_override = 1.0;
  auto tv = aor_hb_two_var(*f, scalar(1), scalar(1), c2);
  CHECK(tv.x_final[0] == doctest::Approx(1.0));
  REQUIRE(tv.y_final);
  CHECK((*tv.y_final)[0] == doctest::Approx(0.5));

  CHECK(gradient_descent(*f, scalar(1), c).x_final[0] == doctest::Approx(0.0));
  CHECK(nag(*f, scalar(1), std::nullopt, c).x_final[0] == doctest::Approx(0.0));
  // Polyak HB with mu = L reduces to the exact GD step.
  CHECK(heavy_ball_polyak(*f, scalar(1), std::nullopt, c).x_final[0] == doctest::Approx(0.0));
}

TEST_CASE("hb with mu = L follows gd") {
  Matrix A = 3.0 * Matrix::Identity(4, 4);
  auto f = make_quadratic({A, to::normal(4, 5), 0.0});
  const Vector x0 = to::normal(4, 6);
  SolverConfig c = quiet(5);
  c.store_iterates = true;
  const auto hb = xs(heavy_ball_polyak(*f, x0, std::nullopt, c));
  const auto gd = xs(gradient_descent(*f, x0, c));
  REQUIRE(hb.size() == gd.size());
  for (std::size_t i = 0; i < hb.size(); ++i) CHECK((hb[i] - gd[i]).norm() <= 1e-14);
}

TEST_CASE("aor_hb_zero uses k/(k+3) coefficients") {
  auto f = half_square();
  SolverConfig c = quiet(2);
  c.store_iterates = true;
  const auto it = xs(aor_hb_zero(*f, scalar(1), c));
  REQUIRE(it.size() == 4);
  // Rows: x0, x1 = x0, x2, x3.
  const double x0 = 1.0, x1 = 1.0;
  const double x2 = x1 - 0.25 * (2 * x1 - x0) + 0.25 * (x1 - x0);
  const double x3 = x2 - 0.4 * (2 * x2 - x1) + 0.4 * (x2 - x1);
  CHECK(it[0][0] == x0);
  CHECK(it[1][0] == x1);
  CHECK(it[2][0] == doctest::Approx(x2));
  CHECK(it[3][0] == doctest::Approx(x3));
  CHECK(x3 == doctest::Approx(0.45));
}

TEST_CASE("equilibrium starts stay put") {
  auto q = random_quadratic(6, 50.0, 3);
  const Vector xs_ = quadratic_minimizer(*q);
  SolverConfig c = quiet(20);
  CHECK((aor_hb(*q, xs_, xs_, c).x_final - xs_).norm() <= 1e-12);
  CHECK((aor_hb_two_var(*q, xs_, xs_, c).x_final - xs_).norm() <= 1e-12);
  CHECK((aor_hb_zero(*q, xs_, c).x_final - xs_).norm() <= 1e-12);
  CHECK((gradient_descent(*q, xs_, c).x_final - xs_).norm() <= 1e-12);
  CHECK((nag(*q, xs_, xs_, c).x_final - xs_).norm() <= 1e-12);
  CHECK((heavy_ball_polyak(*q, xs_, xs_, c).x_final - xs_).norm() <= 1e-12);
}

TEST_CASE("triple and two-variable forms produce the same x-sequence") {
  auto check_equivalence = [](const SmoothOracle& f, const Vector& x0) {
    SolverConfig c = quiet(100);
    c.store_iterates = true;
    const double alpha = std::sqrt(f.mu() / f.lipschitz());
    const Vector x1 = (x0 + alpha * x0) / (1 + alpha);  // one averaging substep with y0 = x0
    const auto a = xs(aor_hb(f, x0, x1, c));
    const auto b = xs(aor_hb_two_var(f, x0, x0, c));
    REQUIRE(a.size() >= 100);
    REQUIRE(b.size() >= 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(to::rel(a[i], b[i]) <= 1e-10);
  };
  auto q = random_quadratic(20, 100.0, 7);
  check_equivalence(*q, to::normal(20, 8));
  auto pw = generate_instance(ProblemKind::piecewise, {20, 5}, std::nullopt, 9).smooth();
  check_equivalence(*pw, to::normal(20, 10, 0.3));
}

TEST_CASE("one gradient evaluation per iteration") {
  auto q = random_quadratic(10, 100.0, 11);
  const Vector x0 = to::normal(10, 12);
  {
    CountingOracle c(q);
    auto t = aor_hb(c, x0, std::nullopt, quiet(50));
    CHECK(t.iterations == 50);
    CHECK(c.gradient_calls() == 51);  // one extra at x0
    CHECK(t.gradient_evaluations == 51);
  }
  {
    CountingOracle c(q);
    nag(c, x0, std::nullopt, quiet(50));
    CHECK(c.gradient_calls() == 50);
  }
  {
    CountingOracle c(q);
    gradient_descent(c, x0, quiet(50));
    CHECK(c.gradient_calls() == 50);
  }
  {
    CountingOracle c(q);
    aor_hb_two_var(c, x0, x0, quiet(50));
    CHECK(c.gradient_calls() == 51);
  }
  {
    CountingOracle c(q);
    aor_hb_zero(c, x0, quiet(50));
    CHECK(c.gradient_calls() == 51);
  }
}

TEST_CASE("solvers are deterministic") {
  auto lg = generate_instance(ProblemKind::logistic, {20, 30}, std::nullopt, 13).smooth();
  const Vector x0 = to::normal(30, 14);
  auto same = [](const SolverTrace& a, const SolverTrace& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i)
      if (a.rows[i].k != b.rows[i].k || std::memcmp(&a.rows[i].obj_gap, &b.rows[i].obj_gap, sizeof(double)) != 0)
        return false;
    return a.x_final == b.x_final;
  };
  SolverConfig c = quiet(200);
  CHECK(same(aor_hb(*lg, x0, std::nullopt, c), aor_hb(*lg, x0, std::nullopt, c)));
  CHECK(same(aor_hb_two_var(*lg, x0, x0, c), aor_hb_two_var(*lg, x0, x0, c)));
  CHECK(same(nag(*lg, x0, std::nullopt, c), nag(*lg, x0, std::nullopt, c)));
  CHECK(same(heavy_ball_polyak(*lg, x0, std::nullopt, c), heavy_ball_polyak(*lg, x0, std::nullopt, c)));
}

TEST_CASE("gradient descent contracts by at least 1 - 1/(2 kappa) per step") {
  const double kappa = 100.0;
  auto q = random_quadratic(30, kappa, 15);
  const Vector xs_ = quadratic_minimizer(*q);
  SolverConfig c = quiet(1000);
  c.reference_x = xs_;
  auto t = gradient_descent(*q, to::normal(30, 16), c);
  REQUIRE(t.rows.size() == 1001);
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    CHECK(t.rows[i].error <= (1 - 1 / (2 * kappa)) * t.rows[i - 1].error);
}

TEST_CASE("polyak heavy ball reaches its spectral rate on a quadratic") {
  const double kappa = 1e4;
  auto q = random_quadratic(100, kappa, 17);
  const Vector xs_ = quadratic_minimizer(*q);
  SolverConfig c = quiet(800);
  c.reference_x = xs_;
  auto t = heavy_ball_polyak(*q, to::normal(100, 18), std::nullopt, c);
  REQUIRE(!t.diverged());
  const double sr = std::sqrt(1 / kappa);
  const double expected = (1 - sr) / (1 + sr);
  const double measured = std::pow(t.rows[800].error / t.rows[300].error, 1.0 / 500);
  CHECK(measured >= 0.9 * expected);
  CHECK(measured <= 1.1 * expected);
  CHECK(measured < 1.0);
}

TEST_CASE("nag needs within a factor 2 of aor_hb's iterations") {
  auto q = random_quadratic(100, 1e4, 19);
  SolverConfig c = quiet(100000);
  c.reference_x = quadratic_minimizer(*q);
  c.rel_error_tolerance = 1e-6;
  c.record_objective = false;
  const Vector x0 = to::normal(100, 20);
  const long a = aor_hb(*q, x0, std::nullopt, c).iterations;
  const long n = nag(*q, x0, std::nullopt, c).iterations;
  MESSAGE("aor_hb " << a << " nag " << n);
  CHECK(n <= 2 * a);
  CHECK(a <= 2 * n);
}

TEST_CASE("mu = 0 is rejected with a pointer to aor_hb_zero") {
  auto ls = generate_instance(ProblemKind::least_squares_singular, {10}, std::nullopt, 21).smooth();
  REQUIRE(ls->mu() == 0.0);
  const Vector x0 = Vector::Zero(10);
  try {
    aor_hb(*ls, x0, std::nullopt, quiet(5));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("aor_hb_zero") != std::string::npos);
  }
  CHECK_THROWS_AS(aor_hb_two_var(*ls, x0, x0, quiet(5)), ConfigError);
  CHECK_THROWS_AS(nag(*ls, x0, std::nullopt, quiet(5)), ConfigError);
  CHECK_THROWS_AS(heavy_ball_polyak(*ls, x0, std::nullopt, quiet(5)), ConfigError);
  CHECK_NOTHROW(aor_hb_zero(*ls, x0, quiet(5)));
}

TEST_CASE("non-finite iterates") {
  // Deliberately wrong L makes every step overshoot.
  auto bad = std::make_shared<FunctionOracle>(
      2, [](const Vector& x) { return 50 * x.squaredNorm(); }, [](const Vector& x) -> Vector { return 100 * x; },
      1.0, 1.0);
  const Vector x0 = Vector::Ones(2);
  CHECK_THROWS_AS(aor_hb(*bad, x0, std::nullopt, quiet(100000)), DivergenceError);
  CHECK_THROWS_AS(gradient_descent(*bad, x0, quiet(100000)), DivergenceError);
  auto hb = heavy_ball_polyak(*bad, x0, std::nullopt, quiet(100000));
  CHECK(hb.diverged());
  CHECK(hb.diverged_at > 0);
}

TEST_CASE("aor_hb_zero meets its O(1/k^2) bound on singular least squares") {
  auto inst = generate_instance(ProblemKind::least_squares_singular, {30}, std::nullopt, 23);
  const auto& ls = dynamic_cast<const LeastSquaresOracle&>(*inst.smooth());
  const Vector x_star = ls.matrix().completeOrthogonalDecomposition().solve(ls.rhs());
  const double f_star = 0.5 * (ls.matrix() * x_star - ls.rhs()).squaredNorm();
  const Vector x0 = to::normal(30, 24);
  const double L = ls.lipschitz();
  const Vector v0 = x0 + ls.gradient(x0) / (2 * L);
  const double E0 = ls.value(x0) - f_star + L * (v0 - x_star).squaredNorm();
  CHECK(aor_hb_zero_initial_energy(ls, x0, x_star, f_star) == doctest::Approx(E0).epsilon(1e-12));

  SolverConfig c = quiet(3000);
  c.reference_x = x_star;
  c.reference_f = f_star;
  auto t = aor_hb_zero(ls, x0, c);
  long bad = 0;
  for (const auto& r : t.rows) {
    const double k = static_cast<double>(r.k);
    if (r.obj_gap > 6 * E0 / ((k + 3) * (k + 2)) + 1e-9 * E0) ++bad;
  }
  CHECK(bad == 0);
  CHECK(t.rows.back().obj_gap < 1e-3 * E0);
}

TEST_CASE("per-step certificate and sandwich on the strongly convex zoo") {
  struct Case {
    std::string name;
    OraclePtr f;
    Vector x_star;
  };
  std::vector<Case> cases;
  {
    auto q = random_quadratic(30, 1e3, 25);
    cases.push_back({"quadratic", q, quadratic_minimizer(*q)});
  }
  {
    auto pw = generate_instance(ProblemKind::piecewise, {20, 5}, std::nullopt, 26).smooth();
    cases.push_back({"piecewise", pw, tight_minimizer(*pw)});
  }
  {
    auto lg = generate_instance(ProblemKind::logistic, {15, 25}, std::nullopt, 27).smooth();
    cases.push_back({"logistic", lg, tight_minimizer(*lg)});
  }
  {
    auto lp = generate_instance(ProblemKind::lasso, {40, 12}, std::nullopt, 28).composite();
    const auto& ls = dynamic_cast<const LeastSquaresOracle&>(*lp.f);
    cases.push_back({"least squares", lp.f, ls.matrix().colPivHouseholderQr().solve(ls.rhs())});
  }
  {
    auto sp = generate_instance(ProblemKind::mspbe, {12, 6}, 50.0, 29).saddle_ptr();
    for (auto [name, g] : {std::pair{"mspbe f", sp->f_ptr()}, std::pair{"mspbe g", sp->g_ptr()}}) {
      const auto& q = dynamic_cast<const QuadraticOracle&>(*g);
      cases.push_back({name, g, quadratic_minimizer(q)});
    }
  }

  for (const auto& cs : cases) {
    INFO(cs.name);
    const double alpha = std::sqrt(cs.f->mu() / cs.f->lipschitz());
    SolverConfig c = quiet(200000);
    c.reference_x = cs.x_star;
    c.rel_error_tolerance = 1e-6;
    const Vector x0 = cs.x_star + to::normal(cs.f->dim(), 30, 1.0);
    const Vector y0 = cs.x_star + to::normal(cs.f->dim(), 31, 1.0);
    auto t = aor_hb_two_var(*cs.f, x0, y0, c);
    CHECK(t.stop == StopReason::rel_error_tolerance);
    const auto cert = certify_decay(t, 1 / (1 + alpha / 2), 1e-9);
    CHECK(cert.passed());
    CHECK(cert.worst_ratio <= 1 / (1 + alpha / 2) + 1e-9);
    long sandwich_bad = 0;
    for (const auto& r : t.rows)
      if (r.Ealpha < -1e-12 * r.E || r.Ealpha > 2 * r.E * (1 + 1e-12)) ++sandwich_bad;
    CHECK(sandwich_bad == 0);
  }
}
