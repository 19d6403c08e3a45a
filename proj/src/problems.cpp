#include "aorhb/problems.hpp"

#include "aorhb/composite.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace aorhb {

namespace {

// Largest singular value; exact for dense matrices of moderate size, power
// iteration beyond that.
double matrix_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  if (std::min(M.rows(), M.cols()) <= 512) {
    Eigen::BDCSVD<Matrix> svd(M);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  }
  return spectral_norm(LinearMap::from_matrix(M));
}

// Extreme eigenvalues of M^T M, via the smaller Gram matrix.
std::pair<double, double> gram_extremes(const Matrix& M) {
  const Matrix G = M.rows() < M.cols() ? Matrix(M * M.transpose()) : Matrix(M.transpose() * M);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  double lo = ev[0];
  // The Gram matrix of a wide matrix misses the zero eigenvalues of M^T M.
  if (M.rows() < M.cols()) lo = 0.0;
  return {std::max(lo, 0.0), ev[ev.size() - 1]};
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// softplus(t + d) - softplus(t) - sigmoid(t) d without cancellation.
double softplus_bregman(double t, double d) {
  const double s = sigmoid(t);
  if (std::abs(d) < 1.0) return std::log1p(s * std::expm1(d)) - s * d;
  return softplus(t + d) - softplus(t) - s * d;
}

}  // namespace

// ---------------------------------------------------------------------------

QuadraticOracle::QuadraticOracle(QuadraticSpec spec) : spec_(std::move(spec)) {
  const Matrix& A = spec_.A;
  if (A.rows() == 0 || A.rows() != A.cols()) throw ConstructionError("quadratic: A must be square and nonempty");
  if (spec_.b.size() != A.rows()) throw ConstructionError("quadratic: b has wrong length");
  if (!A.allFinite() || !spec_.b.allFinite()) throw ConstructionError("quadratic: non-finite data");
  const double asym = (A - A.transpose()).norm();
  if (asym > 1e-12 * std::max(1.0, A.norm())) throw ConstructionError("quadratic: A is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  mu_ = es.eigenvalues()[0];
  lipschitz_ = es.eigenvalues()[A.rows() - 1];
  if (!(mu_ > 0)) throw ConstructionError("quadratic: A is not positive definite (lambda_min <= 0)");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) throw ConstructionError("quadratic: Cholesky failed");
  minimizer_ = llt.solve(spec_.b);
}

double QuadraticOracle::value(const Vector& x) const {
  return 0.5 * x.dot(spec_.A * x) - spec_.b.dot(x) + spec_.c;
}

Vector QuadraticOracle::gradient(const Vector& x) const { return spec_.A * x - spec_.b; }

double QuadraticOracle::bregman(const Vector& y, const Vector& x) const {
  const Vector d = y - x;
  return 0.5 * d.dot(spec_.A * d);
}

std::shared_ptr<const QuadraticOracle> make_quadratic(QuadraticSpec spec) {
  return std::make_shared<const QuadraticOracle>(std::move(spec));
}

// ---------------------------------------------------------------------------

double piecewise_h(double t, double r) { return t > 0 ? 0.5 * t * t * std::exp(-r / t) : 0.0; }

double piecewise_h_prime(double t, double r) { return t > 0 ? std::exp(-r / t) * (t + 0.5 * r) : 0.0; }

double piecewise_h_second(double t, double r) {
  if (t <= 0) return 0.0;
  const double u = r / t;
  return std::exp(-u) * (1.0 + u + 0.5 * u * u);
}

PiecewiseOracle::PiecewiseOracle(PiecewiseSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.r > 0)) throw ConstructionError("piecewise: r must be positive");
  if (!(spec_.mu > 0)) throw ConstructionError("piecewise: mu must be positive");
  if (!(spec_.lipschitz >= spec_.mu)) throw ConstructionError("piecewise: need L >= mu");
  if (spec_.A.rows() == 0 || spec_.A.cols() != spec_.b.size())
    throw ConstructionError("piecewise: A must be d x p with b of length p");
  const double target = std::sqrt(spec_.lipschitz - spec_.mu);
  const double norm = matrix_norm(spec_.A);
  if (std::abs(norm - target) > 1e-4 * std::max(target, 1e-300))
    throw ConstructionError("piecewise: |A| = " + std::to_string(norm) + " but sqrt(L - mu) = " +
                            std::to_string(target));
}

double PiecewiseOracle::value(const Vector& x) const {
  const Vector t = spec_.A.transpose() * x - spec_.b;
  double s = 0.0;
  for (Index i = 0; i < t.size(); ++i) s += piecewise_h(t[i], spec_.r);
  return s + 0.5 * spec_.mu * x.squaredNorm();
}

Vector PiecewiseOracle::gradient(const Vector& x) const {
  const Vector t = spec_.A.transpose() * x - spec_.b;
  Vector w(t.size());
  for (Index i = 0; i < t.size(); ++i) w[i] = piecewise_h_prime(t[i], spec_.r);
  return spec_.A * w + spec_.mu * x;
}

double PiecewiseOracle::bregman(const Vector& y, const Vector& x) const {
  const Vector tx = spec_.A.transpose() * x - spec_.b;
  const Vector d = spec_.A.transpose() * (y - x);
  double s = 0.0;
  for (Index i = 0; i < tx.size(); ++i) {
    const double a = tx[i];
    const double b = a + d[i];
    double term;
    if (a > 0 && b > 0) {
      // Smooth branch: integral of (h'(a + s d) - h'(a)) d over s, by
      // 5-point Gauss-Legendre on h'', which is exact to high order here and
      // avoids cancellation when d is small.
      static const double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                      0.5384693101056831, 0.9061798459386640};
      static const double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                        0.4786286704993665, 0.2369268850561891};
      // D = d^2 * int_0^1 (1 - s) h''(a + s d) ds
      double acc = 0.0;
      for (int j = 0; j < 5; ++j) {
        const double sj = 0.5 * (nodes[j] + 1.0);
        acc += 0.5 * weights[j] * (1.0 - sj) * piecewise_h_second(a + sj * d[i], spec_.r);
      }
      const double quad = d[i] * d[i] * acc;
      const double direct = piecewise_h(b, spec_.r) - piecewise_h(a, spec_.r) - piecewise_h_prime(a, spec_.r) * d[i];
      // Quadrature is only trusted for short segments relative to the curvature scale.
      term = std::abs(d[i]) < 1e-3 * std::max(a, spec_.r) ? quad : direct;
    } else {
      term = piecewise_h(b, spec_.r) - piecewise_h(a, spec_.r) - piecewise_h_prime(a, spec_.r) * d[i];
    }
    s += std::max(term, 0.0);
  }
  return s + 0.5 * spec_.mu * (y - x).squaredNorm();
}

std::shared_ptr<const PiecewiseOracle> make_piecewise(PiecewiseSpec spec) {
  return std::make_shared<const PiecewiseOracle>(std::move(spec));
}

// ---------------------------------------------------------------------------

LogisticOracle::LogisticOracle(LogisticSpec spec) : spec_(std::move(spec)) {
  const Matrix& F = spec_.features;
  if (F.rows() == 0 || F.cols() == 0) throw ConstructionError("logistic: empty dataset");
  if (spec_.labels.size() != F.rows()) throw ConstructionError("logistic: labels/features mismatch");
  for (Index i = 0; i < spec_.labels.size(); ++i)
    if (spec_.labels[i] != 1.0 && spec_.labels[i] != -1.0)
      throw ConstructionError("logistic: labels must be +1 or -1");
  if (!(spec_.lambda_reg >= 0)) throw ConstructionError("logistic: lambda must be nonnegative");
  lipschitz_ = gram_extremes(F).second + spec_.lambda_reg;
  if (!(lipschitz_ > 0)) throw ConstructionError("logistic: zero Lipschitz constant");
}

double LogisticOracle::value(const Vector& x) const {
  const Vector t = -(spec_.labels.array() * (spec_.features * x).array()).matrix();
  double s = 0.0;
  for (Index i = 0; i < t.size(); ++i) s += softplus(t[i]);
  return s + 0.5 * spec_.lambda_reg * x.squaredNorm();
}

Vector LogisticOracle::gradient(const Vector& x) const {
  const Vector t = -(spec_.labels.array() * (spec_.features * x).array()).matrix();
  Vector w(t.size());
  for (Index i = 0; i < t.size(); ++i) w[i] = -spec_.labels[i] * sigmoid(t[i]);
  return spec_.features.transpose() * w + spec_.lambda_reg * x;
}

double LogisticOracle::bregman(const Vector& y, const Vector& x) const {
  const Vector tx = -(spec_.labels.array() * (spec_.features * x).array()).matrix();
  const Vector d = -(spec_.labels.array() * (spec_.features * (y - x)).array()).matrix();
  double s = 0.0;
  for (Index i = 0; i < tx.size(); ++i) s += std::max(softplus_bregman(tx[i], d[i]), 0.0);
  return s + 0.5 * spec_.lambda_reg * (y - x).squaredNorm();
}

std::shared_ptr<const LogisticOracle> make_logistic(LogisticSpec spec) {
  return std::make_shared<const LogisticOracle>(std::move(spec));
}

// ---------------------------------------------------------------------------

LeastSquaresOracle::LeastSquaresOracle(Matrix A, Vector b, bool allow_singular)
    : A_(std::move(A)), b_(std::move(b)) {
  if (A_.size() == 0 || A_.rows() != b_.size()) throw ConstructionError("least squares: shape mismatch");
  auto [lo, hi] = gram_extremes(A_);
  lipschitz_ = hi;
  if (!(hi > 0)) throw ConstructionError("least squares: A is zero");
  const double tol = 1e-12 * hi * static_cast<double>(std::max(A_.rows(), A_.cols()));
  if (lo <= tol) {
    if (!allow_singular)
      throw ConstructionError(
          "least squares: A^T A is singular (mu = 0); use aor_hb_zero or add regularisation");
    lo = 0.0;
  }
  mu_ = lo;
}

double LeastSquaresOracle::value(const Vector& x) const { return 0.5 * (A_ * x - b_).squaredNorm(); }

Vector LeastSquaresOracle::gradient(const Vector& x) const { return A_.transpose() * (A_ * x - b_); }

double LeastSquaresOracle::bregman(const Vector& y, const Vector& x) const {
  return 0.5 * (A_ * (y - x)).squaredNorm();
}

Vector LeastSquaresOracle::min_norm_solution() const {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A_);
  Vector x = cod.solve(b_);
  // Refinement; each correction is itself a min-norm solution, so x stays in range(A^T).
  for (int it = 0; it < 2; ++it) x += cod.solve(b_ - A_ * x);
  return x;
}

double LeastSquaresOracle::min_value() const { return value(min_norm_solution()); }

Vector LeastSquaresOracle::null_space_projection(const Vector& x) const {
  Eigen::JacobiSVD<Matrix> svd(A_, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double tol = s.size() ? s[0] * 1e-10 : 0.0;
  Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  const Matrix& V = svd.matrixV();
  const Matrix N = V.rightCols(V.cols() - rank);
  return N * (N.transpose() * x);
}

// ---------------------------------------------------------------------------

double CompositeProblem::objective(const Vector& x) const {
  const auto gv = g->value(x);
  if (!gv) throw ConfigError("composite objective: g has no value");
  return f->value(x) + *gv;
}

SaddleProblem::SaddleProblem(OraclePtr f, OraclePtr g, Matrix B, std::optional<double> B_norm)
    : f_(std::move(f)), g_(std::move(g)), B_(std::move(B)) {
  if (!f_ || !g_) throw ConstructionError("saddle: f and g required");
  if (B_.rows() != g_->dim() || B_.cols() != f_->dim())
    throw ConstructionError("saddle: B must be n x m with n = dim g, m = dim f");
  if (!(f_->mu() > 0 && g_->mu() > 0)) throw ConstructionError("saddle: mu_f and mu_g must be positive");
  B_norm_ = B_norm ? *B_norm : matrix_norm(B_);
  if (!(B_norm_ >= 0)) throw ConstructionError("saddle: invalid |B|");
  if (B_norm && std::min(B_.rows(), B_.cols()) <= 512) {
    const double exact = matrix_norm(B_);
    if (B_norm_ < exact - 1e-6 * std::max(exact, B_norm_))
      throw ConstructionError("saddle: supplied |B| underestimates the spectral norm");
  }
}

double SaddleProblem::lagrangian(const Vector& u, const Vector& p) const {
  return f_->value(u) - g_->value(p) + p.dot(B_ * u);
}

Vector SaddleProblem::monotone_operator(const Vector& u, const Vector& p) const {
  Vector out(m() + n());
  out.head(m()) = f_->gradient(u) + B_.transpose() * p;
  out.tail(n()) = g_->gradient(p) - B_ * u;
  return out;
}

SaddlePoint solve_quadratic_saddle(const SaddleProblem& problem) {
  const auto* qf = dynamic_cast<const QuadraticOracle*>(problem.f_ptr().get());
  const auto* qg = dynamic_cast<const QuadraticOracle*>(problem.g_ptr().get());
  if (!qf || !qg) throw ConfigError("solve_quadratic_saddle: f and g must be quadratic");
  const Index m = problem.m(), n = problem.n();
  const Matrix& B = problem.B();
  // [A_f  B^T; -B  A_g] [u; p] = [b_f; b_g]
  Matrix K(m + n, m + n);
  K.topLeftCorner(m, m) = qf->hessian();
  K.topRightCorner(m, n) = B.transpose();
  K.bottomLeftCorner(n, m) = -B;
  K.bottomRightCorner(n, n) = qg->hessian();
  Vector rhs(m + n);
  rhs << qf->linear_term(), qg->linear_term();
  Eigen::PartialPivLU<Matrix> lu(K);
  Vector z = lu.solve(rhs);
  // Iterative refinement with the residual accumulated in long double.
  for (int it = 0; it < 4; ++it) {
    Vector r(m + n);
    for (Index i = 0; i < m + n; ++i) {
      long double acc = rhs[i];
      for (Index j = 0; j < m + n; ++j) acc -= static_cast<long double>(K(i, j)) * z[j];
      r[i] = static_cast<double>(acc);
    }
    z += lu.solve(r);
  }
  return {z.head(m), z.tail(n)};
}

std::shared_ptr<const SaddleProblem> make_mspbe(const Matrix& B, const Matrix& C, const Vector& b) {
  if (C.rows() != B.rows() || b.size() != B.rows()) throw ConstructionError("mspbe: shape mismatch");
  const Index m = B.cols();
  auto f = make_quadratic({Matrix::Identity(m, m), Vector::Zero(m), 0.0});
  std::shared_ptr<const QuadraticOracle> g;
  try {
    g = make_quadratic({C, -b, 0.0});
  } catch (const ConstructionError& e) {
    throw ConstructionError(std::string("mspbe: C is not symmetric positive definite: ") + e.what());
  }
  return std::make_shared<const SaddleProblem>(f, g, B);
}

CompositeProblem make_lasso(const Matrix& A, const Vector& b, double lambda) {
  if (!(lambda >= 0)) throw ConstructionError("lasso: lambda must be nonnegative");
  auto f = std::make_shared<const LeastSquaresOracle>(A, b, false);
  CompositeProblem problem;
  problem.f = f;
  if (lambda > 0)
    problem.g = std::make_shared<const L1Prox>(lambda);
  else {
    problem.g = std::make_shared<const ZeroProx>();
    problem.reference_solution = f->min_norm_solution();
  }
  return problem;
}

// ---------------------------------------------------------------------------

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::quadratic: return "quadratic";
    case ProblemKind::piecewise: return "piecewise";
    case ProblemKind::logistic: return "logistic";
    case ProblemKind::lasso: return "lasso";
    case ProblemKind::l1l2: return "l1l2";
    case ProblemKind::least_squares_singular: return "least_squares_singular";
    case ProblemKind::mspbe: return "mspbe";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& name) {
  for (auto k : {ProblemKind::quadratic, ProblemKind::piecewise, ProblemKind::logistic, ProblemKind::lasso,
                 ProblemKind::l1l2, ProblemKind::least_squares_singular, ProblemKind::mspbe})
    if (to_string(k) == name) return k;
  throw ConfigError("unsupported problem kind '" + name + "'");
}

double InstanceSpec::constant(const std::string& key, double fallback) const {
  auto it = constants.find(key);
  return it == constants.end() ? fallback : it->second;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("instance spec: bad number for " + what + ": '" + s + "'");
  }
}

}  // namespace

std::string format_instance_spec(const InstanceSpec& spec) {
  std::ostringstream os;
  os << "kind " << to_string(spec.kind) << '\n';
  os << "dims";
  for (long d : spec.dims) os << ' ' << d;
  os << '\n';
  if (spec.kappa) os << "kappa " << format_double(*spec.kappa) << '\n';
  os << "seed " << spec.seed << '\n';
  for (const auto& [k, v] : spec.constants) os << "const " << k << ' ' << format_double(v) << '\n';
  return os.str();
}

InstanceSpec parse_instance_spec(const std::string& text) {
  InstanceSpec spec;
  bool have_kind = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "kind") {
      std::string v;
      ls >> v;
      spec.kind = problem_kind_from_string(v);
      have_kind = true;
    } else if (key == "dims") {
      spec.dims.clear();
      std::string v;
      while (ls >> v) spec.dims.push_back(static_cast<long>(parse_double(v, "dims")));
    } else if (key == "kappa") {
      std::string v;
      ls >> v;
      spec.kappa = parse_double(v, "kappa");
    } else if (key == "seed") {
      std::string v;
      ls >> v;
      try {
        spec.seed = std::stoull(v);
      } catch (const std::exception&) {
        throw ConfigError("instance spec: bad seed '" + v + "'");
      }
    } else if (key == "const") {
      std::string name, v;
      if (!(ls >> name >> v)) throw ConfigError("instance spec: const needs a name and value");
      spec.constants[name] = parse_double(v, name);
    } else {
      throw ConfigError("instance spec: unknown key '" + key + "'");
    }
  }
  if (!have_kind) throw ConfigError("instance spec: missing kind");
  return spec;
}

// ---------------------------------------------------------------------------

const OraclePtr& Instance::smooth() const {
  if (!is_smooth()) throw ConfigError("instance is not a smooth minimisation problem");
  return std::get<0>(problem);
}

const CompositeProblem& Instance::composite() const {
  if (!is_composite()) throw ConfigError("instance is not a composite problem");
  return std::get<1>(problem);
}

const SaddleProblem& Instance::saddle() const { return *saddle_ptr(); }

std::shared_ptr<const SaddleProblem> Instance::saddle_ptr() const {
  if (!is_saddle()) throw ConfigError("instance is not a saddle problem");
  return std::get<2>(problem);
}

Matrix random_orthogonal(Index n, std::uint64_t seed) {
  const Matrix G = random_normal(n, n, seed);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

Vector log_spaced(Index n, double lo, double hi) {
  Vector v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (Index i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  v[0] = lo;
  v[n - 1] = hi;
  return v;
}

namespace {

// Seeds for the independent random streams of one instance.
std::uint64_t stream(std::uint64_t seed, std::uint64_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

long dim_at(const InstanceSpec& spec, std::size_t i, const char* what) {
  if (spec.dims.size() <= i || spec.dims[i] <= 0)
    throw ConfigError(to_string(spec.kind) + ": missing or invalid dimension '" + what + "'");
  return spec.dims[i];
}

Matrix spd_with_spectrum(const Vector& eig, std::uint64_t seed) {
  const Matrix Q = random_orthogonal(eig.size(), seed);
  Matrix A = Q * eig.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

// Gaussian rows x cols matrix; with kappa the singular values are reshaped to
// be log-spaced in [1, sqrt(kappa)] so that cond(A^T A) = kappa.
Matrix shaped_gaussian(Index rows, Index cols, std::optional<double> kappa, std::uint64_t seed) {
  Matrix A = random_normal(rows, cols, seed);
  if (!kappa) return A;
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index r = svd.singularValues().size();
  Vector s = log_spaced(r, std::sqrt(*kappa), 1.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

void require_kappa(const InstanceSpec& spec) {
  if (!spec.kappa) throw ConfigError(to_string(spec.kind) + ": kappa is required");
  if (!(*spec.kappa >= 1)) throw ConfigError("kappa must be >= 1");
}

}  // namespace

Instance generate_instance(const InstanceSpec& spec) {
  if (spec.kappa && !(*spec.kappa >= 1)) throw ConfigError("kappa must be >= 1");
  Instance inst;
  inst.spec = spec;
  const std::uint64_t seed = spec.seed;

  switch (spec.kind) {
    case ProblemKind::quadratic: {
      require_kappa(spec);
      const long d = dim_at(spec, 0, "d");
      const double mu = spec.constant("mu", 1.0);
      const Matrix A = spd_with_spectrum(log_spaced(d, mu, mu * *spec.kappa), stream(seed, 1));
      const Vector b = spec.constant("b_scale", 1.0) * random_normal(d, stream(seed, 2));
      auto q = make_quadratic({A, b, 0.0});
      inst.reference = q->minimizer();
      inst.problem = OraclePtr(q);
      break;
    }
    case ProblemKind::piecewise: {
      const long d = dim_at(spec, 0, "d");
      const long p = spec.dims.size() > 1 ? dim_at(spec, 1, "p") : 5;
      PiecewiseSpec ps;
      ps.mu = spec.constant("mu", 1.0);
      ps.lipschitz = spec.kappa ? ps.mu * *spec.kappa : spec.constant("L", 1e4);
      ps.r = spec.constant("r", 1e-6);
      Matrix A = random_normal(d, p, stream(seed, 1));
      A *= std::sqrt(ps.lipschitz - ps.mu) / matrix_norm(A);
      ps.A = A;
      ps.b = random_normal(p, stream(seed, 2));
      inst.problem = OraclePtr(make_piecewise(std::move(ps)));
      break;
    }
    case ProblemKind::logistic: {
      const long m = dim_at(spec, 0, "m");
      const long d = dim_at(spec, 1, "d");
      LogisticSpec ls;
      ls.lambda_reg = spec.constant("lambda", 0.1);
      Matrix F = random_normal(m, d, stream(seed, 1));
      if (spec.kappa) {
        // Scale so that (lambda_max + lambda) / lambda = kappa.
        const double top = gram_extremes(F).second;
        F *= std::sqrt((*spec.kappa - 1.0) * ls.lambda_reg / top);
      }
      ls.features = F;
      std::mt19937_64 rng(stream(seed, 2));
      std::bernoulli_distribution coin(0.5);
      ls.labels.resize(m);
      for (long i = 0; i < m; ++i) ls.labels[i] = coin(rng) ? 1.0 : -1.0;
      inst.problem = OraclePtr(make_logistic(std::move(ls)));
      break;
    }
    case ProblemKind::lasso:
    case ProblemKind::l1l2: {
      const long rows = dim_at(spec, 0, "rows");
      const long cols = dim_at(spec, 1, "cols");
      const Matrix A = shaped_gaussian(rows, cols, spec.kappa, stream(seed, 1));
      const long sparsity = static_cast<long>(spec.constant("sparsity", 5));
      std::vector<long> idx(cols);
      std::iota(idx.begin(), idx.end(), 0);
      std::mt19937_64 rng(stream(seed, 2));
      std::shuffle(idx.begin(), idx.end(), rng);
      Vector x_true = Vector::Zero(cols);
      const Vector vals = random_normal(cols, stream(seed, 3));
      for (long i = 0; i < std::min(sparsity, cols); ++i) x_true[idx[i]] = vals[i];
      const Vector b = A * x_true;
      const double lambda = spec.constant("lambda", 0.8);
      CompositeProblem cp;
      cp.f = std::make_shared<const LeastSquaresOracle>(A, b, false);
      if (spec.kind == ProblemKind::lasso)
        cp.g = std::make_shared<const L1Prox>(lambda);
      else
        cp.g = std::make_shared<const L1MinusL2Prox>(lambda);
      inst.problem = cp;
      break;
    }
    case ProblemKind::least_squares_singular: {
      long rows, cols, rank;
      if (spec.dims.size() >= 3) {
        rows = dim_at(spec, 0, "rows");
        cols = dim_at(spec, 1, "cols");
        rank = dim_at(spec, 2, "rank");
      } else {
        cols = dim_at(spec, 0, "d");
        rows = (4 * cols + 2) / 3;
        rank = std::max(1L, (2 * cols) / 3);
      }
      if (rank > std::min(rows, cols)) throw ConfigError("least_squares_singular: rank too large");
      const Matrix A = random_normal(rows, rank, stream(seed, 1)) * random_normal(rank, cols, stream(seed, 2)) /
                       std::sqrt(static_cast<double>(rank));
      const Vector b = random_normal(rows, stream(seed, 3));
      auto ls = std::make_shared<const LeastSquaresOracle>(A, b, true);
      inst.reference = ls->min_norm_solution();
      inst.problem = OraclePtr(ls);
      break;
    }
    case ProblemKind::mspbe: {
      require_kappa(spec);
      const long m = dim_at(spec, 0, "m");
      const long n = dim_at(spec, 1, "n");
      const double kg = *spec.kappa;
      const double mu_g = spec.constant("mu_g", 1.0);
      const Matrix C = spd_with_spectrum(log_spaced(n, mu_g, kg * mu_g), stream(seed, 1));
      Matrix B = random_normal(n, m, stream(seed, 2));
      B *= std::sqrt(kg) / matrix_norm(B);
      const Vector b = random_normal(n, stream(seed, 3));
      auto sp = make_mspbe(B, C, b);
      const SaddlePoint z = solve_quadratic_saddle(*sp);
      Vector ref(m + n);
      ref << z.u, z.p;
      inst.reference = ref;
      inst.problem = sp;
      break;
    }
  }
  return inst;
}

Instance generate_instance(ProblemKind kind, std::vector<long> dims, std::optional<double> kappa,
                           std::uint64_t seed) {
  InstanceSpec spec;
  spec.kind = kind;
  spec.dims = std::move(dims);
  spec.kappa = kappa;
  spec.seed = seed;
  return generate_instance(spec);
}

}  // namespace aorhb
