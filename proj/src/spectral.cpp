#include "klgauss/spectral.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "fft_plans.hpp"

namespace klgauss {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

Grid1D::Grid1D(int n, GridKind kind) : n_(n), kind_(kind) {
  if (n < 2) throw InvalidArgument("grid needs at least 2 points");
  h_ = kind == GridKind::Periodic ? 1.0 / n : 1.0 / (n + 1);
}

Grid1D Grid1D::periodic(int n_points) { return Grid1D(n_points, GridKind::Periodic); }
Grid1D Grid1D::dirichlet(int n_points) { return Grid1D(n_points, GridKind::Dirichlet); }

double Grid1D::node(int i) const {
  return kind_ == GridKind::Periodic ? i * h_ : (i + 1) * h_;
}

Vec Grid1D::nodes() const {
  Vec x(n_);
  for (int i = 0; i < n_; ++i) x[i] = node(i);
  return x;
}

double FourierMode::operator()(double x) const {
  const double arg = kTwoPi * frequency * x;
  return std::numbers::sqrt2 * (parity == Parity::Sine ? std::sin(arg) : std::cos(arg));
}

FourierMode fourier_eigenpairs(int n, double delta) {
  if (n < 1) throw InvalidArgument("mode index must be >= 1");
  if (!(delta > 0.0)) throw InvalidArgument("prior scale must be positive");
  const int freq = (n + 1) / 2;
  const double w = kTwoPi * freq;
  return {n % 2 == 1 ? Parity::Sine : Parity::Cosine, freq, delta / (w * w)};
}

struct FourierBasis::Plans {
  int n;
  fftw_plan forward;
  fftw_plan backward;

  explicit Plans(int n_points) : n(n_points) {
    std::vector<double> a(n), b(n);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_r2r_1d(n, a.data(), b.data(), FFTW_R2HC, flags);
    backward = fftw_plan_r2r_1d(n, a.data(), b.data(), FFTW_HC2R, flags);
  }
  ~Plans() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

FourierBasis::FourierBasis(const Grid1D& grid, double delta, int n_modes)
    : grid_(grid), delta_(delta) {
  if (grid.kind() != GridKind::Periodic) throw InvalidArgument("Fourier basis needs a periodic grid");
  if (!(delta > 0.0)) throw InvalidArgument("prior scale must be positive");
  const int max_modes = 2 * ((grid.size() - 1) / 2);
  if (n_modes < 0 || n_modes > max_modes)
    throw InvalidArgument("mode count must lie in [1, " + std::to_string(max_modes) + "]");
  n_modes_ = n_modes == 0 ? max_modes : n_modes;
  if (n_modes_ < 1) throw InvalidArgument("grid too coarse for any Fourier mode");
  plans_ = std::make_shared<const Plans>(grid.size());
}

double FourierBasis::eigenvalue(int k) const { return fourier_eigenpairs(k, delta_).eigenvalue; }
double FourierBasis::amplitude(int k) const { return std::sqrt(eigenvalue(k)); }

Vec FourierBasis::synthesize(const Vec& coeffs) const {
  const int n = grid_.size();
  if (coeffs.size() > n_modes_) throw InvalidArgument("too many coefficients for basis");
  std::vector<double> hc(n, 0.0);
  const double s = 0.5 * std::numbers::sqrt2;
  for (int k = 1; k <= coeffs.size(); ++k) {
    const int f = (k + 1) / 2;
    if (k % 2 == 1)
      hc[n - f] = -s * coeffs[k - 1];
    else
      hc[f] = s * coeffs[k - 1];
  }
  Vec out(n);
  fftw_execute_r2r(plans_->backward, hc.data(), out.data());
  return out;
}

Vec FourierBasis::analyze(const Vec& field) const {
  const int n = grid_.size();
  if (field.size() != n) throw InvalidArgument("field length does not match grid");
  std::vector<double> in(field.data(), field.data() + n), hc(n);
  fftw_execute_r2r(plans_->forward, in.data(), hc.data());
  const double s = grid_.spacing() * std::numbers::sqrt2;
  Vec c(n_modes_);
  for (int k = 1; k <= n_modes_; ++k) {
    const int f = (k + 1) / 2;
    c[k - 1] = k % 2 == 1 ? -s * hc[n - f] : s * hc[f];
  }
  return c;
}

Vec FourierBasis::apply_covariance(const Vec& field) const {
  Vec c = analyze(field);
  for (int k = 1; k <= n_modes_; ++k) c[k - 1] *= eigenvalue(k);
  return synthesize(c);
}

double FourierBasis::cm_inner(const Vec& a, const Vec& b) const {
  const Vec ca = analyze(a);
  const Vec cb = analyze(b);
  double s = 0.0;
  for (int k = 1; k <= n_modes_; ++k) s += ca[k - 1] * cb[k - 1] / eigenvalue(k);
  return s;
}

DirichletPrecision::DirichletPrecision(int n) : n_(n), h_(1.0 / (n + 1)) {
  if (n < 2) throw InvalidArgument("Dirichlet precision needs n >= 2");
}

DirichletPrecision dirichlet_precision(int n) { return DirichletPrecision(n); }

Mat DirichletPrecision::dense() const {
  Mat L = Mat::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) {
    L(i, i) = diagonal();
    if (i + 1 < n_) L(i, i + 1) = L(i + 1, i) = off_diagonal();
  }
  return L;
}

Vec DirichletPrecision::apply(const Vec& v) const {
  if (v.size() != n_) throw InvalidArgument("vector length does not match precision");
  Vec out(n_);
  for (int i = 0; i < n_; ++i) {
    double s = diagonal() * v[i];
    if (i > 0) s += off_diagonal() * v[i - 1];
    if (i + 1 < n_) s += off_diagonal() * v[i + 1];
    out[i] = s;
  }
  return out;
}

Vec DirichletPrecision::solve(const Vec& rhs) const {
  if (rhs.size() != n_) throw InvalidArgument("vector length does not match precision");
  return solve_tridiagonal(Vec::Constant(n_, diagonal()), Vec::Constant(n_ - 1, off_diagonal()), rhs);
}

double DirichletPrecision::log_det(const Vec& shift) const {
  if (shift.size() != 0 && shift.size() != n_) throw InvalidArgument("shift length does not match precision");
  const double o2 = off_diagonal() * off_diagonal();
  double pivot = 0.0, total = 0.0;
  for (int i = 0; i < n_; ++i) {
    const double a = diagonal() + (shift.size() ? shift[i] : 0.0);
    pivot = i == 0 ? a : a - o2 / pivot;
    if (!(pivot > 0.0)) throw NotACovariance("shifted precision is not positive definite", pivot);
    total += std::log(pivot);
  }
  return total;
}

Vec solve_tridiagonal(const Vec& diag, const Vec& off, const Vec& rhs) {
  const Eigen::Index n = diag.size();
  if (rhs.size() != n || off.size() != std::max<Eigen::Index>(n - 1, 0))
    throw InvalidArgument("tridiagonal system has inconsistent sizes");
  Vec c(n), d(n);
  double denom = diag[0];
  if (denom == 0.0) throw SingularFactor("zero pivot in tridiagonal solve");
  c[0] = n > 1 ? off[0] / denom : 0.0;
  d[0] = rhs[0] / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag[i] - off[i - 1] * c[i - 1];
    if (denom == 0.0) throw SingularFactor("zero pivot in tridiagonal solve");
    c[i] = i + 1 < n ? off[i] / denom : 0.0;
    d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
  }
  Vec x(n);
  x[n - 1] = d[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

int reference_dim(const ReferenceOp& ref) {
  return std::visit(Overloaded{[](const UnitScalar&) { return 1; },
                               [](const FourierBasis& b) { return b.grid().size(); },
                               [](const DirichletPrecision& p) { return p.size(); }},
                    ref);
}

double quadrature_weight(const ReferenceOp& ref) {
  return std::visit(Overloaded{[](const UnitScalar&) { return 1.0; },
                               [](const FourierBasis& b) { return b.grid().spacing(); },
                               [](const DirichletPrecision& p) { return p.spacing(); }},
                    ref);
}

double grid_inner(const ReferenceOp& ref, const Vec& a, const Vec& b) {
  return quadrature_weight(ref) * a.dot(b);
}

Vec apply_reference_covariance(const ReferenceOp& ref, const Vec& f) {
  return std::visit(Overloaded{[&](const UnitScalar&) -> Vec { return f; },
                               [&](const FourierBasis& b) -> Vec { return b.apply_covariance(f); },
                               [&](const DirichletPrecision& p) -> Vec { return p.solve(f); }},
                    ref);
}

double cm_inner(const ReferenceOp& ref, const Vec& a, const Vec& b) {
  if (a.size() != reference_dim(ref) || b.size() != reference_dim(ref))
    throw InvalidArgument("vector length does not match reference operator");
  return std::visit(
      Overloaded{[&](const UnitScalar&) { return a.dot(b); },
                 [&](const FourierBasis& basis) { return basis.cm_inner(a, b); },
                 [&](const DirichletPrecision& p) { return p.spacing() * a.dot(p.apply(b)); }},
      ref);
}

double cameron_martin_sq(const Vec& m, const Vec& m0, const ReferenceOp& ref) {
  if (m.size() != m0.size()) throw InvalidArgument("mean and reference mean differ in length");
  const Vec d = m - m0;
  return cm_inner(ref, d, d);
}

const char* cov_kind_name(const CovParam& cov) {
  return std::visit(Overloaded{[](const ScalarVariance&) { return "scalar-variance"; },
                               [](const FiniteRank&) { return "finite-rank"; },
                               [](const ConstantPotential&) { return "constant-potential"; },
                               [](const VariablePotential&) { return "variable-potential"; }},
                    cov);
}

}  // namespace klgauss
