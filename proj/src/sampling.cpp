#include "klgauss/sampling.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/Eigenvalues>

namespace klgauss {

ScalarSampler::ScalarSampler(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw NotACovariance("scalar standard deviation must be positive", sigma);
}

Vec ScalarSampler::draw(RandomStream& rng) const {
  Vec u(1);
  u[0] = sigma_ * rng.normal();
  return u;
}

EigenFactorization factorize_symmetric(const Mat& A) {
  if (A.rows() != A.cols()) throw InvalidArgument("matrix is not square");
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success) throw SingularFactor("symmetric eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

FiniteRankSampler::FiniteRankSampler(const FourierBasis& basis, const Mat& B, int truncation)
    : basis_(basis), rank_(static_cast<int>(B.rows())) {
  truncation_ = truncation == 0 ? basis.n_modes() : truncation;
  if (truncation_ > basis.n_modes()) throw InvalidArgument("truncation exceeds the resolvable modes");
  if (truncation_ <= rank_) throw InvalidArgument("truncation must exceed the rank");
  if (rank_ > 0) {
    if (B.cols() != rank_) throw InvalidArgument("finite-rank factor must be square");
    const EigenFactorization eig = factorize_symmetric(0.5 * (B + B.transpose()));
    if (!(eig.eigenvalues[0] > 0.0))
      throw NotACovariance("finite-rank factor has non-positive eigenvalue " + std::to_string(eig.eigenvalues[0]),
                           eig.eigenvalues[0]);
    factor_ = eig.eigenvectors * eig.eigenvalues.asDiagonal();
  }
}

Vec FiniteRankSampler::coefficients(const Vec& xi) const {
  if (xi.size() != truncation_) throw InvalidArgument("noise vector length must equal the truncation");
  Vec c(truncation_);
  if (rank_ > 0) c.head(rank_) = factor_ * xi.head(rank_);
  for (int l = rank_ + 1; l <= truncation_; ++l) c[l - 1] = basis_.amplitude(l) * xi[l - 1];
  return c;
}

Vec FiniteRankSampler::draw(RandomStream& rng) const {
  return basis_.synthesize(coefficients(rng.normal_vector(truncation_)));
}

Vec sample_finite_rank(const GaussianSpec& spec, const FourierBasis& basis, int truncation, RandomStream& rng) {
  const auto* fr = std::get_if<FiniteRank>(&spec.cov);
  if (!fr) throw InvalidArgument("spec does not carry a finite-rank covariance");
  return FiniteRankSampler(basis, fr->B, truncation).draw(rng);
}

OuBridgeSampler::OuBridgeSampler(double B, double eps, const Grid1D& grid) : grid_(grid) {
  if (!(B > 0.0) || !(eps > 0.0)) throw InvalidArgument("OU bridge needs B > 0 and eps > 0");
  if (grid.kind() != GridKind::Dirichlet) throw InvalidArgument("OU bridge lives on a Dirichlet grid");
  const double a = std::sqrt(B) / eps;
  const double h = grid.spacing();
  decay_ = std::exp(-a * h);
  noise_sd_ = std::sqrt(-std::expm1(-2.0 * a * h) / a);
  const double denom = -std::expm1(-2.0 * a);
  bridge_ratio_.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    bridge_ratio_[i] = std::exp(a * (t - 1.0)) * (-std::expm1(-2.0 * a * t)) / denom;
  }
}

Vec OuBridgeSampler::draw(RandomStream& rng) const {
  const int n = grid_.size();
  Vec z(n);
  double zk = 0.0;
  for (int i = 0; i < n; ++i) {
    zk = decay_ * zk + noise_sd_ * rng.normal();
    z[i] = zk;
  }
  const double z1 = decay_ * zk + noise_sd_ * rng.normal();
  return z - bridge_ratio_ * z1;
}

Vec sample_ou_bridge(double B, double eps, const Grid1D& grid, RandomStream& rng) {
  return OuBridgeSampler(B, eps, grid).draw(rng);
}

PrecisionEigenSampler::PrecisionEigenSampler(EigenFactorization eig) : eig_(std::move(eig)) {
  const double lo = eig_.eigenvalues[0];
  if (!(lo > 0.0)) throw NotACovariance("precision has non-positive eigenvalue " + std::to_string(lo), lo);
  scaled_ = eig_.eigenvectors * eig_.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
}

PrecisionEigenSampler::PrecisionEigenSampler(const Mat& precision)
    : PrecisionEigenSampler(factorize_symmetric(precision)) {
  if ((precision - precision.transpose()).cwiseAbs().maxCoeff() > 1e-10 * precision.cwiseAbs().maxCoeff())
    throw InvalidArgument("precision matrix is not symmetric");
}

PrecisionEigenSampler PrecisionEigenSampler::from_tridiagonal(const Vec& diag, const Vec& off) {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw SingularFactor("tridiagonal eigensolver failed");
  return PrecisionEigenSampler(EigenFactorization{es.eigenvalues(), es.eigenvectors()});
}

Vec PrecisionEigenSampler::draw(RandomStream& rng) const { return scaled_ * rng.normal_vector(dim()); }

Vec sample_precision_eigen(const Mat& precision, RandomStream& rng) {
  return PrecisionEigenSampler(precision).draw(rng);
}

void potential_precision_tridiagonal(const DirichletPrecision& L, const Vec& b, double eps, Vec& diag, Vec& off) {
  const int n = L.size();
  if (b.size() != n) throw InvalidArgument("potential length does not match grid");
  const double h = L.spacing();
  diag = (Vec::Constant(n, L.diagonal()) + b / (2.0 * eps * eps)) * h;
  off = Vec::Constant(n - 1, L.off_diagonal() * h);
}

Mat potential_precision(const DirichletPrecision& L, const Vec& b, double eps) {
  Vec d, o;
  potential_precision_tridiagonal(L, b, eps, d, o);
  Mat P = Mat::Zero(L.size(), L.size());
  P.diagonal() = d;
  P.diagonal(1) = o;
  P.diagonal(-1) = o;
  return P;
}

namespace {

std::shared_ptr<const CenteredSampler> exact_potential_sampler(const DirichletPrecision& L, const Vec& b,
                                                               double eps) {
  Vec d, o;
  potential_precision_tridiagonal(L, b, eps, d, o);
  return std::make_shared<PrecisionEigenSampler>(PrecisionEigenSampler::from_tridiagonal(d, o));
}

const DirichletPrecision& require_dirichlet(const ReferenceOp& ref) {
  const auto* L = std::get_if<DirichletPrecision>(&ref);
  if (!L) throw InvalidArgument("potential covariance needs a Dirichlet reference");
  return *L;
}

}  // namespace

std::shared_ptr<const CenteredSampler> make_sampler(const CovParam& cov, const ReferenceOp& ref,
                                                    PotentialSampling mode) {
  return std::visit(
      Overloaded{
          [&](const ScalarVariance& s) -> std::shared_ptr<const CenteredSampler> {
            if (!std::holds_alternative<UnitScalar>(ref)) throw InvalidArgument("scalar variance needs scalar reference");
            return std::make_shared<ScalarSampler>(s.sigma);
          },
          [&](const FiniteRank& f) -> std::shared_ptr<const CenteredSampler> {
            const auto* basis = std::get_if<FourierBasis>(&ref);
            if (!basis) throw InvalidArgument("finite-rank covariance needs a Fourier reference");
            return std::make_shared<FiniteRankSampler>(*basis, f.B);
          },
          [&](const ConstantPotential& c) -> std::shared_ptr<const CenteredSampler> {
            const DirichletPrecision& L = require_dirichlet(ref);
            if (mode == PotentialSampling::OuBridge)
              return std::make_shared<OuBridgeSampler>(c.B, c.eps, Grid1D::dirichlet(L.size()));
            return exact_potential_sampler(L, Vec::Constant(L.size(), c.B), c.eps);
          },
          [&](const VariablePotential& v) -> std::shared_ptr<const CenteredSampler> {
            return exact_potential_sampler(require_dirichlet(ref), v.b, v.eps);
          }},
      cov);
}

std::shared_ptr<const CenteredSampler> make_reference_sampler(const ReferenceOp& ref) {
  return std::visit(
      Overloaded{[](const UnitScalar&) -> std::shared_ptr<const CenteredSampler> {
                   return std::make_shared<ScalarSampler>(1.0);
                 },
                 [](const FourierBasis& basis) -> std::shared_ptr<const CenteredSampler> {
                   return std::make_shared<FiniteRankSampler>(basis, Mat());
                 },
                 [](const DirichletPrecision& L) -> std::shared_ptr<const CenteredSampler> {
                   return exact_potential_sampler(L, Vec::Zero(L.size()), 1.0);
                 }},
      ref);
}

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ULL;
    }
  }
  void value(double x) { bytes(&x, sizeof x); }
  void values(const double* p, Eigen::Index n) { bytes(p, sizeof(double) * static_cast<std::size_t>(n)); }
};

}  // namespace

std::uint64_t hash_cov_param(const CovParam& cov) {
  Fnv1a f;
  const std::size_t tag = cov.index();
  f.bytes(&tag, sizeof tag);
  std::visit(Overloaded{[&](const ScalarVariance& s) { f.value(s.sigma); },
                        [&](const FiniteRank& r) { f.values(r.B.data(), r.B.size()); },
                        [&](const ConstantPotential& c) {
                          f.value(c.B);
                          f.value(c.eps);
                        },
                        [&](const VariablePotential& v) {
                          f.values(v.b.data(), v.b.size());
                          f.value(v.eps);
                        }},
             cov);
  return f.h;
}

std::shared_ptr<const CenteredSampler> SamplerCache::get(const CovParam& cov, const ReferenceOp& ref) {
  const std::uint64_t key = hash_cov_param(cov);
  if (!valid_ || key != key_) {
    sampler_ = make_sampler(cov, ref, mode_);
    key_ = key;
    valid_ = true;
    ++rebuilds_;
  }
  return sampler_;
}

ReweightedEstimate reweighted_expectation(const std::function<double(const Vec&)>& observable, const Vec& b,
                                          double eps, int M, RandomStream& rng) {
  if (M < 1) throw InvalidArgument("sample count must be positive");
  if (b.size() < 2) throw InvalidArgument("potential needs at least 2 nodes");
  if (!(b.minCoeff() > 0.0)) throw InvalidArgument("potential must be positive");
  const double b_bar = b.maxCoeff();
  const Grid1D grid = Grid1D::dirichlet(static_cast<int>(b.size()));
  const OuBridgeSampler sampler(b_bar, eps, grid);
  const double scale = grid.spacing() / (4.0 * eps * eps);

  Vec log_w(M), obs(M);
  for (int i = 0; i < M; ++i) {
    const Vec z = sampler.draw(rng);
    const double psi = scale * ((b.array() - b_bar) * z.array().square()).sum();
    log_w[i] = -psi;
    obs[i] = observable(z);
  }
  const double shift = log_w.maxCoeff();
  if (!std::isfinite(shift)) throw DegenerateWeights("importance weights are not finite", shift);
  const Vec w = (log_w.array() - shift).exp().matrix();
  const double sw = w.sum();
  if (!(sw > 0.0)) throw DegenerateWeights("all importance weights underflowed", shift);
  const double est = w.dot(obs) / sw;
  const double var = (w.array().square() * (obs.array() - est).square()).sum() / (sw * sw);
  return {est, std::sqrt(var), shift, sw * sw / w.squaredNorm()};
}

}  // namespace klgauss
