#include "klgauss/kl_objective.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/LU>

namespace klgauss {

namespace {

const DirichletPrecision& dirichlet_of(const ReferenceOp& ref) {
  const auto* L = std::get_if<DirichletPrecision>(&ref);
  if (!L) throw InvalidArgument("potential covariance needs a Dirichlet reference");
  return *L;
}

const FourierBasis& fourier_of(const ReferenceOp& ref) {
  const auto* b = std::get_if<FourierBasis>(&ref);
  if (!b) throw InvalidArgument("finite-rank covariance needs a Fourier reference");
  return *b;
}

// C0^{-1} d in the grid inner product.
Vec apply_reference_precision(const ReferenceOp& ref, const Vec& d) {
  return std::visit(Overloaded{[&](const UnitScalar&) -> Vec { return d; },
                               [&](const FourierBasis& basis) -> Vec {
                                 Vec c = basis.analyze(d);
                                 for (int k = 1; k <= basis.n_modes(); ++k) c[k - 1] /= basis.eigenvalue(k);
                                 return basis.synthesize(c);
                               },
                               [&](const DirichletPrecision& L) -> Vec { return L.apply(d); }},
                    ref);
}

double potential_log_partition(const DirichletPrecision& L, const Vec& b, double eps) {
  return 0.5 * (L.log_det(b / (2.0 * eps * eps)) - L.log_det());
}

}  // namespace

PrecisionPerturbation::PrecisionPerturbation(const CovParam& cov, const ReferenceOp& ref) : cov_(cov), ref_(ref) {
  std::visit(
      Overloaded{
          [&](const ScalarVariance& s) {
            if (!(s.sigma > 0.0)) throw NotACovariance("scalar standard deviation must be positive", s.sigma);
            n_params_ = 1;
            log_partition_ = -std::log(s.sigma);
          },
          [&](const FiniteRank& f) {
            const FourierBasis& basis = fourier_of(ref);
            const int K = f.rank();
            if (K < 1 || f.B.cols() != K) throw InvalidArgument("finite-rank factor must be square with K >= 1");
            if (K >= basis.n_modes()) throw InvalidArgument("rank must be below the number of modes");
            Eigen::FullPivLU<Mat> lu(f.B);
            if (!lu.isInvertible()) throw SingularFactor("finite-rank factor B is singular");
            b_inv_ = lu.inverse();
            prior_precision_.resize(K);
            double log_amp = 0.0;
            for (int i = 1; i <= K; ++i) {
              prior_precision_[i - 1] = 1.0 / basis.eigenvalue(i);
              log_amp += std::log(basis.amplitude(i));
            }
            n_params_ = K * K;
            log_partition_ = log_amp - std::log(std::abs(lu.determinant()));
          },
          [&](const ConstantPotential& c) {
            const DirichletPrecision& L = dirichlet_of(ref);
            if (!(c.B > 0.0)) throw NotACovariance("constant potential must be positive", c.B);
            n_params_ = 1;
            node_weight_ = Vec::Constant(L.size(), 0.5 * L.spacing() * c.B / (2.0 * c.eps * c.eps));
            log_partition_ = potential_log_partition(L, Vec::Constant(L.size(), c.B), c.eps);
          },
          [&](const VariablePotential& v) {
            const DirichletPrecision& L = dirichlet_of(ref);
            if (v.b.size() != L.size()) throw InvalidArgument("potential length does not match grid");
            n_params_ = L.size();
            node_weight_ = 0.5 * L.spacing() * v.b / (2.0 * v.eps * v.eps);
            log_partition_ = potential_log_partition(L, v.b, v.eps);
          }},
      cov);
}

double PrecisionPerturbation::half_form(const Vec& u) const {
  return std::visit(Overloaded{[&](const ScalarVariance& s) {
                                 return 0.5 * (1.0 / (s.sigma * s.sigma) - 1.0) * u[0] * u[0];
                               },
                               [&](const FiniteRank& f) {
                                 const Vec v = std::get<FourierBasis>(ref_).analyze(u).head(f.rank());
                                 const Vec z = b_inv_ * (b_inv_ * v);
                                 return 0.5 * (v.dot(z) - v.cwiseProduct(v).dot(prior_precision_));
                               },
                               [&](const auto&) { return node_weight_.dot(u.cwiseProduct(u)); }},
                    cov_);
}

Vec PrecisionPerturbation::d_theta(const Vec& u) const {
  return std::visit(
      Overloaded{[&](const ScalarVariance& s) -> Vec {
                   Vec d(1);
                   d[0] = u[0] * u[0] / (s.sigma * s.sigma * s.sigma);
                   return d;
                 },
                 [&](const FiniteRank& f) -> Vec {
                   const Vec v = std::get<FourierBasis>(ref_).analyze(u).head(f.rank());
                   const Mat D = d_b_delta0_finite_rank(v, f.B);
                   return Eigen::Map<const Vec>(D.data(), D.size());
                 },
                 [&](const ConstantPotential& c) -> Vec {
                   const double h = std::get<DirichletPrecision>(ref_).spacing();
                   Vec d(1);
                   d[0] = -h * u.squaredNorm() / (4.0 * c.eps * c.eps);
                   return d;
                 },
                 [&](const VariablePotential& v) -> Vec {
                   return -(u.array().square() / (4.0 * v.eps * v.eps)).matrix();
                 }},
      cov_);
}

Vec cov_to_vector(const CovParam& cov) {
  return std::visit(Overloaded{[](const ScalarVariance& s) -> Vec { return Vec::Constant(1, s.sigma); },
                               [](const FiniteRank& f) -> Vec { return Eigen::Map<const Vec>(f.B.data(), f.B.size()); },
                               [](const ConstantPotential& c) -> Vec { return Vec::Constant(1, c.B); },
                               [](const VariablePotential& v) -> Vec { return v.b; }},
                    cov);
}

CovParam cov_from_vector(const CovParam& like, const Vec& theta) {
  return std::visit(Overloaded{[&](const ScalarVariance&) -> CovParam { return ScalarVariance{theta[0]}; },
                               [&](const FiniteRank& f) -> CovParam {
                                 return FiniteRank{Eigen::Map<const Mat>(theta.data(), f.rank(), f.rank())};
                               },
                               [&](const ConstantPotential& c) -> CovParam {
                                 return ConstantPotential{theta[0], c.eps};
                               },
                               [&](const VariablePotential& v) -> CovParam {
                                 VariablePotential out = v;
                                 out.b = theta;
                                 return out;
                               }},
                    like);
}

double delta0(const Vec& u, const GaussianSpec& spec, const TargetProblem& problem) {
  const double phi = problem.phi(u + spec.mean);
  if (!std::isfinite(phi)) throw NonFiniteObjective("potential is not finite at the sample", 0);
  return phi - PrecisionPerturbation(spec.cov, problem.reference()).half_form(u);
}

Mat d_b_delta0_finite_rank(const Vec& v_K, const Mat& B) {
  if (B.rows() != B.cols() || B.rows() != v_K.size()) throw InvalidArgument("factor and coefficient sizes differ");
  Eigen::FullPivLU<Mat> lu(B);
  if (!lu.isInvertible()) throw SingularFactor("finite-rank factor B is singular");
  const Vec a = lu.solve(v_K);
  const Vec b = lu.solve(a);
  return 0.5 * (a * b.transpose() + b * a.transpose());
}

namespace {

// Second-difference stencil of -d^2/dt^2 with b'(0) = 0 and b(1) given.
void neumann_stencil(int n, double h, Vec& diag, Vec& off) {
  diag = Vec::Constant(n, 2.0 / (h * h));
  diag[0] = 1.0 / (h * h);
  off = Vec::Constant(n - 1, -1.0 / (h * h));
}

}  // namespace

double regularization(const CovParam& cov) {
  const auto* v = std::get_if<VariablePotential>(&cov);
  if (!v) return 0.0;
  const Eigen::Index n = v->b.size();
  const double h = 1.0 / static_cast<double>(n + 1);
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double next = j + 1 < n ? v->b[j + 1] : v->right_value;
    s += (next - v->b[j]) * (next - v->b[j]);
  }
  return 0.5 * v->alpha * s / h;
}

Vec regularization_grad(const CovParam& cov) {
  const auto* v = std::get_if<VariablePotential>(&cov);
  if (!v) return Vec();
  const Eigen::Index n = v->b.size();
  const double h = 1.0 / static_cast<double>(n + 1);
  Vec g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double left = i > 0 ? v->b[i - 1] : v->b[0];
    const double right = i + 1 < n ? v->b[i + 1] : v->right_value;
    g[i] = v->alpha * (2.0 * v->b[i] - left - right) / (h * h);
  }
  return g;
}

SampleBatch draw_batch(const GaussianSpec& spec, const TargetProblem& problem, int M, RandomStream& rng,
                       SamplerCache* cache) {
  if (M < 1) throw InvalidArgument("sample count must be positive");
  const auto sampler = cache ? cache->get(spec.cov, problem.reference()) : make_sampler(spec.cov, problem.reference());
  SampleBatch batch;
  batch.draws.reserve(M);
  for (int i = 0; i < M; ++i) batch.draws.push_back(sampler->draw(rng));
  batch.log_partition = PrecisionPerturbation(spec.cov, problem.reference()).log_partition();
  return batch;
}

SampleBatch reweight_batch(const SampleBatch& base, const CovParam& from, const CovParam& to,
                           const ReferenceOp& ref) {
  const PrecisionPerturbation g_from(from, ref), g_to(to, ref);
  const Eigen::Index M = static_cast<Eigen::Index>(base.draws.size());
  SampleBatch out;
  out.draws = base.draws;
  Vec delta(M);
  for (Eigen::Index i = 0; i < M; ++i) delta[i] = g_from.half_form(base.draws[i]) - g_to.half_form(base.draws[i]);
  const Vec base_lw = base.log_weights.size() ? base.log_weights : Vec::Zero(M);
  out.log_weights = base_lw + delta;

  const double s0 = base_lw.maxCoeff();
  const double base_sum = (base_lw.array() - s0).exp().sum();
  const double s1 = out.log_weights.maxCoeff();
  const double new_sum = (out.log_weights.array() - s1).exp().sum();
  out.log_partition = base.log_partition - (std::log(new_sum) + s1 - std::log(base_sum) - s0);
  return out;
}

Vec precondition_cov_gradient(const CovParam& cov, const ReferenceOp& ref, const Vec& sample_cov) {
  return std::visit(
      Overloaded{[&](const ScalarVariance&) -> Vec { return sample_cov; },
                 [&](const FiniteRank& f) -> Vec { return fourier_of(ref).eigenvalue(f.rank()) * sample_cov; },
                 [&](const ConstantPotential&) -> Vec { return sample_cov; },
                 [&](const VariablePotential& v) -> Vec {
                   const Eigen::Index n = v.b.size();
                   Vec d, o;
                   neumann_stencil(static_cast<int>(n), 1.0 / static_cast<double>(n + 1), d, o);
                   return solve_tridiagonal(v.alpha * d, v.alpha * o, sample_cov) +
                          (v.b.array() - v.right_value).matrix();
                 }},
      cov);
}

BatchEvaluation evaluate_batch(const GaussianSpec& spec, const TargetProblem& problem, const SampleBatch& batch) {
  const ReferenceOp& ref = problem.reference();
  const Eigen::Index M = static_cast<Eigen::Index>(batch.draws.size());
  if (M < 2) throw InvalidArgument("need at least 2 samples");
  const Eigen::Index n = problem.dim();
  if (spec.mean.size() != n || spec.reference_mean.size() != n)
    throw InvalidArgument("spec does not match problem dimension");

  const PrecisionPerturbation gamma(spec.cov, ref);
  Vec w(M);
  if (batch.log_weights.size()) {
    if (batch.log_weights.size() != M) throw InvalidArgument("log-weights do not match batch");
    const double shift = batch.log_weights.maxCoeff();
    w = (batch.log_weights.array() - shift).exp().matrix();
    w /= w.sum();
  } else {
    w.setConstant(1.0 / static_cast<double>(M));
  }

  Vec delta(M), half(M);
  Mat D(gamma.n_params(), M);
  Vec mean_g = Vec::Zero(n);
  for (Eigen::Index i = 0; i < M; ++i) {
    const Vec& u = batch.draws[i];
    const Vec x = u + spec.mean;
    const double phi = problem.phi(x);
    if (!std::isfinite(phi))
      throw NonFiniteObjective("potential is not finite at sample " + std::to_string(i), static_cast<std::size_t>(i));
    const Vec g = problem.grad_phi(x);
    if (!g.allFinite())
      throw NonFiniteObjective("gradient is not finite at sample " + std::to_string(i), static_cast<std::size_t>(i));
    half[i] = gamma.half_form(u);
    delta[i] = phi - half[i];
    D.col(i) = gamma.d_theta(u);
    mean_g += w[i] * g;
  }

  const double delta_bar = w.dot(delta);
  const Vec d_bar = D * w;
  const Vec centred = (delta.array() - delta_bar).matrix();
  const Vec sample_cov = D * centred.cwiseProduct(w) - d_bar * w.dot(centred);

  BatchEvaluation out;
  KLEstimate& est = out.estimate;
  est.M = static_cast<int>(M);
  est.delta_term = delta_bar;
  est.cm_term = 0.5 * cameron_martin_sq(spec.mean, spec.reference_mean, ref);
  est.log_partition_term = batch.log_partition;
  est.regularization_term = regularization(spec.cov);
  est.value = est.delta_term + est.cm_term + est.log_partition_term + est.regularization_term;
  est.std_error = std::sqrt(w.cwiseProduct(w).dot(centred.cwiseProduct(centred)));
  const double shift = half.maxCoeff();
  est.log_partition_mc = shift + std::log(w.dot((half.array() - shift).exp().matrix()));
  est.weight_warning = shift > 30.0;

  const Vec dm = spec.mean - spec.reference_mean;
  GradientPair& g = out.gradient;
  g.mean_raw = mean_g + apply_reference_precision(ref, dm);
  g.mean = apply_reference_covariance(ref, mean_g) + dm;
  g.cov_raw = sample_cov;
  if (std::holds_alternative<VariablePotential>(spec.cov)) g.cov_raw += regularization_grad(spec.cov);
  g.cov = precondition_cov_gradient(spec.cov, ref, sample_cov);
  if (!g.mean.allFinite() || !g.cov.allFinite()) throw NonFiniteObjective("gradient estimate is not finite", 0);
  return out;
}

KLEstimate estimate_dkl(const GaussianSpec& spec, const TargetProblem& problem, const SampleBatch& batch) {
  return evaluate_batch(spec, problem, batch).estimate;
}

KLEstimate estimate_dkl(const GaussianSpec& spec, const TargetProblem& problem, int M, RandomStream& rng) {
  if (M < 2) throw InvalidArgument("need at least 2 samples");
  return estimate_dkl(spec, problem, draw_batch(spec, problem, M, rng));
}

Vec grad_mean(const GaussianSpec& spec, const TargetProblem& problem, int M, RandomStream& rng) {
  return evaluate_batch(spec, problem, draw_batch(spec, problem, M, rng)).gradient.mean;
}

Vec grad_cov(const GaussianSpec& spec, const TargetProblem& problem, int M, RandomStream& rng) {
  return evaluate_batch(spec, problem, draw_batch(spec, problem, M, rng)).gradient.cov;
}

double scalar_dkl_analytic(double m, double sigma, double eps, std::optional<double> log_Z) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!(eps > 0.0)) throw InvalidArgument("temperature must be positive");
  const double m2 = m * m, s2 = sigma * sigma;
  const double poly = 2.0 * m2 * m2 + m2 + 12.0 * m2 * s2 + s2 + 6.0 * s2 * s2;
  return poly / (2.0 * eps) - 0.5 + log_Z.value_or(0.0) - 0.5 * std::log(2.0 * std::numbers::pi * s2);
}

double scalar_sigma_opt(double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("temperature must be positive");
  // sqrt(1 + 48 eps) - 1 written without cancellation.
  const double root = 48.0 * eps / (std::sqrt(1.0 + 48.0 * eps) + 1.0);
  return std::sqrt(root / 24.0);
}

}  // namespace klgauss
