#include "klgauss/robbins_monro.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace klgauss {

double step_at(const StepSchedule& schedule, long n) {
  if (n < 1) throw InvalidArgument("step index starts at 1");
  return schedule.a0 * std::pow(static_cast<double>(n), -schedule.gamma_exp);
}

Vec project_box(const Vec& f, double lo, double hi) { return f.cwiseMax(lo).cwiseMin(hi); }

Mat project_spd(const Mat& A, double lo, double hi) {
  if (A.rows() != A.cols()) throw InvalidArgument("matrix is not square");
  if (!(lo > 0.0) || lo > hi) throw InvalidArgument("spectrum box must satisfy 0 < lo <= hi");
  if (A.size() && (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw InvalidArgument("matrix is not symmetric");
  const EigenFactorization eig = factorize_symmetric(0.5 * (A + A.transpose()));
  const Vec clamped = eig.eigenvalues.cwiseMax(lo).cwiseMin(hi);
  Mat S = eig.eigenvectors * clamped.asDiagonal() * eig.eigenvectors.transpose();
  return 0.5 * (S + S.transpose());
}

CovParam project_cov(const CovParam& cov, double lo, double hi, bool* active) {
  bool moved = false;
  CovParam out = std::visit(
      Overloaded{[&](const ScalarVariance& s) -> CovParam {
                   const double v = std::clamp(s.sigma, lo, hi);
                   moved = v != s.sigma;
                   return ScalarVariance{v};
                 },
                 [&](const FiniteRank& f) -> CovParam {
                   const Mat sym = 0.5 * (f.B + f.B.transpose());
                   const EigenFactorization eig = factorize_symmetric(sym);
                   moved = eig.eigenvalues.minCoeff() < lo || eig.eigenvalues.maxCoeff() > hi;
                   return FiniteRank{moved ? project_spd(sym, lo, hi) : sym};
                 },
                 [&](const ConstantPotential& c) -> CovParam {
                   const double v = std::clamp(c.B, lo, hi);
                   moved = v != c.B;
                   return ConstantPotential{v, c.eps};
                 },
                 [&](const VariablePotential& p) -> CovParam {
                   VariablePotential q = p;
                   q.b = project_box(p.b, lo, hi);
                   moved = q.b != p.b;
                   return q;
                 }},
      cov);
  if (active) *active = moved;
  return out;
}

void validate(const RMConfig& cfg) {
  if (cfg.n_iters < 1) throw InvalidArgument("iteration count must be >= 1");
  if (cfg.M < 2) throw InvalidArgument("samples per iteration must be >= 2");
  if (!(cfg.schedule.a0 > 0.0)) throw InvalidArgument("a0 must be positive");
  if (!(cfg.schedule.gamma_exp > 0.5 && cfg.schedule.gamma_exp <= 1.0))
    throw InvalidArgument("step exponent must lie in (1/2, 1]");
  if (!(cfg.mean_lo < cfg.mean_hi)) throw InvalidArgument("mean box must satisfy lo < hi");
  if (!(cfg.spec_lo > 0.0 && cfg.spec_lo < cfg.spec_hi)) throw InvalidArgument("spectrum box must satisfy 0 < lo < hi");
  if (cfg.snapshot_every < 1) throw InvalidArgument("snapshot interval must be >= 1");
}

double cov_summary(const CovParam& cov) {
  return std::visit(Overloaded{[](const ScalarVariance& s) { return s.sigma; },
                               [](const FiniteRank& f) { return f.B.trace(); },
                               [](const ConstantPotential& c) { return c.B; },
                               [](const VariablePotential& v) { return v.b.mean(); }},
                    cov);
}

namespace {

bool inside(const GaussianSpec& spec, const RMConfig& cfg) {
  if (spec.mean.size() && (spec.mean.minCoeff() < cfg.mean_lo || spec.mean.maxCoeff() > cfg.mean_hi)) return false;
  const double tol = 1e-12 * cfg.spec_hi;
  Vec spectrum = std::visit(Overloaded{[](const FiniteRank& f) -> Vec {
                                         return factorize_symmetric(0.5 * (f.B + f.B.transpose())).eigenvalues;
                                       },
                                       [](const auto& other) -> Vec { return cov_to_vector(other); }},
                            spec.cov);
  return spectrum.minCoeff() >= cfg.spec_lo - tol && spectrum.maxCoeff() <= cfg.spec_hi + tol;
}

}  // namespace

RMResult rm_minimize(const GaussianSpec& spec0, const TargetProblem& problem, const RMConfig& cfg) {
  validate(cfg);
  if (!inside(spec0, cfg)) throw InvalidArgument("initial spec lies outside the projection boxes");

  RMResult result;
  result.spec = spec0;
  GaussianSpec& spec = result.spec;
  RandomStream rng(cfg.seed);
  SamplerCache cache(cfg.sampling);
  const ReferenceOp& ref = problem.reference();
  const double w = quadrature_weight(ref);
  result.trace.records.reserve(static_cast<std::size_t>(cfg.n_iters));
  result.trace.snapshots.push_back({0, spec.mean, cov_to_vector(spec.cov)});

  for (long n = 1; n <= cfg.n_iters; ++n) {
    const double a_n = step_at(cfg.schedule, n);
    BatchEvaluation eval;
    try {
      eval = evaluate_batch(spec, problem, draw_batch(spec, problem, cfg.M, rng, &cache));
    } catch (const NonFiniteObjective& e) {
      result.completed = false;
      result.error = "iteration " + std::to_string(n) + ": " + e.what();
      return result;
    }

    const Vec m_next = spec.mean - a_n * eval.gradient.mean;
    const Vec m_proj = project_box(m_next, cfg.mean_lo, cfg.mean_hi);
    const Vec theta_next = cov_to_vector(spec.cov) - a_n * eval.gradient.cov;
    bool cov_clamped = false;
    const CovParam cov_proj = project_cov(cov_from_vector(spec.cov, theta_next), cfg.spec_lo, cfg.spec_hi,
                                          &cov_clamped);
    spec.mean = m_proj;
    spec.cov = cov_proj;
    if (!inside(spec, cfg)) throw std::logic_error("projection left the admissible set");

    result.trace.records.push_back({n, a_n, eval.estimate, std::sqrt(w * spec.mean.squaredNorm()),
                                    cov_summary(spec.cov), m_proj != m_next, cov_clamped});
    if (n % cfg.snapshot_every == 0 || n == cfg.n_iters)
      result.trace.snapshots.push_back({n, spec.mean, cov_to_vector(spec.cov)});
  }
  return result;
}

}  // namespace klgauss
