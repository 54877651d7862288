#include "klgauss/pcn.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <fftw3.h>

#include "fft_plans.hpp"

namespace klgauss {

PcnStep pcn_step(const Vec& u, double f_u, const StateFunctional& F, const ProposalMeasure& proposal, double beta,
                 RandomStream& rng) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  const Vec xi = proposal.sampler->draw(rng);
  const Vec v = proposal.mean + std::sqrt(1.0 - beta * beta) * (u - proposal.mean) + beta * xi;
  const double f_v = F(v);
  const double log_u = std::log(rng.uniform());
  if (!std::isfinite(f_v)) return {u, f_u, false, true};
  if (log_u < f_u - f_v) return {v, f_v, true, false};
  return {u, f_u, false, false};
}

DeltaFunctional::DeltaFunctional(const TargetProblem& problem, GaussianSpec nu)
    : problem_(&problem), nu_(std::make_shared<const GaussianSpec>(std::move(nu))) {
  if (nu_->mean.size() != problem.dim()) throw InvalidArgument("proposal mean does not match problem");
  gamma_ = std::make_shared<const PrecisionPerturbation>(nu_->cov, problem.reference());
  shift_ = nu_->mean - nu_->reference_mean;
}

double DeltaFunctional::phi_nu(const Vec& u) const {
  const Vec d = u - nu_->mean;
  return gamma_->half_form(d) - cm_inner(problem_->reference(), d, shift_);
}

void validate(const ChainConfig& cfg) {
  if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  if (cfg.n_steps < 2) throw InvalidArgument("chain needs at least 2 steps");
  if (cfg.thinning < 1) throw InvalidArgument("thinning must be >= 1");
  if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0))
    throw InvalidArgument("burn-in fraction must lie in [0, 1)");
  if (cfg.max_lag < 0) throw InvalidArgument("max lag must be non-negative");
}

ChainDiag run_chain(const StateFunctional& F, const ProposalMeasure& proposal, const ChainConfig& cfg) {
  validate(cfg);
  const Eigen::Index n = proposal.mean.size();
  Vec u = cfg.initial.size() ? cfg.initial : proposal.mean;
  if (u.size() != n) throw InvalidArgument("initial state does not match proposal");
  if (cfg.probe >= n) throw InvalidArgument("probe index outside the state");
  const Eigen::Index probe = cfg.probe < 0 ? n / 2 : cfg.probe;
  double f_u = F(u);
  if (!std::isfinite(f_u)) throw InvalidArgument("functional is not finite at the initial state");

  RandomStream rng(cfg.seed);
  ChainDiag diag;
  diag.accepted.reserve(static_cast<std::size_t>(cfg.n_steps));
  diag.probe.reserve(static_cast<std::size_t>(cfg.n_steps));
  diag.burn_in = static_cast<long>(std::floor(cfg.burn_in_fraction * static_cast<double>(cfg.n_steps)));
  Vec mean = Vec::Zero(n), m2 = Vec::Zero(n);
  long count = 0;

  for (long k = 0; k < cfg.n_steps; ++k) {
    PcnStep s = pcn_step(u, f_u, F, proposal, cfg.beta, rng);
    if (s.accepted) {
      u = std::move(s.state);
      f_u = s.value;
      ++diag.n_accepted;
    }
    if (s.non_finite) ++diag.n_non_finite;
    diag.accepted.push_back(s.accepted ? 1 : 0);
    diag.probe.push_back(u[probe]);
    if (k >= diag.burn_in) {
      ++count;
      const Vec d = u - mean;
      mean += d / static_cast<double>(count);
      m2 += d.cwiseProduct(u - mean);
    }
    if ((k + 1) % cfg.thinning == 0) diag.snapshots.push_back(u);
  }
  diag.post_mean = mean;
  diag.post_var = m2 / static_cast<double>(std::max<long>(count, 1));

  const std::vector<double> tail(diag.probe.begin() + diag.burn_in, diag.probe.end());
  const Vec full = autocovariance(tail, static_cast<long>(tail.size()) - 1);
  diag.iact = integrated_autocorrelation_time(full);
  diag.autocov = full.head(std::min<Eigen::Index>(cfg.max_lag + 1, full.size()));
  return diag;
}

ChainDiag run_reference_chain(const TargetProblem& problem, const ChainConfig& cfg) {
  const ProposalMeasure proposal{problem.reference_mean(), make_reference_sampler(problem.reference())};
  return run_chain([&](const Vec& u) { return problem.phi(u); }, proposal, cfg);
}

ChainDiag run_informed_chain(const TargetProblem& problem, const GaussianSpec& nu, const ChainConfig& cfg) {
  const ProposalMeasure proposal{nu.mean, make_sampler(nu.cov, problem.reference(), PotentialSampling::Exact)};
  const DeltaFunctional delta(problem, nu);
  return run_chain([&](const Vec& u) { return delta(u); }, proposal, cfg);
}

double scalar_T(double u, double v, double m, double sigma, double eps) {
  const double u2 = u * u, v2 = v * v, s2 = sigma * sigma;
  return (u2 * u2 - v2 * v2) / eps + (0.5 / eps - 0.5 / s2) * (u2 - v2) + (m / s2) * (u - v);
}

Vec autocovariance(const std::vector<double>& series, long max_lag) {
  const long N = static_cast<long>(series.size());
  if (max_lag < 0 || max_lag >= N) throw InvalidArgument("max lag must be below the series length");
  double mu = 0.0;
  for (double x : series) mu += x;
  mu /= static_cast<double>(N);

  long L = 1;
  while (L < 2 * N) L <<= 1;
  std::vector<double> buf(static_cast<std::size_t>(L), 0.0);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(L / 2 + 1));
  for (long i = 0; i < N; ++i) buf[i] = series[i] - mu;

  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(L), buf.data(), cplx, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(L), cplx, buf.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (auto& c : spec) c = std::norm(c);
  fftw_execute(bwd);
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  Vec acov(max_lag + 1);
  for (long k = 0; k <= max_lag; ++k) acov[k] = buf[k] / (static_cast<double>(L) * static_cast<double>(N));
  return acov;
}

double integrated_autocorrelation_time(const Vec& autocov) {
  if (autocov.size() == 0 || !(autocov[0] > 0.0)) return 1.0;
  double tau = 1.0;
  for (Eigen::Index k = 1; k < autocov.size(); ++k) {
    const double rho = autocov[k] / autocov[0];
    if (rho < 0.0) break;
    tau += 2.0 * rho;
  }
  return tau;
}

double sample_scalar_target(double eps, RandomStream& rng) {
  if (!(eps > 0.0)) throw InvalidArgument("temperature must be positive");
  const double sd = std::sqrt(eps);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const double x = sd * rng.normal();
    const double x2 = x * x;
    if (rng.uniform() < std::exp(-x2 * x2 / eps)) return x;
  }
  throw std::runtime_error("rejection sampler for the scalar target failed to accept");
}

AcceptanceBound acceptance_bound_check(double eps, double m, double sigma, long n_mc, const std::vector<double>& gammas,
                                       RandomStream& rng) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (n_mc < 2) throw InvalidArgument("need at least 2 Monte Carlo samples");
  double sum_abs = 0.0, sum_acc = 0.0, sum_acc2 = 0.0;
  for (long i = 0; i < n_mc; ++i) {
    const double u = sample_scalar_target(eps, rng);
    const double v = m + sigma * rng.normal();
    const double T = scalar_T(u, v, m, sigma, eps);
    const double a = T >= 0.0 ? 1.0 : std::exp(T);
    sum_abs += std::abs(T);
    sum_acc += a;
    sum_acc2 += a * a;
  }
  const double nd = static_cast<double>(n_mc);
  AcceptanceBound out;
  out.mean_abs_T = sum_abs / nd;
  out.mean_accept = sum_acc / nd;
  out.accept_se = std::sqrt(std::max(0.0, sum_acc2 / nd - out.mean_accept * out.mean_accept) / nd);
  for (double g : gammas) {
    if (!(g > 0.0)) throw InvalidArgument("bound parameter must be positive");
    out.gammas.push_back(g);
    out.bounds.push_back(std::exp(-g) * (1.0 - out.mean_abs_T / g));
  }
  return out;
}

}  // namespace klgauss
