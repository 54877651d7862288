#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "klgauss/kl_objective.hpp"

namespace klgauss {

using StateFunctional = std::function<double(const Vec&)>;

// Gaussian the chain contracts towards: mean plus a centred sampler.
struct ProposalMeasure {
  Vec mean;
  std::shared_ptr<const CenteredSampler> sampler;
};

struct PcnStep {
  Vec state;
  double value;  // functional at the returned state
  bool accepted;
  bool non_finite;  // proposal rejected because the functional was not finite
};

// v = mean + sqrt(1 - beta^2) (u - mean) + beta xi, accepted with
// probability min(1, exp(F(u) - F(v))). One uniform is consumed per step.
PcnStep pcn_step(const Vec& u, double f_u, const StateFunctional& F, const ProposalMeasure& proposal, double beta,
                 RandomStream& rng);

// Delta = Phi_mu - Phi_nu up to an additive constant, where
// Phi_nu(u) = (1/2)<u - m, Gamma (u - m)> - <u - m, m - m0>_{C0}.
class DeltaFunctional {
 public:
  DeltaFunctional(const TargetProblem& problem, GaussianSpec nu);
  double phi_nu(const Vec& u) const;
  double operator()(const Vec& u) const { return problem_->phi(u) - phi_nu(u); }

 private:
  const TargetProblem* problem_;
  std::shared_ptr<const GaussianSpec> nu_;
  std::shared_ptr<const PrecisionPerturbation> gamma_;
  Vec shift_;  // m - m0
};

struct ChainConfig {
  double beta = 0.6;
  long n_steps = 100000;
  std::uint64_t seed = 1;
  long thinning = 1000;  // snapshot interval
  Vec initial;           // empty: start at the proposal mean
  double burn_in_fraction = 0.1;
  int probe = -1;  // node index of the monitored scalar; -1 for the midpoint
  long max_lag = 1000;
};

void validate(const ChainConfig& cfg);

struct ChainDiag {
  std::vector<std::uint8_t> accepted;
  std::vector<double> probe;  // monitored scalar after each step
  long n_accepted = 0;
  long n_non_finite = 0;
  long burn_in = 0;
  Vec post_mean;  // per node, after burn-in
  Vec post_var;
  Vec autocov;  // probe, after burn-in, lags 0..max_lag
  double iact = 0.0;
  std::vector<Vec> snapshots;

  double acceptance_rate() const {
    return accepted.empty() ? 0.0 : static_cast<double>(n_accepted) / static_cast<double>(accepted.size());
  }
};

ChainDiag run_chain(const StateFunctional& F, const ProposalMeasure& proposal, const ChainConfig& cfg);
// Proposals from the reference measure, accepted on Phi_mu.
ChainDiag run_reference_chain(const TargetProblem& problem, const ChainConfig& cfg);
// Proposals from the fitted Gaussian nu, accepted on Delta.
ChainDiag run_informed_chain(const TargetProblem& problem, const GaussianSpec& nu, const ChainConfig& cfg);

// Acceptance statistic Delta(u) - Delta(v) for the scalar double well.
double scalar_T(double u, double v, double m, double sigma, double eps);

// Biased (1/N) autocovariance of the mean-removed series, lags 0..max_lag.
Vec autocovariance(const std::vector<double>& series, long max_lag);
// 1 + 2 sum of autocorrelations up to the first negative estimate.
double integrated_autocorrelation_time(const Vec& autocov);

// Exact draw from exp(-(x^4 + x^2/2)/eps) by rejection from N(0, eps).
double sample_scalar_target(double eps, RandomStream& rng);

struct AcceptanceBound {
  double mean_abs_T;
  double mean_accept;  // E[1 ^ exp(T)]
  double accept_se;
  std::vector<double> gammas;
  std::vector<double> bounds;  // exp(-g) (1 - E|T| / g)
};

AcceptanceBound acceptance_bound_check(double eps, double m, double sigma, long n_mc, const std::vector<double>& gammas,
                                       RandomStream& rng);

}  // namespace klgauss
