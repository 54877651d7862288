#pragma once

#include <optional>
#include <vector>

#include "klgauss/problems.hpp"
#include "klgauss/sampling.hpp"

namespace klgauss {

// Precision perturbation Gamma = C^{-1} - C0^{-1} for one covariance
// parameter, with the derived quantities the objective needs. Parameters are
// flattened as: sigma | B column-major | B | b nodal.
class PrecisionPerturbation {
 public:
  PrecisionPerturbation(const CovParam& cov, const ReferenceOp& ref);

  // (1/2) <u, Gamma u> for a centred field u.
  double half_form(const Vec& u) const;
  // Derivative of -(1/2) <u, Gamma u> in the covariance parameter. For a
  // potential b(t) this is the gradient in the grid inner product.
  Vec d_theta(const Vec& u) const;
  // log E^{nu0} exp((1/2) <u, Gamma u>), in closed form.
  double log_partition() const { return log_partition_; }
  int n_params() const { return n_params_; }

 private:
  CovParam cov_;
  ReferenceOp ref_;
  int n_params_;
  double log_partition_;
  Vec node_weight_;  // potentials: h * b / (2 eps^2) / 2
  Mat b_inv_;        // finite rank
  Vec prior_precision_;
};

Vec cov_to_vector(const CovParam& cov);
CovParam cov_from_vector(const CovParam& like, const Vec& theta);

double delta0(const Vec& u, const GaussianSpec& spec, const TargetProblem& problem);

Mat d_b_delta0_finite_rank(const Vec& v_K, const Mat& B);

// (alpha/2) int (b')^2 with b'(0) = 0 and b(1) fixed; zero for other kinds.
double regularization(const CovParam& cov);
// Its gradient in the grid inner product.
Vec regularization_grad(const CovParam& cov);

// Centred draws from nu0 = N(0, C). Optional log-weights turn the batch into
// an importance sample for a different covariance parameter.
struct SampleBatch {
  std::vector<Vec> draws;
  Vec log_weights;  // empty means uniform
  double log_partition = 0.0;
};

SampleBatch draw_batch(const GaussianSpec& spec, const TargetProblem& problem, int M, RandomStream& rng,
                       SamplerCache* cache = nullptr);
// Reweights a batch drawn under `from` so that it represents `to`. The
// log-partition term becomes a ratio estimate tied to the same draws.
SampleBatch reweight_batch(const SampleBatch& base, const CovParam& from, const CovParam& to,
                           const ReferenceOp& ref);

struct KLEstimate {
  double value = 0.0;  // D_KL - log Z_mu
  double delta_term = 0.0;
  double cm_term = 0.0;
  double log_partition_term = 0.0;
  double regularization_term = 0.0;
  int M = 0;
  double std_error = 0.0;
  double log_partition_mc = 0.0;  // max-shifted log-mean-exp on the batch
  bool weight_warning = false;    // shift above 30
};

struct GradientPair {
  Vec mean;      // C0-preconditioned
  Vec cov;       // preconditioned per parameterisation
  Vec mean_raw;  // gradient in the grid inner product
  Vec cov_raw;
};

struct BatchEvaluation {
  KLEstimate estimate;
  GradientPair gradient;
};

BatchEvaluation evaluate_batch(const GaussianSpec& spec, const TargetProblem& problem, const SampleBatch& batch);

KLEstimate estimate_dkl(const GaussianSpec& spec, const TargetProblem& problem, const SampleBatch& batch);
KLEstimate estimate_dkl(const GaussianSpec& spec, const TargetProblem& problem, int M, RandomStream& rng);
Vec grad_mean(const GaussianSpec& spec, const TargetProblem& problem, int M, RandomStream& rng);
Vec grad_cov(const GaussianSpec& spec, const TargetProblem& problem, int M, RandomStream& rng);

// Applies the covariance preconditioner (and, for b(t), adds the regularised
// term) to the sample covariance of (Delta0, D_theta Delta0).
Vec precondition_cov_gradient(const CovParam& cov, const ReferenceOp& ref, const Vec& sample_cov);

// Closed-form D_KL for the scalar double well; log_Z omitted when not given.
double scalar_dkl_analytic(double m, double sigma, double eps, std::optional<double> log_Z = std::nullopt);
double scalar_sigma_opt(double eps);

}  // namespace klgauss
