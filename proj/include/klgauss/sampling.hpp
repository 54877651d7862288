#pragma once

#include <functional>
#include <memory>

#include "klgauss/spectral.hpp"

namespace klgauss {

// Draws centred fields u ~ N(0, C) on a fixed grid.
class CenteredSampler {
 public:
  virtual ~CenteredSampler() = default;
  virtual int dim() const = 0;
  virtual Vec draw(RandomStream& rng) const = 0;
};

class ScalarSampler : public CenteredSampler {
 public:
  explicit ScalarSampler(double sigma);
  int dim() const override { return 1; }
  Vec draw(RandomStream& rng) const override;

 private:
  double sigma_;
};

struct EigenFactorization {
  Vec eigenvalues;   // ascending
  Mat eigenvectors;  // columns
};

EigenFactorization factorize_symmetric(const Mat& A);

// Karhunen-Loeve sampler: coefficients on the first K modes have covariance
// B^2, the remaining modes up to the truncation keep the reference amplitudes.
// An empty B gives the reference measure itself.
class FiniteRankSampler : public CenteredSampler {
 public:
  FiniteRankSampler(const FourierBasis& basis, const Mat& B, int truncation = 0);
  int dim() const override { return basis_.grid().size(); }
  int truncation() const { return truncation_; }
  Vec draw(RandomStream& rng) const override;
  // Coefficients for a given vector of truncation() standard normals.
  Vec coefficients(const Vec& xi) const;

 private:
  FourierBasis basis_;
  int rank_;
  int truncation_;
  Mat factor_;  // X diag(mu)
};

Vec sample_finite_rank(const GaussianSpec& spec, const FourierBasis& basis, int truncation, RandomStream& rng);

// Exact recursion for the Ornstein-Uhlenbeck bridge with precision
// C0^{-1} + B/(2 eps^2), returned on the interior nodes of a Dirichlet grid.
class OuBridgeSampler : public CenteredSampler {
 public:
  OuBridgeSampler(double B, double eps, const Grid1D& grid);
  int dim() const override { return grid_.size(); }
  Vec draw(RandomStream& rng) const override;

 private:
  Grid1D grid_;
  double decay_;
  double noise_sd_;
  Vec bridge_ratio_;  // sinh(a t)/sinh(a) at the interior nodes
};

Vec sample_ou_bridge(double B, double eps, const Grid1D& grid, RandomStream& rng);

// u = sum_n p_n^{-1/2} xi_n x^n from the eigenpairs (p_n, x^n) of a precision
// matrix, i.e. a draw from N(0, P^{-1}).
class PrecisionEigenSampler : public CenteredSampler {
 public:
  explicit PrecisionEigenSampler(const Mat& precision);
  static PrecisionEigenSampler from_tridiagonal(const Vec& diag, const Vec& off);

  int dim() const override { return static_cast<int>(scaled_.rows()); }
  Vec draw(RandomStream& rng) const override;
  Mat covariance() const { return scaled_ * scaled_.transpose(); }
  const EigenFactorization& factorization() const { return eig_; }

 private:
  explicit PrecisionEigenSampler(EigenFactorization eig);
  EigenFactorization eig_;
  Mat scaled_;
};

Vec sample_precision_eigen(const Mat& precision, RandomStream& rng);

// Quadratic-form matrix h (L + diag(b)/(2 eps^2)) of the discrete
// potential-perturbed bridge measure.
void potential_precision_tridiagonal(const DirichletPrecision& L, const Vec& b, double eps, Vec& diag, Vec& off);
Mat potential_precision(const DirichletPrecision& L, const Vec& b, double eps);

enum class PotentialSampling { OuBridge, Exact };

std::shared_ptr<const CenteredSampler> make_sampler(const CovParam& cov, const ReferenceOp& ref,
                                                    PotentialSampling mode = PotentialSampling::OuBridge);
std::shared_ptr<const CenteredSampler> make_reference_sampler(const ReferenceOp& ref);

// Keeps the sampler for the most recent parameter; rebuilt only when the
// parameter bytes change.
class SamplerCache {
 public:
  explicit SamplerCache(PotentialSampling mode = PotentialSampling::OuBridge) : mode_(mode) {}
  std::shared_ptr<const CenteredSampler> get(const CovParam& cov, const ReferenceOp& ref);
  int rebuilds() const { return rebuilds_; }

 private:
  PotentialSampling mode_;
  std::uint64_t key_ = 0;
  bool valid_ = false;
  int rebuilds_ = 0;
  std::shared_ptr<const CenteredSampler> sampler_;
};

std::uint64_t hash_cov_param(const CovParam& cov);

struct ReweightedEstimate {
  double value;
  double std_error;
  double max_log_weight;
  double effective_sample_size;
};

// Self-normalised importance estimate of E[observable] under the bridge with
// potential b, using OU-bridge draws at the constant potential max(b).
ReweightedEstimate reweighted_expectation(const std::function<double(const Vec&)>& observable, const Vec& b,
                                          double eps, int M, RandomStream& rng);

}  // namespace klgauss
