#pragma once

#include <string>
#include <vector>

#include "klgauss/kl_objective.hpp"

namespace klgauss {

struct StepSchedule {
  double a0;
  double gamma_exp;  // in (1/2, 1]
};

double step_at(const StepSchedule& schedule, long n);

Vec project_box(const Vec& f, double lo, double hi);
// Nearest matrix in Frobenius norm with spectrum in [lo, hi].
Mat project_spd(const Mat& A, double lo, double hi);
// Projection of a covariance parameter into its admissible set; `active`
// reports whether anything moved.
CovParam project_cov(const CovParam& cov, double lo, double hi, bool* active = nullptr);

struct RMConfig {
  long n_iters = 10000;
  int M = 100;
  StepSchedule schedule{0.1, 0.6};
  double mean_lo = -1.0;
  double mean_hi = 1.0;
  double spec_lo = 1e-3;
  double spec_hi = 1.0;
  std::uint64_t seed = 1;
  int snapshot_every = 100;
  PotentialSampling sampling = PotentialSampling::OuBridge;
};

void validate(const RMConfig& cfg);

struct RMRecord {
  long n;
  double a_n;
  KLEstimate estimate;  // at the iterate the batch was drawn for
  double mean_norm;     // after the update
  double cov_summary;   // after the update
  bool mean_clamped;
  bool cov_clamped;
};

struct RMSnapshot {
  long n;
  Vec mean;
  Vec cov;
};

struct RMTrace {
  std::vector<RMRecord> records;
  std::vector<RMSnapshot> snapshots;
};

struct RMResult {
  GaussianSpec spec;
  RMTrace trace;
  bool completed = true;
  std::string error;
};

// Scalar summary of a covariance parameter: sigma, trace(B), B, or mean b.
double cov_summary(const CovParam& cov);

RMResult rm_minimize(const GaussianSpec& spec0, const TargetProblem& problem, const RMConfig& cfg);

}  // namespace klgauss
