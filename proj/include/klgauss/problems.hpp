#pragma once

#include <string>

#include "klgauss/spectral.hpp"

namespace klgauss {

// A target measure given by exp(-Phi) against a Gaussian reference N(m0, C0).
// grad_phi returns the gradient in the grid inner product of the reference,
// so that d/dt Phi(u + t w) = grid_inner(ref, grad_phi(u), w).
class TargetProblem {
 public:
  virtual ~TargetProblem() = default;
  virtual const ReferenceOp& reference() const = 0;
  virtual const Vec& reference_mean() const = 0;
  virtual double phi(const Vec& u) const = 0;
  virtual Vec grad_phi(const Vec& u) const = 0;
  virtual std::string name() const = 0;
  int dim() const { return reference_dim(reference()); }
};

struct PhiGrad {
  double value;
  double derivative;
};

// Phi(x) = V(x)/eps - x^2/2 with V(x) = x^4 + x^2/2, against N(0, 1).
PhiGrad scalar_phi_and_grad(double x, double eps);

class ScalarDoubleWell : public TargetProblem {
 public:
  explicit ScalarDoubleWell(double eps);
  double eps() const { return eps_; }
  const ReferenceOp& reference() const override { return ref_; }
  const Vec& reference_mean() const override { return m0_; }
  double phi(const Vec& u) const override;
  Vec grad_phi(const Vec& u) const override;
  std::string name() const override { return "scalar"; }

 private:
  double eps_;
  ReferenceOp ref_;
  Vec m0_;
};

// Phi = 0 against an arbitrary reference; used to check invariance of samplers.
class FlatProblem : public TargetProblem {
 public:
  FlatProblem(ReferenceOp ref, Vec m0);
  const ReferenceOp& reference() const override { return ref_; }
  const Vec& reference_mean() const override { return m0_; }
  double phi(const Vec&) const override { return 0.0; }
  Vec grad_phi(const Vec& u) const override { return Vec::Zero(u.size()); }
  std::string name() const override { return "flat"; }

 private:
  ReferenceOp ref_;
  Vec m0_;
};

struct DarcyObservations {
  Vec points;  // in (0, 1)
  Vec data;
  double gamma_obs;
  double p_minus;
  double p_plus;
};

// Pressure of -(exp(u) p')' = 0, p(0) = p_minus, p(1) = p_plus, at the
// periodic nodes, from the trapezoid cumulative integral of exp(-u).
Vec darcy_forward(const Vec& u, double p_minus, double p_plus);
// Pressure at arbitrary points by linear interpolation between nodes.
Vec darcy_observe(const Vec& u, const Vec& points, double p_minus, double p_plus);
double darcy_phi(const Vec& u, const DarcyObservations& obs);
// Adjoint field q at the nodes for the forward solution p.
Vec darcy_adjoint(const Vec& u, const Vec& p, const DarcyObservations& obs);
Vec darcy_grad_phi(const Vec& u, const DarcyObservations& obs);

struct SyntheticData {
  Vec y;
  Vec noise;
};

SyntheticData synthesize_data(const Vec& u_true, const Vec& points, double gamma_obs, double p_minus,
                              double p_plus, RandomStream& rng);

class DarcyProblem : public TargetProblem {
 public:
  DarcyProblem(FourierBasis basis, DarcyObservations obs);
  const FourierBasis& basis() const { return std::get<FourierBasis>(ref_); }
  const DarcyObservations& observations() const { return obs_; }
  const ReferenceOp& reference() const override { return ref_; }
  const Vec& reference_mean() const override { return m0_; }
  double phi(const Vec& u) const override { return darcy_phi(u, obs_); }
  Vec grad_phi(const Vec& u) const override { return darcy_grad_phi(u, obs_); }
  std::string name() const override { return "darcy"; }

 private:
  ReferenceOp ref_;
  Vec m0_;
  DarcyObservations obs_;
};

// (1/(4 eps^2)) int (1 - u^2)^2 by the trapezoid rule; the path includes its
// endpoint values and is sampled uniformly on [0, 1].
double diffusion_phi(const Vec& path, double eps);
// Gradient of diffusion_phi in the grid inner product at interior nodes.
Vec diffusion_grad_phi(const Vec& w, double eps);
// Derivative of (1/2)<v, (B/(2 eps^2)) v> in B: a scalar for constant B, a
// nodal field for B(t). Paths include their (zero) endpoint values.
double diffusion_db_phinu0_constant(const Vec& path, double eps);
Vec diffusion_db_phinu0_variable(const Vec& path, double eps);

// Bridge from 0 to 1 on the interior nodes of a Dirichlet grid.
class DiffusionProblem : public TargetProblem {
 public:
  DiffusionProblem(double eps, int n_interior);
  double eps() const { return eps_; }
  const ReferenceOp& reference() const override { return ref_; }
  const Vec& reference_mean() const override { return m0_; }
  double phi(const Vec& u) const override;
  Vec grad_phi(const Vec& u) const override { return diffusion_grad_phi(u, eps_); }
  std::string name() const override { return "diffusion"; }
  Vec with_endpoints(const Vec& interior) const;

 private:
  double eps_;
  ReferenceOp ref_;
  Vec m0_;
};

}  // namespace klgauss
