#pragma once

#include <memory>
#include <variant>

#include "klgauss/core.hpp"

namespace klgauss {

enum class GridKind { Periodic, Dirichlet };

// Uniform grid on the unit interval. Periodic grids hold x_i = i*h in [0,1);
// Dirichlet grids hold interior nodes only, the endpoints are implicit.
class Grid1D {
 public:
  static Grid1D periodic(int n_points);
  static Grid1D dirichlet(int n_points);

  int size() const { return n_; }
  GridKind kind() const { return kind_; }
  double spacing() const { return h_; }
  double node(int i) const;
  Vec nodes() const;

 private:
  Grid1D(int n, GridKind kind);
  int n_;
  GridKind kind_;
  double h_;
};

enum class Parity { Sine, Cosine };

struct FourierMode {
  Parity parity;
  int frequency;
  double eigenvalue;  // lambda^2 of the reference covariance
  double operator()(double x) const;
};

// Mode n = 1, 2, ... alternates sine/cosine at frequency ceil(n/2).
FourierMode fourier_eigenpairs(int n, double delta);

// Periodic Karhunen-Loeve basis of the covariance delta*(-d^2/dx^2)^{-1} on
// mean-zero functions. Transforms go through FFTW; coefficients are taken in
// the h-weighted grid inner product, in which the sampled modes are exactly
// orthonormal.
class FourierBasis {
 public:
  // n_modes = 0 selects every mode the grid resolves as a full sin/cos pair.
  FourierBasis(const Grid1D& grid, double delta, int n_modes = 0);

  const Grid1D& grid() const { return grid_; }
  double delta() const { return delta_; }
  int n_modes() const { return n_modes_; }
  double eigenvalue(int k) const;  // 1-based
  double amplitude(int k) const;   // sqrt(eigenvalue)

  Vec synthesize(const Vec& coeffs) const;
  Vec analyze(const Vec& field) const;
  Vec apply_covariance(const Vec& field) const;
  // <a, C0^{-1} b> restricted to the span of the basis.
  double cm_inner(const Vec& a, const Vec& b) const;

 private:
  struct Plans;
  Grid1D grid_;
  double delta_;
  int n_modes_;
  std::shared_ptr<const Plans> plans_;
};

// Centred second-difference matrix for -(1/2) d^2/dt^2 with homogeneous
// Dirichlet conditions. Stored as its two stencil values.
class DirichletPrecision {
 public:
  explicit DirichletPrecision(int n);

  int size() const { return n_; }
  double spacing() const { return h_; }
  double diagonal() const { return 1.0 / (h_ * h_); }
  double off_diagonal() const { return -0.5 / (h_ * h_); }

  Mat dense() const;
  Vec apply(const Vec& v) const;
  Vec solve(const Vec& rhs) const;
  // log det(L + diag(shift)); shift may be empty for log det L.
  double log_det(const Vec& shift = Vec()) const;

 private:
  int n_;
  double h_;
};

DirichletPrecision dirichlet_precision(int n);

// Tridiagonal solve for symmetric systems given as (diag, off-diagonal).
Vec solve_tridiagonal(const Vec& diag, const Vec& off, const Vec& rhs);

// Standard normal reference on the real line.
struct UnitScalar {};

using ReferenceOp = std::variant<UnitScalar, FourierBasis, DirichletPrecision>;

int reference_dim(const ReferenceOp& ref);
// Quadrature weight of the grid inner product (1 for the scalar case).
double quadrature_weight(const ReferenceOp& ref);
double grid_inner(const ReferenceOp& ref, const Vec& a, const Vec& b);
Vec apply_reference_covariance(const ReferenceOp& ref, const Vec& f);
double cm_inner(const ReferenceOp& ref, const Vec& a, const Vec& b);
double cameron_martin_sq(const Vec& m, const Vec& m0, const ReferenceOp& ref);

struct ScalarVariance {
  double sigma;
};

// Precision block on the first K modes is B^{-2}.
struct FiniteRank {
  Mat B;
  int rank() const { return static_cast<int>(B.rows()); }
};

struct ConstantPotential {
  double B;
  double eps;
};

struct VariablePotential {
  Vec b;
  double eps;
  double alpha;
  double right_value = 2.0;
};

using CovParam = std::variant<ScalarVariance, FiniteRank, ConstantPotential, VariablePotential>;

const char* cov_kind_name(const CovParam& cov);

struct GaussianSpec {
  Vec mean;
  Vec reference_mean;
  CovParam cov;
};

}  // namespace klgauss
