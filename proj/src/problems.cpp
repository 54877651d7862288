#include "klgauss/problems.hpp"

#include <cmath>

namespace klgauss {

PhiGrad scalar_phi_and_grad(double x, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("temperature must be positive");
  const double x2 = x * x;
  return {(x2 * x2 + 0.5 * x2) / eps - 0.5 * x2, (4.0 * x2 * x + x) / eps - x};
}

ScalarDoubleWell::ScalarDoubleWell(double eps) : eps_(eps), ref_(UnitScalar{}), m0_(Vec::Zero(1)) {
  if (!(eps > 0.0)) throw InvalidArgument("temperature must be positive");
}

double ScalarDoubleWell::phi(const Vec& u) const { return scalar_phi_and_grad(u[0], eps_).value; }

Vec ScalarDoubleWell::grad_phi(const Vec& u) const {
  Vec g(1);
  g[0] = scalar_phi_and_grad(u[0], eps_).derivative;
  return g;
}

FlatProblem::FlatProblem(ReferenceOp ref, Vec m0) : ref_(std::move(ref)), m0_(std::move(m0)) {
  if (m0_.size() != reference_dim(ref_)) throw InvalidArgument("reference mean does not match reference");
}

namespace {

// exp(-u) at nodes 0..n (periodic wrap) and its trapezoid cumulative integral.
struct Cumulative {
  Vec e;
  Vec J;
  double h;
};

Cumulative cumulative(const Vec& u) {
  const Eigen::Index n = u.size();
  if (n < 2) throw InvalidArgument("Darcy grid needs at least 2 nodes");
  Cumulative c{Vec(n + 1), Vec(n + 1), 1.0 / static_cast<double>(n)};
  for (Eigen::Index i = 0; i < n; ++i) c.e[i] = std::exp(-u[i]);
  c.e[n] = c.e[0];
  c.J[0] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) c.J[i + 1] = c.J[i] + 0.5 * c.h * (c.e[i] + c.e[i + 1]);
  return c;
}

struct Cell {
  Eigen::Index k;
  double theta;
};

Cell locate(double x, Eigen::Index n) {
  if (!(x > 0.0 && x < 1.0)) throw InvalidArgument("observation point must lie in (0,1)");
  const double s = x * static_cast<double>(n);
  Eigen::Index k = static_cast<Eigen::Index>(std::floor(s));
  if (k >= n) k = n - 1;
  return {k, s - static_cast<double>(k)};
}

double interp_J(const Cumulative& c, double x) {
  const Cell cell = locate(x, c.e.size() - 1);
  return c.J[cell.k] + cell.theta * (c.J[cell.k + 1] - c.J[cell.k]);
}

Vec residuals(const Vec& u, const DarcyObservations& obs) {
  if (obs.points.size() != obs.data.size()) throw InvalidArgument("observation points and data differ in length");
  return darcy_observe(u, obs.points, obs.p_minus, obs.p_plus) - obs.data;
}

}  // namespace

Vec darcy_forward(const Vec& u, double p_minus, double p_plus) {
  const Cumulative c = cumulative(u);
  const Eigen::Index n = u.size();
  return (p_plus - p_minus) * c.J.head(n) / c.J[n] + Vec::Constant(n, p_minus);
}

Vec darcy_observe(const Vec& u, const Vec& points, double p_minus, double p_plus) {
  const Cumulative c = cumulative(u);
  const double Jn = c.J[u.size()];
  Vec p(points.size());
  for (Eigen::Index j = 0; j < points.size(); ++j) p[j] = p_minus + (p_plus - p_minus) * interp_J(c, points[j]) / Jn;
  return p;
}

double darcy_phi(const Vec& u, const DarcyObservations& obs) {
  return 0.5 * residuals(u, obs).squaredNorm() / (obs.gamma_obs * obs.gamma_obs);
}

Vec darcy_adjoint(const Vec& u, const Vec& p, const DarcyObservations& obs) {
  const Eigen::Index n = u.size();
  if (p.size() != n) throw InvalidArgument("pressure length does not match grid");
  const Cumulative c = cumulative(u);
  Vec p_ext(n + 1);
  p_ext.head(n) = p;
  p_ext[n] = obs.p_plus;

  const double g2 = obs.gamma_obs * obs.gamma_obs;
  Vec K = Vec::Zero(n + 1);
  for (Eigen::Index j = 0; j < obs.points.size(); ++j) {
    const Cell cell = locate(obs.points[j], n);
    const double pj = p_ext[cell.k] + cell.theta * (p_ext[cell.k + 1] - p_ext[cell.k]);
    const double weight = (pj - obs.data[j]) / g2;
    // Split the trapezoid cell at the observation point.
    const double e_obs = c.e[cell.k] + cell.theta * (c.e[cell.k + 1] - c.e[cell.k]);
    const double J_obs = c.J[cell.k] + 0.5 * cell.theta * c.h * (c.e[cell.k] + e_obs);
    for (Eigen::Index i = cell.k + 1; i <= n; ++i) K[i] += weight * (c.J[i] - J_obs);
  }
  Vec q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = K[i] - K[n] * c.J[i] / c.J[n];
  return q;
}

Vec darcy_grad_phi(const Vec& u, const DarcyObservations& obs) {
  const Eigen::Index n = u.size();
  const Cumulative c = cumulative(u);
  const double Jn = c.J[n];
  const Vec r = residuals(u, obs);
  const double g2 = obs.gamma_obs * obs.gamma_obs;

  // Nodal slopes of p and q; c_i(x_o) is the trapezoid weight of node i in
  // the integral of exp(-u) up to x_o, so the product below is the exact
  // derivative of the discrete Phi.
  Vec dq = Vec::Zero(n);
  Vec weight(n);
  for (Eigen::Index j = 0; j < obs.points.size(); ++j) {
    const Cell cell = locate(obs.points[j], n);
    weight.setZero();
    if (cell.k >= 1) {
      weight[0] += 0.5;
      for (Eigen::Index i = 1; i < cell.k; ++i) weight[i] = 1.0;
      weight[cell.k] += 0.5;
    }
    weight[cell.k] += 0.5 * cell.theta;
    weight[(cell.k + 1) % n] += 0.5 * cell.theta;
    const double ratio = interp_J(c, obs.points[j]) / Jn;
    dq += (r[j] / g2) * (Vec::Constant(n, ratio) - weight);
  }
  Vec g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dp = (obs.p_plus - obs.p_minus) * c.e[i] / Jn;
    g[i] = std::exp(u[i]) * dp * (c.e[i] * dq[i]);
  }
  return g;
}

SyntheticData synthesize_data(const Vec& u_true, const Vec& points, double gamma_obs, double p_minus,
                              double p_plus, RandomStream& rng) {
  if (gamma_obs < 0.0) throw InvalidArgument("observation noise must be non-negative");
  SyntheticData d;
  d.noise = gamma_obs * rng.normal_vector(points.size());
  d.y = darcy_observe(u_true, points, p_minus, p_plus) + d.noise;
  return d;
}

DarcyProblem::DarcyProblem(FourierBasis basis, DarcyObservations obs)
    : ref_(std::move(basis)), m0_(Vec::Zero(reference_dim(ref_))), obs_(std::move(obs)) {
  if (!(obs_.gamma_obs > 0.0)) throw InvalidArgument("observation noise must be positive");
  if (obs_.points.size() != obs_.data.size()) throw InvalidArgument("observation points and data differ in length");
  for (Eigen::Index j = 0; j < obs_.points.size(); ++j)
    if (!(obs_.points[j] > 0.0 && obs_.points[j] < 1.0)) throw InvalidArgument("observation point outside (0,1)");
}

double diffusion_phi(const Vec& path, double eps) {
  if (path.size() < 2) throw InvalidArgument("path needs endpoint values");
  const double h = 1.0 / static_cast<double>(path.size() - 1);
  const Eigen::Index n = path.size();
  auto f = [&](Eigen::Index i) {
    const double s = 1.0 - path[i] * path[i];
    return s * s;
  };
  double sum = 0.5 * (f(0) + f(n - 1));
  for (Eigen::Index i = 1; i + 1 < n; ++i) sum += f(i);
  return h * sum / (4.0 * eps * eps);
}

Vec diffusion_grad_phi(const Vec& w, double eps) {
  return (w.array() * (w.array().square() - 1.0) / (eps * eps)).matrix();
}

double diffusion_db_phinu0_constant(const Vec& path, double eps) {
  if (path.size() < 2) throw InvalidArgument("path needs endpoint values");
  const Eigen::Index n = path.size();
  const double h = 1.0 / static_cast<double>(n - 1);
  const double sum = path.squaredNorm() - 0.5 * (path[0] * path[0] + path[n - 1] * path[n - 1]);
  return h * sum / (4.0 * eps * eps);
}

Vec diffusion_db_phinu0_variable(const Vec& path, double eps) {
  return (path.array().square() / (4.0 * eps * eps)).matrix();
}

DiffusionProblem::DiffusionProblem(double eps, int n_interior)
    : eps_(eps), ref_(DirichletPrecision(n_interior)), m0_(Grid1D::dirichlet(n_interior).nodes()) {
  if (!(eps > 0.0)) throw InvalidArgument("temperature must be positive");
}

Vec DiffusionProblem::with_endpoints(const Vec& interior) const {
  Vec path(interior.size() + 2);
  path[0] = 0.0;
  path.segment(1, interior.size()) = interior;
  path[interior.size() + 1] = 1.0;
  return path;
}

double DiffusionProblem::phi(const Vec& u) const { return diffusion_phi(with_endpoints(u), eps_); }

}  // namespace klgauss
