// SPDX-License-Identifier: Apache-2.0
#include "dnflow/spectral_flow.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "dnflow/error.hpp"
#include "stencil.hpp"

namespace dnflow {

namespace {

double require_ppower_pair(const Trajectory& traj, const char* what) {
  if (!traj.dissipation.is_ppower() || !traj.energy.is_ppower() ||
      traj.dissipation.exponent() != traj.energy.exponent())
    fail(ErrorKind::ModelMismatch, std::string(what) + " needs p-power models with a common p");
  return traj.dissipation.exponent();
}

// |x|^(p-2) x, with the continuous extension 0 at x = 0.
void signed_power(std::span<const double> x, double p, std::span<double> out) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  const double c = r2 > 0.0 ? std::pow(r2, 0.5 * (p - 2.0)) : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
}

// Rayleigh quotient pieces on flat component-major vectors.
class RayleighTerms {
 public:
  RayleighTerms(const Grid& grid, int m, double p)
      : grid_(grid), m_(m), dim_(grid.dim()), nodes_(grid.node_count()), p_(p),
        stencils_(detail::build_stencils(grid)) {}

  // sum_cells |Du|^p and sum_nodes |u|^p without the h^n weight
  double numerator(const Eigen::VectorXd& u) const {
    double s = 0.0;
    std::vector<double> M(m_ * dim_);
    for (int k = 0; k < grid_.cell_count(); ++k) {
      cell_matrix(u, k, M);
      double r2 = 0.0;
      for (double v : M) r2 += v * v;
      if (r2 > 0.0) s += std::pow(r2, 0.5 * p_);
    }
    return s;
  }

  double denominator(const Eigen::VectorXd& u) const {
    double s = 0.0;
    for (int i = 0; i < nodes_; ++i) {
      double r2 = 0.0;
      for (int c = 0; c < m_; ++c) r2 += u[c * nodes_ + i] * u[c * nodes_ + i];
      if (r2 > 0.0) s += std::pow(r2, 0.5 * p_);
    }
    return s;
  }

  double quotient(const Eigen::VectorXd& u) const { return numerator(u) / denominator(u); }

  // Gradient of the quotient.
  Eigen::VectorXd quotient_gradient(const Eigen::VectorXd& u) const {
    const double A = numerator(u), B = denominator(u);
    const double R = A / B;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
    std::vector<double> M(m_ * dim_), F(m_ * dim_), w(m_), gw(m_);
    for (int k = 0; k < grid_.cell_count(); ++k) {
      const auto& st = stencils_[k];
      if (st.count == 0) continue;
      cell_matrix(u, k, M);
      signed_power(M, p_, F);
      for (int s = 0; s < st.count; ++s)
        for (int c = 0; c < m_; ++c) {
          double acc = 0.0;
          for (int a = 0; a < dim_; ++a) acc += st.coef[s][a] * F[c * dim_ + a];
          g[c * nodes_ + st.nodes[s]] += p_ * acc;
        }
    }
    for (int i = 0; i < nodes_; ++i) {
      for (int c = 0; c < m_; ++c) w[c] = u[c * nodes_ + i];
      signed_power(w, p_, gw);
      for (int c = 0; c < m_; ++c) g[c * nodes_ + i] -= R * p_ * gw[c];
    }
    return g / B;
  }

  double lp_norm(const Eigen::VectorXd& u) const {
    return std::pow(grid_.cell_volume() * denominator(u), 1.0 / p_);
  }

 private:
  void cell_matrix(const Eigen::VectorXd& u, int k, std::vector<double>& M) const {
    std::fill(M.begin(), M.end(), 0.0);
    const auto& st = stencils_[k];
    for (int s = 0; s < st.count; ++s)
      for (int c = 0; c < m_; ++c) {
        const double val = u[c * nodes_ + st.nodes[s]];
        for (int a = 0; a < dim_; ++a) M[c * dim_ + a] += st.coef[s][a] * val;
      }
  }

  Grid grid_;
  int m_, dim_, nodes_;
  double p_;
  std::vector<detail::CellStencil> stencils_;
};

// Scalar Dirichlet Laplacian G^T G, used as the preconditioner.
Eigen::SparseMatrix<double> scalar_laplacian(const Grid& grid) {
  const auto stencils = detail::build_stencils(grid);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& st : stencils)
    for (int s = 0; s < st.count; ++s)
      for (int t = 0; t < st.count; ++t) {
        double acc = 0.0;
        for (int a = 0; a < grid.dim(); ++a) acc += st.coef[s][a] * st.coef[t][a];
        trip.emplace_back(st.nodes[s], st.nodes[t], acc);
      }
  Eigen::SparseMatrix<double> L(grid.node_count(), grid.node_count());
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

GroundStateReport finish_report(const VectorField& u, double p, std::vector<double> history,
                                int iterations, bool converged) {
  GroundStateReport rep;
  rep.p = p;
  rep.m = u.m();
  rep.profile = canonical_gauge(u);
  rep.lambda_estimate = rayleigh_quotient(rep.profile, p);
  rep.upsilon = std::pow(rep.lambda_estimate, 1.0 / (p - 1.0));
  rep.rayleigh_history = std::move(history);
  rep.iterations = iterations;
  rep.converged = converged;
  return rep;
}

}  // namespace

SeriesReport rayleigh_series(const Trajectory& traj, double p) {
  if (require_ppower_pair(traj, "rayleigh_series") != p)
    fail(ErrorKind::ModelMismatch, "rayleigh_series: p does not match the models");
  SeriesReport rep;
  rep.name = "rayleigh";
  rep.slack = 100.0 * traj.residual_tol;
  double prev = 0.0;
  for (int k = 0; k <= traj.steps(); ++k) {
    const double B = std::pow(lp_norm(traj.fields[k], p), p);
    if (!(B > 0.0)) {
      if (k == 0) fail(ErrorKind::ZeroField, "rayleigh_series: initial datum vanishes");
      break;
    }
    const double R = rayleigh_quotient(traj.fields[k], p);
    if (k > 0) rep.monotone_violation = std::max(rep.monotone_violation, (R - prev) * B);
    rep.times.push_back(traj.time(k));
    rep.values.push_back(R);
    prev = R;
  }
  rep.pass = rep.monotone_violation <= rep.slack;
  return rep;
}

VectorField canonical_gauge(const VectorField& u) {
  const int m = u.m(), nodes = u.node_count();
  VectorField out = u;
  if (m > 1) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd x(m);
    for (int i = 0; i < nodes; ++i) {
      for (int c = 0; c < m; ++c) x[c] = u(c, i);
      S += x * x.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    const Eigen::VectorXd z = eig.eigenvectors().col(m - 1);
    // Householder reflector taking z to e1.
    Eigen::VectorXd v = z;
    v[0] -= 1.0;
    const double vv = v.squaredNorm();
    if (vv > 1e-28) {
      const Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m) - 2.0 * v * v.transpose() / vv;
      for (int i = 0; i < nodes; ++i) {
        for (int c = 0; c < m; ++c) x[c] = u(c, i);
        const Eigen::VectorXd y = H * x;
        for (int c = 0; c < m; ++c) out(c, i) = y[c];
      }
    }
  }
  double sum = 0.0;
  for (double v : out.component(0)) sum += v;
  if (sum < 0.0) out *= -1.0;
  return out;
}

GroundStateReport ground_state_via_flow(const VectorField& g, double p, const FlowConfig& cfg) {
  if (!(p > 1.0)) fail(ErrorKind::InvalidArgument, "ground_state_via_flow needs p > 1");
  const double g_norm = lp_norm(g, p);
  if (!(g_norm > 0.0)) fail(ErrorKind::ZeroField, "ground_state_via_flow: initial datum vanishes");
  const double eps = cfg.eps >= 0.0 ? cfg.eps : (p < 2.0 ? 1e-8 : 0.0);
  const auto dspec = DissipationSpec::ppower(g.m(), p, eps);
  const auto espec = EnergySpec::ppower_norm(g.m(), g.grid().dim(), p, eps);
  std::vector<double> schedule = cfg.eps_schedule;
  if (schedule.empty() && p < 2.0) schedule = {1e-2, 1e-4, 1e-6};

  VectorField u = g;
  u *= 1.0 / g_norm;
  double R = rayleigh_quotient(u, p);
  std::vector<double> history{R};
  int sweep = 0;
  bool converged = false;
  while (sweep < cfg.max_sweeps) {
    ++sweep;
    const double upsilon_guess = std::pow(R, 1.0 / (p - 1.0));
    StepConfig sc;
    sc.tau = 1.0 / upsilon_guess;
    sc.residual_tol = cfg.step_tol * std::max(1.0, stored_energy(u, espec));
    sc.max_iter = cfg.step_max_iter;
    sc.eps_schedule = schedule;
    VectorField w = step(u, dspec, espec, sc).field;
    const double nrm = lp_norm(w, p);
    if (!(nrm >= 1e-300)) fail(ErrorKind::ZeroCollapse, "flow iterate collapsed to zero");
    w *= 1.0 / nrm;
    const double Rn = rayleigh_quotient(w, p);
    const double change = lp_norm(w - u, p);
    history.push_back(Rn);
    u = std::move(w);
    const bool stalled = std::abs(Rn - R) <= cfg.rq_tol * Rn;
    R = Rn;
    if (stalled && change <= cfg.profile_tol) {
      converged = true;
      break;
    }
  }
  return finish_report(u, p, std::move(history), sweep, converged);
}

GroundStateReport direct_rayleigh_minimize(const Grid& grid, double p, int m, std::uint64_t seed,
                                           const DirectConfig& cfg) {
  if (!(p > 1.0)) fail(ErrorKind::InvalidArgument, "direct_rayleigh_minimize needs p > 1");
  if (m < 1) fail(ErrorKind::InvalidArgument, "component count m must be >= 1");
  const int nodes = grid.node_count();
  const RayleighTerms terms(grid, m, p);

  std::mt19937_64 rng(seed);
  Eigen::VectorXd u(static_cast<Eigen::Index>(m) * nodes);
  for (Eigen::Index i = 0; i < u.size(); ++i)
    u[i] = 0.05 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
  u /= terms.lp_norm(u);

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> precond(scalar_laplacian(grid));
  auto apply_preconditioner = [&](const Eigen::VectorXd& g) {
    Eigen::VectorXd z(g.size());
    for (int c = 0; c < m; ++c) z.segment(c * nodes, nodes) = precond.solve(g.segment(c * nodes, nodes));
    return z;
  };

  double R = terms.quotient(u);
  std::vector<double> history{R};
  Eigen::VectorXd grad = terms.quotient_gradient(u);
  Eigen::VectorXd z = apply_preconditioner(grad);
  Eigen::VectorXd d = -z;
  auto relative_gradient = [&](const Eigen::VectorXd& g, const Eigen::VectorXd& x, double q) {
    return g.norm() * x.norm() / q;
  };
  double alpha_guess = 1.0;
  int it = 0;
  bool converged = relative_gradient(grad, u, R) <= cfg.grad_tol;
  bool restarted = false;
  while (!converged && it < cfg.max_iter) {
    ++it;
    if (grad.dot(d) >= 0.0) d = -z;
    auto slope = [&](double a) { return terms.quotient_gradient(u + a * d).dot(d); };

    // Bracket a sign change of the directional derivative, then solve for it.
    double lo = 0.0, hi = alpha_guess;
    double s_hi = slope(hi);
    int guard = 0;
    while (s_hi < 0.0 && guard++ < 40) {
      lo = hi;
      hi *= 2.0;
      s_hi = slope(hi);
    }
    double step_len = hi;
    if (s_hi > 0.0) {
      std::uintmax_t max_eval = 80;
      auto root = boost::math::tools::toms748_solve(slope, lo, hi, slope(lo), s_hi,
                                                    boost::math::tools::eps_tolerance<double>(50), max_eval);
      step_len = 0.5 * (root.first + root.second);
    }
    if (!(step_len > 0.0) || !std::isfinite(step_len)) {
      if (restarted) break;
      restarted = true;
      d = -z;
      continue;
    }
    alpha_guess = step_len;

    Eigen::VectorXd next = u + step_len * d;
    const double scale = 1.0 / terms.lp_norm(next);
    next *= scale;
    const Eigen::VectorXd grad_new = terms.quotient_gradient(next);
    const Eigen::VectorXd z_new = apply_preconditioner(grad_new);
    const double Rn = terms.quotient(next);
    history.push_back(Rn);
    // Polak-Ribiere+ with the preconditioned inner product; the quotient is
    // 0-homogeneous, so the old gradient and direction rescale with 1 / scale
    // and scale.
    const double beta = std::max(0.0, z_new.dot(grad_new - grad / scale) /
                                           (z.dot(grad) / (scale * scale)));
    const bool progress = grad_new.norm() < grad.norm() / scale || Rn < R;
    d = -z_new + beta * (scale * d);
    u = std::move(next);
    grad = grad_new;
    z = z_new;
    R = Rn;
    converged = relative_gradient(grad, u, R) <= cfg.grad_tol;
    if (progress) {
      restarted = false;
    } else {
      if (restarted) break;  // stationary to rounding
      restarted = true;
      d = -z;
    }
  }
  VectorField field(grid, m, std::vector<double>(u.data(), u.data() + u.size()));
  return finish_report(field, p, std::move(history), it, converged);
}

double el_residual(const VectorField& u, double lambda, double p) {
  if (!(p > 1.0)) fail(ErrorKind::InvalidArgument, "el_residual needs p > 1");
  if (!(lp_norm(u, p) > 0.0)) fail(ErrorKind::ZeroField, "el_residual of the zero field");
  CellGradient flux = gradient(u);
  const int md = u.m() * u.grid().dim();
  std::vector<double> M(md), F(md);
  for (int k = 0; k < flux.cell_count(); ++k) {
    flux.load(k, M);
    signed_power(M, p, F);
    flux.store(k, F);
  }
  VectorField defect = divergence_adjoint(flux);
  std::vector<double> w(u.m()), gw(u.m());
  for (int i = 0; i < u.node_count(); ++i) {
    for (int c = 0; c < u.m(); ++c) w[c] = u(c, i);
    signed_power(w, p, gw);
    for (int c = 0; c < u.m(); ++c) defect(c, i) += lambda * gw[c];
  }
  double s = 0.0;
  for (double x : defect.values()) s += x * x;
  return std::sqrt(s * u.grid().cell_volume());
}

LambdaBounds lambda_bounds_check(double lambda_vec, double lambda_scalar, double p, int m) {
  if (m < 1) fail(ErrorKind::InvalidArgument, "component count m must be >= 1");
  LambdaBounds b;
  const double slack = 1e-6 * lambda_scalar;
  b.lower = std::pow(static_cast<double>(m), -std::abs(0.5 * p - 1.0)) * lambda_scalar;
  b.upper = lambda_scalar;
  b.margin = std::min(lambda_vec - (b.lower - slack), (b.upper + slack) - lambda_vec);
  b.pass = b.margin >= 0.0;
  return b;
}

DecayFit decay_rate_fit(const Trajectory& traj, double p, double upsilon_h) {
  if (require_ppower_pair(traj, "decay_rate_fit") != p)
    fail(ErrorKind::ModelMismatch, "decay_rate_fit: p does not match the models");
  const int N = traj.steps();
  if (N < 8) fail(ErrorKind::DegenerateFit, "decay_rate_fit needs at least 8 steps");
  std::vector<double> A;
  for (const auto& v : traj.fields) {
    const double e = std::pow(w1p_seminorm(v, p), p);
    if (!(e > 0.0)) fail(ErrorKind::DegenerateFit, "energy vanished along the trajectory");
    A.push_back(e);
  }
  // least-squares slope of log A against t
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double t = traj.time(k), y = std::log(A[k]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double n = N + 1.0;
  DecayFit fit;
  fit.fitted_rate = -(n * sty - st * sy) / (n * stt - st * st);
  fit.bound_rate = p * discrete_upsilon(traj.tau, upsilon_h);
  bool ok = true;
  for (int k = 0; k <= N; ++k) {
    const double bound = std::exp(-fit.bound_rate * traj.time(k)) * A[0] * (1.0 + 1e-8);
    fit.max_bound_violation = std::max(fit.max_bound_violation, A[k] - bound);
    if (A[k] > bound) ok = false;
  }
  fit.pass = ok;
  return fit;
}

}  // namespace dnflow
