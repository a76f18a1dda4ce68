// SPDX-License-Identifier: Apache-2.0
#include "dnflow/convex_models.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "dnflow/error.hpp"

namespace dnflow {

namespace {

void require_exponent(double p, double eps) {
  if (!(p > 1.0) || !std::isfinite(p))
    fail(ErrorKind::InvalidArgument, "p-power model needs p > 1");
  if (!(eps >= 0.0) || !std::isfinite(eps))
    fail(ErrorKind::InvalidArgument, "p-power model needs eps >= 0");
}

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

// Radial profile phi(r) = ((r^2 + eps^2)^(p/2) - eps^p) / p evaluated from r^2.
double radial_value(double p, double eps, double r2) {
  if (eps == 0.0) return r2 > 0.0 ? std::pow(r2, 0.5 * p) / p : 0.0;
  const double e2 = eps * eps;
  return std::pow(eps, p) * std::expm1(0.5 * p * std::log1p(r2 / e2)) / p;
}

// (r^2 + eps^2)^((p-2)/2), the factor multiplying x in the gradient.
double radial_coefficient(double p, double eps, double r2, const char* what) {
  const double s = r2 + eps * eps;
  if (s > 0.0) return std::pow(s, 0.5 * (p - 2.0));
  if (p < 2.0)
    fail(ErrorKind::SingularPoint,
         std::string(what) + ": gradient is singular at 0 for p < 2 and eps = 0; regularize");
  return p == 2.0 ? 1.0 : 0.0;
}

void radial_grad(double p, double eps, std::span<const double> x, std::span<double> out,
                 const char* what) {
  const double c = radial_coefficient(p, eps, squared_norm(x), what);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
}

void radial_hess(double p, double eps, std::span<const double> x, std::span<double> out,
                 const char* what) {
  const std::size_t d = x.size();
  const double r2 = squared_norm(x);
  const double c = radial_coefficient(p, eps, r2, what);
  const double s = r2 + eps * eps;
  const double c2 = (s > 0.0 && r2 > 0.0) ? (p - 2.0) * std::pow(s, 0.5 * (p - 4.0)) : 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out[i * d + j] = (i == j ? c : 0.0) + c2 * x[i] * x[j];
}

// sup_r { r t - phi(r) } for the regularized radial profile.
double radial_legendre(double p, double eps, double t) {
  if (t == 0.0) return 0.0;
  if (eps == 0.0) {
    const double q = p / (p - 1.0);
    return std::pow(t, q) / q;
  }
  // phi'(r) = (r^2 + eps^2)^((p-2)/2) r is increasing from 0; solve phi'(r) = t.
  auto dphi = [&](double r) { return std::pow(r * r + eps * eps, 0.5 * (p - 2.0)) * r; };
  double hi = std::max(1.0, t);
  while (dphi(hi) < t) hi *= 2.0;
  auto f = [&](double r) {
    const double s = r * r + eps * eps;
    const double val = std::pow(s, 0.5 * (p - 2.0)) * r - t;
    const double der =
        std::pow(s, 0.5 * (p - 2.0)) + (p - 2.0) * std::pow(s, 0.5 * (p - 4.0)) * r * r;
    return std::make_pair(val, der);
  };
  std::uintmax_t iters = 200;
  const double r = boost::math::tools::newton_raphson_iterate(f, 0.5 * hi, 0.0, hi, 50, iters);
  return r * t - radial_value(p, eps, r * r);
}

// Uniform double in [0, 1) from the top 53 bits; fixed across platforms.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

// --- DissipationSpec --------------------------------------------------------

DissipationSpec DissipationSpec::ppower(int m, double p, double eps) {
  if (m < 1) fail(ErrorKind::InvalidArgument, "component count m must be >= 1");
  require_exponent(p, eps);
  DissipationSpec s;
  s.model_ = PPower{p, eps};
  s.m_ = m;
  return s;
}

DissipationSpec DissipationSpec::quadratic(const Eigen::MatrixXd& A) {
  if (A.rows() < 1 || A.rows() != A.cols())
    fail(ErrorKind::InvalidArgument, "quadratic dissipation needs a square matrix");
  if (!A.allFinite() || (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * A.cwiseAbs().maxCoeff())
    fail(ErrorKind::InvalidArgument, "quadratic dissipation matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  if (!(eig.eigenvalues().minCoeff() > 0.0))
    fail(ErrorKind::InvalidArgument, "quadratic dissipation matrix must be positive definite");
  DissipationSpec s;
  s.model_ = Quadratic{A};
  s.m_ = static_cast<int>(A.rows());
  s.alpha_ = eig.eigenvalues().minCoeff();
  s.a_max_ = eig.eigenvalues().maxCoeff();
  s.a_inv_ = A.inverse();
  return s;
}

double DissipationSpec::exponent() const {
  if (const auto* pp = std::get_if<PPower>(&model_)) return pp->p;
  return 2.0;
}

double DissipationSpec::eps() const {
  if (const auto* pp = std::get_if<PPower>(&model_)) return pp->eps;
  return 0.0;
}

DissipationSpec DissipationSpec::with_eps(double eps) const {
  if (const auto* pp = std::get_if<PPower>(&model_)) return ppower(m_, pp->p, eps);
  return *this;
}

// --- EnergySpec -------------------------------------------------------------

EnergySpec EnergySpec::ppower_norm(int m, int n, double p, double eps) {
  if (m < 1 || n < 1) fail(ErrorKind::InvalidArgument, "energy model needs m, n >= 1");
  require_exponent(p, eps);
  EnergySpec s;
  s.model_ = PPowerNorm{p, eps};
  s.m_ = m;
  s.n_ = n;
  return s;
}

EnergySpec EnergySpec::quadratic_frobenius(int m, int n, double theta) {
  if (m < 1 || n < 1) fail(ErrorKind::InvalidArgument, "energy model needs m, n >= 1");
  if (!(theta > 0.0) || !std::isfinite(theta))
    fail(ErrorKind::InvalidArgument, "quadratic energy needs theta > 0");
  EnergySpec s;
  s.model_ = QuadraticFrobenius{theta};
  s.m_ = m;
  s.n_ = n;
  return s;
}

double EnergySpec::exponent() const {
  if (const auto* pp = std::get_if<PPowerNorm>(&model_)) return pp->p;
  return 2.0;
}

double EnergySpec::eps() const {
  if (const auto* pp = std::get_if<PPowerNorm>(&model_)) return pp->eps;
  return 0.0;
}

EnergySpec EnergySpec::with_eps(double eps) const {
  if (const auto* pp = std::get_if<PPowerNorm>(&model_)) return ppower_norm(m_, n_, pp->p, eps);
  return *this;
}

EnergySpec EnergySpec::reshaped(int m, int n) const {
  EnergySpec s = *this;
  if (m < 1 || n < 1) fail(ErrorKind::InvalidArgument, "energy model needs m, n >= 1");
  s.m_ = m;
  s.n_ = n;
  return s;
}

// --- psi --------------------------------------------------------------------

double psi_eval(const DissipationSpec& spec, std::span<const double> w) {
  if (const auto* pp = std::get_if<PPower>(&spec.model()))
    return radial_value(pp->p, pp->eps, squared_norm(w));
  const auto& A = std::get<Quadratic>(spec.model()).A;
  const Eigen::Map<const Eigen::VectorXd> x(w.data(), static_cast<Eigen::Index>(w.size()));
  return 0.5 * x.dot(A * x);
}

void psi_grad(const DissipationSpec& spec, std::span<const double> w, std::span<double> out) {
  if (const auto* pp = std::get_if<PPower>(&spec.model())) {
    radial_grad(pp->p, pp->eps, w, out, "psi");
    return;
  }
  const auto& A = std::get<Quadratic>(spec.model()).A;
  const Eigen::Map<const Eigen::VectorXd> x(w.data(), static_cast<Eigen::Index>(w.size()));
  Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = A * x;
}

std::vector<double> psi_grad(const DissipationSpec& spec, std::span<const double> w) {
  std::vector<double> out(w.size());
  psi_grad(spec, w, out);
  return out;
}

void psi_hess(const DissipationSpec& spec, std::span<const double> w, std::span<double> out) {
  if (const auto* pp = std::get_if<PPower>(&spec.model())) {
    radial_hess(pp->p, pp->eps, w, out, "psi");
    return;
  }
  const auto& A = std::get<Quadratic>(spec.model()).A;
  const auto m = static_cast<std::size_t>(A.rows());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = A(i, j);
}

double psi_legendre(const DissipationSpec& spec, std::span<const double> xi) {
  if (const auto* pp = std::get_if<PPower>(&spec.model()))
    return radial_legendre(pp->p, pp->eps, std::sqrt(squared_norm(xi)));
  const Eigen::Map<const Eigen::VectorXd> x(xi.data(), static_cast<Eigen::Index>(xi.size()));
  return 0.5 * x.dot(spec.a_inverse() * x);
}

double dissipation_potential(const DissipationSpec& spec, std::span<const double> w) {
  if (const auto* pp = std::get_if<PPower>(&spec.model())) {
    const double r2 = squared_norm(w);
    return radial_coefficient(pp->p, pp->eps, r2, "psi") * r2 - radial_value(pp->p, pp->eps, r2);
  }
  // Dpsi(w).w - psi(w) = psi(w) for a quadratic form
  return psi_eval(spec, w);
}

// --- F ----------------------------------------------------------------------

double F_eval(const EnergySpec& spec, std::span<const double> M) {
  if (const auto* pp = std::get_if<PPowerNorm>(&spec.model()))
    return radial_value(pp->p, pp->eps, squared_norm(M));
  return 0.5 * std::get<QuadraticFrobenius>(spec.model()).theta * squared_norm(M);
}

void F_grad(const EnergySpec& spec, std::span<const double> M, std::span<double> out) {
  if (const auto* pp = std::get_if<PPowerNorm>(&spec.model())) {
    radial_grad(pp->p, pp->eps, M, out, "F");
    return;
  }
  const double theta = std::get<QuadraticFrobenius>(spec.model()).theta;
  for (std::size_t i = 0; i < M.size(); ++i) out[i] = theta * M[i];
}

std::vector<double> F_grad(const EnergySpec& spec, std::span<const double> M) {
  std::vector<double> out(M.size());
  F_grad(spec, M, out);
  return out;
}

void F_hess(const EnergySpec& spec, std::span<const double> M, std::span<double> out) {
  if (const auto* pp = std::get_if<PPowerNorm>(&spec.model())) {
    radial_hess(pp->p, pp->eps, M, out, "F");
    return;
  }
  const double theta = std::get<QuadraticFrobenius>(spec.model()).theta;
  const std::size_t d = M.size();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = i == j ? theta : 0.0;
}

// --- growth / coercivity ------------------------------------------------------

namespace {

// Analytic constants of one model: value >= gamma r^p - beta and
// |gradient| <= slope r^(p-1) + offset.
struct ModelConstants {
  double gamma, beta, slope, offset;
};

ModelConstants radial_constants(double p, double eps) {
  if (eps == 0.0) return {1.0 / p, 0.0, 1.0, 0.0};
  const double c = p >= 2.0 ? std::max(1.0, std::pow(2.0, 0.5 * (p - 3.0))) : 1.0;
  const double offset = p >= 2.0 ? c * std::pow(eps, p - 1.0) : 0.0;
  return {1.0 / (2.0 * p), std::pow(eps, p) / p, c, offset};
}

}  // namespace

GrowthReport check_growth_coercivity(const DissipationSpec& dspec, const EnergySpec& espec,
                                     int sample_count, std::uint64_t seed) {
  if (sample_count < 1) fail(ErrorKind::InvalidArgument, "sample_count must be >= 1");
  if (dspec.m() != espec.m())
    fail(ErrorKind::ModelMismatch, "psi and F disagree on the component count m");

  const double p = dspec.exponent();
  ModelConstants cp, cf;
  if (const auto* pp = std::get_if<PPower>(&dspec.model()))
    cp = radial_constants(pp->p, pp->eps);
  else
    cp = {0.5 * dspec.alpha(), 0.0, dspec.a_max(), 0.0};
  if (const auto* pf = std::get_if<PPowerNorm>(&espec.model()))
    cf = radial_constants(pf->p, pf->eps);
  else {
    const double theta = std::get<QuadraticFrobenius>(espec.model()).theta;
    cf = {0.5 * theta, 0.0, theta, 0.0};
  }

  GrowthReport report;
  report.p = p;
  report.gamma = std::min(cp.gamma, cf.gamma);
  report.beta = cp.beta + cf.beta;
  if (dspec.eps() > 0.0 || espec.eps() > 0.0) report.beta = std::max(report.beta, 1.0);
  report.C = std::max({cp.slope, cf.slope, cp.offset + cf.offset});

  const int m = dspec.m();
  const int mn = espec.m() * espec.n();
  std::mt19937_64 rng(seed);
  std::vector<double> w(m), M(mn), gw(m), gM(mn);
  report.worst_coercivity_gap = std::numeric_limits<double>::infinity();
  report.worst_growth_gap = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (int s = 0; s < sample_count; ++s) {
    const double rw = std::pow(10.0, -3.0 + 6.0 * unit_uniform(rng));
    const double rM = std::pow(10.0, -3.0 + 6.0 * unit_uniform(rng));
    for (auto* v : {&w, &M}) {
      for (double& x : *v) x = standard_normal(rng);
      const double nrm = std::sqrt(squared_norm(*v));
      const double target = v == &w ? rw : rM;
      for (double& x : *v) x *= target / nrm;
    }
    psi_grad(dspec, w, gw);
    F_grad(espec, M, gM);
    const double lhs_c = psi_eval(dspec, w) + F_eval(espec, M);
    const double rhs_c = report.gamma * (std::pow(rw, p) + std::pow(rM, p)) - report.beta;
    const double lhs_g = std::sqrt(squared_norm(gw)) + std::sqrt(squared_norm(gM));
    const double rhs_g = report.C * (std::pow(rw, p - 1.0) + std::pow(rM, p - 1.0) + 1.0);
    const double gap_c = lhs_c - rhs_c;
    const double gap_g = rhs_g - lhs_g;
    report.worst_coercivity_gap = std::min(report.worst_coercivity_gap, gap_c);
    report.worst_growth_gap = std::min(report.worst_growth_gap, gap_g);
    const double round_c = 1e-12 * (std::abs(lhs_c) + std::abs(rhs_c));
    const double round_g = 1e-12 * (std::abs(lhs_g) + std::abs(rhs_g));
    if (gap_c < -round_c || gap_g < -round_g) ok = false;
  }
  report.pass = ok;
  return report;
}

}  // namespace dnflow
