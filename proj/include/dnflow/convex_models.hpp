// SPDX-License-Identifier: Apache-2.0
//
// Convex models for the dissipation potential psi on R^m and the stored
// energy F on m x n matrices.
//
// The p-power variants carry an optional regularization eps >= 0:
//   psi(w) = ((|w|^2 + eps^2)^(p/2) - eps^p) / p,
// and the same for F with the Frobenius norm. eps = 0 gives |w|^p / p.
// Matrices are passed as row-major spans of m * n entries (component rows).
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace dnflow {

struct PPower {
  double p = 2.0;
  double eps = 0.0;
};

struct Quadratic {
  Eigen::MatrixXd A;
};

class DissipationSpec {
 public:
  static DissipationSpec ppower(int m, double p, double eps = 0.0);
  /// A must be symmetric positive definite.
  static DissipationSpec quadratic(const Eigen::MatrixXd& A);
  static DissipationSpec identity(int m) {
    return quadratic(Eigen::MatrixXd::Identity(m, m));
  }

  int m() const { return m_; }
  const std::variant<PPower, Quadratic>& model() const { return model_; }
  bool is_ppower() const { return std::holds_alternative<PPower>(model_); }
  /// Growth exponent: p for PPower, 2 for Quadratic.
  double exponent() const;
  double eps() const;
  /// Copy with the p-power regularization replaced; Quadratic is returned as is.
  DissipationSpec with_eps(double eps) const;

  /// Extreme eigenvalues of A (Quadratic only).
  double alpha() const { return alpha_; }
  double a_max() const { return a_max_; }
  const Eigen::MatrixXd& a_inverse() const { return a_inv_; }

 private:
  std::variant<PPower, Quadratic> model_;
  int m_ = 1;
  double alpha_ = 0.0;
  double a_max_ = 0.0;
  Eigen::MatrixXd a_inv_;
};

struct PPowerNorm {
  double p = 2.0;
  double eps = 0.0;
};

struct QuadraticFrobenius {
  double theta = 1.0;
};

class EnergySpec {
 public:
  static EnergySpec ppower_norm(int m, int n, double p, double eps = 0.0);
  static EnergySpec quadratic_frobenius(int m, int n, double theta = 1.0);

  int m() const { return m_; }
  int n() const { return n_; }
  const std::variant<PPowerNorm, QuadraticFrobenius>& model() const { return model_; }
  bool is_ppower() const { return std::holds_alternative<PPowerNorm>(model_); }
  double exponent() const;
  double eps() const;
  EnergySpec with_eps(double eps) const;
  /// Same model on a different matrix shape.
  EnergySpec reshaped(int m, int n) const;

 private:
  std::variant<PPowerNorm, QuadraticFrobenius> model_;
  int m_ = 1;
  int n_ = 1;
};

// psi ------------------------------------------------------------------------

double psi_eval(const DissipationSpec& spec, std::span<const double> w);
/// Throws SingularPoint for PPower with p < 2, eps = 0 at w = 0.
void psi_grad(const DissipationSpec& spec, std::span<const double> w, std::span<double> out);
std::vector<double> psi_grad(const DissipationSpec& spec, std::span<const double> w);
/// Row-major m x m Hessian; same singularity rule as psi_grad.
void psi_hess(const DissipationSpec& spec, std::span<const double> w, std::span<double> out);
double psi_legendre(const DissipationSpec& spec, std::span<const double> xi);
/// Dpsi(w).w - psi(w), which equals psi*(Dpsi(w)).
double dissipation_potential(const DissipationSpec& spec, std::span<const double> w);

// F --------------------------------------------------------------------------

double F_eval(const EnergySpec& spec, std::span<const double> M);
void F_grad(const EnergySpec& spec, std::span<const double> M, std::span<double> out);
std::vector<double> F_grad(const EnergySpec& spec, std::span<const double> M);
/// Row-major (m n) x (m n) Hessian.
void F_hess(const EnergySpec& spec, std::span<const double> M, std::span<double> out);

// growth / coercivity ---------------------------------------------------------

struct GrowthReport {
  double p = 2.0;
  double gamma = 0.0;
  double beta = 0.0;
  double C = 0.0;
  double worst_coercivity_gap = 0.0;  // min over samples of lhs - rhs
  double worst_growth_gap = 0.0;      // min over samples of rhs - lhs
  bool pass = false;
};

/// Samples w and M over several magnitude decades and checks
///   psi(w) + F(M) >= gamma (|w|^p + |M|^p) - beta,
///   |Dpsi(w)| + |DF(M)| <= C (|w|^(p-1) + |M|^(p-1) + 1)
/// with the analytic constants of the model pair. p is the psi exponent.
GrowthReport check_growth_coercivity(const DissipationSpec& dspec, const EnergySpec& espec,
                                     int sample_count, std::uint64_t seed = 1);

}  // namespace dnflow
