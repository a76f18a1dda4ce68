// SPDX-License-Identifier: Apache-2.0
//
// p-Rayleigh quotients along the homogeneous p-flow, two independent
// computations of the optimal quotient Lambda and its ground states, and
// the checks attached to them.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dnflow/diagnostics.hpp"
#include "dnflow/grid.hpp"
#include "dnflow/minimizing_movements.hpp"

namespace dnflow {

struct GroundStateReport {
  double p = 2.0;
  int m = 1;
  double lambda_estimate = 0.0;
  /// lambda_estimate^(1 / (p - 1))
  double upsilon = 0.0;
  /// Unit L^p norm, gauge-fixed (see canonical_gauge).
  VectorField profile;
  std::vector<double> rayleigh_history;
  int iterations = 0;
  bool converged = false;
};

struct FlowConfig {
  /// Relative change of the quotient over one sweep that counts as a stall.
  double rq_tol = 1e-10;
  /// Largest L^p change between successive normalized iterates at a stall.
  double profile_tol = 1e-9;
  int max_sweeps = 10000;
  /// Step solver tolerance relative to max(1, E_F) of the normalized iterate.
  double step_tol = 1e-11;
  int step_max_iter = 200;
  /// Regularization of the p-power models; negative selects 1e-8 for p < 2
  /// and 0 otherwise.
  double eps = -1.0;
  std::vector<double> eps_schedule;
};

struct DirectConfig {
  /// Stop when |grad R|_2 |u|_2 / R falls below this.
  double grad_tol = 1e-11;
  int max_iter = 20000;
};

/// R(v^k) along a trajectory, nonincreasing within 100 residual_tol / |v^k|_p^p.
/// The series stops before the first vanishing iterate.
SeriesReport rayleigh_series(const Trajectory& traj, double p);

/// Flips the sign so the first component sums to >= 0; for m > 1 first
/// rotates the field so its dominant direction is the first axis.
VectorField canonical_gauge(const VectorField& u);

/// Repeated scheme steps of size 1 / Upsilon_guess with L^p renormalization.
GroundStateReport ground_state_via_flow(const VectorField& g, double p,
                                        const FlowConfig& cfg = {});

/// Preconditioned nonlinear conjugate gradients on the Rayleigh quotient
/// from a seeded random start. Line searches locate a zero of the
/// directional derivative, so progress continues below the rounding level
/// of R itself.
GroundStateReport direct_rayleigh_minimize(const Grid& grid, double p, int m, std::uint64_t seed,
                                           const DirectConfig& cfg = {});

/// h^n-weighted l2 norm of div(|Du|^(p-2) Du) + lambda |u|^(p-2) u.
double el_residual(const VectorField& u, double lambda, double p);

struct LambdaBounds {
  double lower = 0.0;
  double upper = 0.0;
  /// Distance inside the bracket (negative when outside).
  double margin = 0.0;
  bool pass = false;
};

/// m^(-|p/2 - 1|) lambda_scalar - slack <= lambda_vec <= lambda_scalar + slack,
/// slack = 1e-6 lambda_scalar.
LambdaBounds lambda_bounds_check(double lambda_vec, double lambda_scalar, double p, int m);

struct DecayFit {
  double fitted_rate = 0.0;
  /// p ln(1 + tau Upsilon_h) / tau
  double bound_rate = 0.0;
  double max_bound_violation = 0.0;
  bool pass = false;
};

/// Least-squares decay rate of log int |Dv^k|^p and the per-step bound.
DecayFit decay_rate_fit(const Trajectory& traj, double p, double upsilon_h);

/// Per-step exact rate of the scheme at a ground state.
inline double discrete_upsilon(double tau, double upsilon_h) {
  return std::log1p(tau * upsilon_h) / tau;
}

}  // namespace dnflow
