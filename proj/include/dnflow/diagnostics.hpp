// SPDX-License-Identifier: Apache-2.0
//
// Monitored quantities along scheme trajectories. Velocities are the
// backward differences delta^k = (v^k - v^(k-1)) / tau. Every monotonicity
// check carries an explicit slack that is a multiple of the trajectory's
// residual tolerance.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "dnflow/minimizing_movements.hpp"

namespace dnflow {

struct SeriesReport {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;
  /// Largest departure from the asserted monotonicity (0 when none).
  double monotone_violation = 0.0;
  /// Tolerance the violation is compared against.
  double slack = 0.0;
  bool pass = true;
};

struct EnergyReport {
  SeriesReport series;                        // E_F(v^k), k = 0..N, nonincreasing
  std::vector<double> cumulative_dissipation;  // sum_{j<=k} tau h^n sum Dpsi(delta^j).delta^j
  /// E_F(g) - cumulative - E_F(v^k); nonnegative for exact steps.
  std::vector<double> identity_gap;
  /// max(0, -identity_gap): violation of the discrete energy inequality.
  std::vector<double> identity_defect;
  /// Per-step violation of E_F(v^k) + tau h^n sum Dpsi(delta^k).delta^k <= E_F(v^(k-1)).
  std::vector<double> step_defect;
  double max_step_defect = 0.0;
  double max_identity_defect = 0.0;
  bool pass = true;
};

EnergyReport energy_series(const Trajectory& traj);

/// h^n sum psi*(Dpsi(delta^k)) for k = 1..N; nonincreasing within
/// 10 residual_tol (1 + 1/tau). Requires N >= 2.
SeriesReport dissipation_series(const Trajectory& traj);

/// max_nodes |v^k| for k = 0..N against sup|g| + 10 residual_tol. m = 1 only.
SeriesReport max_principle_check(const Trajectory& traj);

struct ScaledEnergyReport {
  SeriesReport series;  // e^(p Upsilon tau_k) int |Dv^k|^p, nonincreasing
  /// max_k of int |Dv^k|^p - e^(-p Upsilon tau_k) int |Dg|^p (0 if never positive).
  double decay_bound_violation = 0.0;
  bool decay_bound_pass = true;
};

/// Requires p-power models with a common exponent.
ScaledEnergyReport scaled_energy_report(const Trajectory& traj, double upsilon);

/// Second differences of t -> int |Dv|^p must be >= -100 residual_tol / tau^2.
/// `values` holds the second differences at k = 1..N-1.
SeriesReport energy_convexity_check(const Trajectory& traj, double p);

/// Mean-square oscillation excess over the discrete parabolic cylinder
/// centered at interior node `center` and step `center_step`, radius
/// `radius_cells` spacings. Requires p = 2 models.
double excess(const Trajectory& traj, std::array<int, 2> center, int center_step,
              int radius_cells);

struct RegularityNorms {
  double d2v_l2 = 0.0;        // int_0^T int_Sigma |D^2 v|^2
  double dvt_l2_local = 0.0;  // int int eta^2 |Dv_t|^2
  double rhs_bound = 0.0;     // int int |v_t|^2 + |Dv|^2
  double rhs_local = 0.0;     // int int (|eta||eta_t| + |D eta|^2) |v_t|^2
  double d2v_ratio = 0.0;
  double dvt_ratio = 0.0;
};

/// Requires p = 2 models and inner_margin_cells >= 1.
RegularityNorms regularity_norms(const Trajectory& traj, int inner_margin_cells);

}  // namespace dnflow
