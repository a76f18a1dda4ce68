// SPDX-License-Identifier: Apache-2.0
//
// Scalar (m = 1) consequences of the viscosity theory that can be checked on
// the scheme: Cauchy behavior under time-step refinement and the per-step
// comparison principle.
#pragma once

#include <vector>

#include "dnflow/minimizing_movements.hpp"

namespace dnflow {

struct RefinementReport {
  std::vector<int> N_list;
  /// d_j = max over the coarse times tau_k of |v_{N_{j+1}} - v_{N_j}|_inf.
  std::vector<double> pairwise_sup_distances;
  /// d_{j+1} / d_j (0 when d_j = 0).
  std::vector<double> contraction_ratios;
  bool pass = false;
};

/// `N_list` must be a doubling chain of length >= 3. Interpolants are the
/// piecewise-constant ones, sampled at the step times of the smallest N.
/// Evolutions run on up to `threads` threads (0 selects the default).
RefinementReport refinement_study(const VectorField& g, const DissipationSpec& dspec,
                                  const EnergySpec& espec, double T,
                                  const std::vector<int>& N_list, StepConfig cfg = {},
                                  unsigned threads = 1);

struct ComparisonReport {
  /// max_k max_nodes (v_low^k - v_high^k), clipped below at 0.
  double max_violation = 0.0;
  double slack = 0.0;
  bool pass = false;
};

/// Requires g_low <= g_high nodewise (BadOrder otherwise). The slack is
/// 10 times the larger of the two trajectories' residual tolerances.
ComparisonReport comparison_check(const VectorField& g_low, const VectorField& g_high,
                                  const DissipationSpec& dspec, const EnergySpec& espec,
                                  double T, int N, StepConfig cfg = {});

}  // namespace dnflow
