// SPDX-License-Identifier: Apache-2.0
//
// Implicit minimizing-movement scheme. Each step minimizes the discrete
// functional
//   J(u) = h^n sum_cells F(Du) + tau h^n sum_nodes psi((u - v_prev) / tau)
// over fields with zero boundary values. The minimizer solves
//   Dpsi((u - v_prev) / tau) - div DF(Du) = 0   at every interior node,
// and the step residual is the h^n-weighted l2 norm of that defect.
#pragma once

#include <utility>
#include <vector>

#include "dnflow/convex_models.hpp"
#include "dnflow/grid.hpp"

namespace dnflow {

struct StepConfig {
  double tau = 0.0;
  /// Stopping tolerance on the defect norm; <= 0 selects the default
  /// 1e-9 * max(1, E_F(v_prev)).
  double residual_tol = 0.0;
  int max_iter = 200;
  /// Regularization levels visited before the models' own eps; nonincreasing.
  std::vector<double> eps_schedule;
};

struct StepStat {
  int iterations = 0;
  double residual = 0.0;
  double functional = 0.0;
};

struct StepResult {
  VectorField field;
  StepStat stat;
};

/// Output of the scheme: fields[0] = g, fields[k] = v^k.
struct Trajectory {
  Grid grid;
  int m = 1;
  DissipationSpec dissipation;
  EnergySpec energy;
  double tau = 0.0;
  double residual_tol = 0.0;
  std::vector<VectorField> fields;
  std::vector<StepStat> stats;  // stats[k - 1] belongs to fields[k]

  int steps() const { return static_cast<int>(fields.size()) - 1; }
  double time(int k) const { return k * tau; }
  double final_time() const { return steps() * tau; }
  /// (v^k - v^(k-1)) / tau for k >= 1.
  VectorField velocity(int k) const;
};

/// E_F(u) = h^n sum_cells F(Du).
double stored_energy(const VectorField& u, const EnergySpec& espec);

/// Default stopping tolerance for a trajectory started at g.
double default_residual_tol(const VectorField& g, const EnergySpec& espec);

/// Nodal defect Dpsi((v_next - v_prev)/tau) - div DF(Dv_next).
VectorField step_defect(const VectorField& v_next, const VectorField& v_prev,
                        const DissipationSpec& dspec, const EnergySpec& espec, double tau);

/// h^n-weighted l2 norm of step_defect.
double weak_residual(const VectorField& v_next, const VectorField& v_prev,
                     const DissipationSpec& dspec, const EnergySpec& espec, double tau);

/// One implicit step by damped Newton with Armijo backtracking. Throws
/// NonConvergence when max_iter is exhausted above tolerance.
StepResult step(const VectorField& v_prev, const DissipationSpec& dspec,
                const EnergySpec& espec, const StepConfig& cfg);

/// Runs N steps of size T / N from g. `cfg.tau` is ignored; a nonpositive
/// `cfg.residual_tol` is replaced by default_residual_tol(g).
Trajectory evolve(const VectorField& g, const DissipationSpec& dspec, const EnergySpec& espec,
                  double T, int N, StepConfig cfg);

struct Interpolants {
  VectorField piecewise_constant;
  VectorField piecewise_linear;
};

/// Both time interpolants of a trajectory at t in [0, T].
Interpolants interpolants(const Trajectory& traj, double t);

}  // namespace dnflow
