// SPDX-License-Identifier: Apache-2.0
#include "dnflow/minimizing_movements.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "dnflow/error.hpp"
#include "dnflow/snapshot.hpp"
#include "stencil.hpp"

namespace dnflow {

namespace {

void require_compatible(const VectorField& v, const DissipationSpec& dspec,
                        const EnergySpec& espec) {
  if (dspec.m() != v.m() || espec.m() != v.m())
    fail(ErrorKind::ModelMismatch, "models and field disagree on the component count m");
  if (espec.n() != v.grid().dim())
    fail(ErrorKind::ModelMismatch, "energy model dimension does not match the grid");
}

// The per-step functional, scaled by 1 / h^n, with its gradient and Hessian.
class StepProblem {
 public:
  StepProblem(const VectorField& v_prev, const DissipationSpec& dspec, const EnergySpec& espec,
              double tau)
      : prev_(v_prev),
        dspec_(dspec),
        espec_(espec),
        tau_(tau),
        grid_(v_prev.grid()),
        m_(v_prev.m()),
        dim_(grid_.dim()),
        nodes_(grid_.node_count()),
        stencils_(detail::build_stencils(grid_)) {}

  int size() const { return m_ * nodes_; }

  void set_models(const DissipationSpec& d, const EnergySpec& e) {
    dspec_ = d;
    espec_ = e;
  }

  double value(const Eigen::VectorXd& u) const {
    double s = 0.0;
    std::vector<double> M(m_ * dim_), w(m_);
    for (int k = 0; k < grid_.cell_count(); ++k) {
      cell_matrix(u, k, M);
      s += F_eval(espec_, M);
    }
    for (int i = 0; i < nodes_; ++i) {
      velocity(u, i, w);
      s += tau_ * psi_eval(dspec_, w);
    }
    return s;
  }

  // Defect r = Dpsi(delta) + G^T DF(Gu), i.e. the gradient of value().
  Eigen::VectorXd defect(const Eigen::VectorXd& u) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(size());
    std::vector<double> M(m_ * dim_), DF(m_ * dim_), w(m_), gw(m_);
    for (int k = 0; k < grid_.cell_count(); ++k) {
      const auto& st = stencils_[k];
      if (st.count == 0) continue;
      cell_matrix(u, k, M);
      F_grad(espec_, M, DF);
      for (int s = 0; s < st.count; ++s)
        for (int c = 0; c < m_; ++c) {
          double acc = 0.0;
          for (int a = 0; a < dim_; ++a) acc += st.coef[s][a] * DF[c * dim_ + a];
          r[c * nodes_ + st.nodes[s]] += acc;
        }
    }
    for (int i = 0; i < nodes_; ++i) {
      velocity(u, i, w);
      psi_grad(dspec_, w, gw);
      for (int c = 0; c < m_; ++c) r[c * nodes_ + i] += gw[c];
    }
    return r;
  }

  double residual_norm(const Eigen::VectorXd& r) const {
    return std::sqrt(grid_.cell_volume() * r.squaredNorm());
  }

  /// True when a p-power model with p < 2 is present; Newton's model
  /// underestimates such functions away from the minimizer.
  bool subquadratic() const {
    return (dspec_.is_ppower() && dspec_.exponent() < 2.0) ||
           (espec_.is_ppower() && espec_.exponent() < 2.0);
  }

  // Hessian with a fixed sparsity pattern (explicit zeros kept). With
  // `majorize`, p-power blocks with p < 2 are replaced by (|x|^2 + eps^2)^((p-2)/2) I:
  // the models are concave in |x|^2 there, so this quadratic lies above the
  // functional and its minimizer is a descent step of full length.
  Eigen::SparseMatrix<double> hessian(const Eigen::VectorXd& u, bool majorize = false) const {
    std::vector<Eigen::Triplet<double>> trip;
    const int md = m_ * dim_;
    std::vector<double> M(md), H(md * md), w(m_), Hw(m_ * m_);
    trip.reserve(grid_.cell_count() * 9 * m_ * m_ + nodes_ * m_ * m_);
    for (int k = 0; k < grid_.cell_count(); ++k) {
      const auto& st = stencils_[k];
      if (st.count == 0) continue;
      cell_matrix(u, k, M);
      if (majorize && espec_.is_ppower() && espec_.exponent() < 2.0)
        lagged_identity(M, espec_.exponent(), espec_.eps(), H);
      else
        F_hess(espec_, M, H);
      for (int s = 0; s < st.count; ++s)
        for (int t = 0; t < st.count; ++t)
          for (int c = 0; c < m_; ++c)
            for (int d = 0; d < m_; ++d) {
              double acc = 0.0;
              for (int a = 0; a < dim_; ++a)
                for (int b = 0; b < dim_; ++b)
                  acc += st.coef[s][a] * H[(c * dim_ + a) * md + d * dim_ + b] * st.coef[t][b];
              trip.emplace_back(c * nodes_ + st.nodes[s], d * nodes_ + st.nodes[t], acc);
            }
    }
    for (int i = 0; i < nodes_; ++i) {
      velocity(u, i, w);
      if (majorize && dspec_.is_ppower() && dspec_.exponent() < 2.0)
        lagged_identity(w, dspec_.exponent(), dspec_.eps(), Hw);
      else
        psi_hess(dspec_, w, Hw);
      for (int c = 0; c < m_; ++c)
        for (int d = 0; d < m_; ++d)
          trip.emplace_back(c * nodes_ + i, d * nodes_ + i, Hw[c * m_ + d] / tau_);
    }
    Eigen::SparseMatrix<double> A(size(), size());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

 private:
  static void lagged_identity(std::span<const double> x, double p, double eps, std::span<double> out) {
    double r2 = eps * eps;
    for (double v : x) r2 += v * v;
    if (!(r2 > 0.0)) fail(ErrorKind::SingularPoint, "p < 2 model without regularization at 0");
    const double c = std::pow(r2, 0.5 * (p - 2.0));
    const std::size_t n = x.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) out[i * n + i] = c;
  }

  void cell_matrix(const Eigen::VectorXd& u, int k, std::vector<double>& M) const {
    std::fill(M.begin(), M.end(), 0.0);
    const auto& st = stencils_[k];
    for (int s = 0; s < st.count; ++s)
      for (int c = 0; c < m_; ++c) {
        const double val = u[c * nodes_ + st.nodes[s]];
        for (int a = 0; a < dim_; ++a) M[c * dim_ + a] += st.coef[s][a] * val;
      }
  }

  void velocity(const Eigen::VectorXd& u, int i, std::vector<double>& w) const {
    for (int c = 0; c < m_; ++c) w[c] = (u[c * nodes_ + i] - prev_(c, i)) / tau_;
  }

  const VectorField& prev_;
  DissipationSpec dspec_;
  EnergySpec espec_;
  double tau_;
  Grid grid_;
  int m_, dim_, nodes_;
  std::vector<detail::CellStencil> stencils_;
};

Eigen::VectorXd to_vector(const VectorField& v) {
  auto s = v.values();
  return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

VectorField to_field(const Grid& g, int m, const Eigen::VectorXd& x) {
  return VectorField(g, m, std::vector<double>(x.data(), x.data() + x.size()));
}

struct LevelOutcome {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Damped Newton on one regularization level.
// Largest step along d (halving from 1) passing the Armijo test. The
// decrease is tested as a difference so that steps below one ulp of the
// value never pass.
struct LineSearch {
  bool accepted = false;
  double alpha = 0.0;
  Eigen::VectorXd point;
  double value = 0.0;
};

LineSearch armijo(const StepProblem& prob, const Eigen::VectorXd& u, double value,
                  const Eigen::VectorXd& d, double slope) {
  LineSearch ls;
  double alpha = 1.0;
  for (int i = 0; i < 60; ++i, alpha *= 0.5) {
    Eigen::VectorXd trial = u + alpha * d;
    const double tv = prob.value(trial);
    const double drop = tv - value;
    if (std::isfinite(tv) && drop < 0.0 && drop <= 1e-4 * alpha * slope) {
      ls = {true, alpha, std::move(trial), tv};
      break;
    }
  }
  return ls;
}

LevelOutcome newton_level(StepProblem& prob, Eigen::VectorXd& u, double tol, int max_iter) {
  LevelOutcome out;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
  const bool subquadratic = prob.subquadratic();
  double value = prob.value(u);
  Eigen::VectorXd r = prob.defect(u);
  double res = prob.residual_norm(r);
  double shift = 0.0;
  while (true) {
    out.residual = res;
    if (res <= tol) {
      out.converged = true;
      return out;
    }
    if (out.iterations >= max_iter) return out;
    ++out.iterations;

    Eigen::SparseMatrix<double> H = prob.hessian(u);
    if (!analyzed) {
      ldlt.analyzePattern(H);
      analyzed = true;
    }
    double diag_scale = 0.0;
    for (int i = 0; i < H.rows(); ++i) diag_scale = std::max(diag_scale, std::abs(H.coeff(i, i)));
    if (!(diag_scale > 0.0)) diag_scale = 1.0;

    // Newton direction with a Levenberg shift whenever the Hessian is
    // (numerically) singular or the direction is not a descent direction.
    Eigen::VectorXd d;
    bool have_direction = false;
    double trial_shift = shift;
    for (int attempt = 0; attempt < 12 && !have_direction; ++attempt) {
      Eigen::SparseMatrix<double> Hs = H;
      if (trial_shift > 0.0)
        for (int i = 0; i < Hs.rows(); ++i) Hs.coeffRef(i, i) += trial_shift * diag_scale;
      ldlt.factorize(Hs);
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-r);
        const bool pivots_ok = (ldlt.vectorD().array() > 0.0).all();
        if (pivots_ok && d.allFinite() && r.dot(d) < 0.0) {
          have_direction = true;
          break;
        }
      }
      trial_shift = trial_shift == 0.0 ? 1e-12 : trial_shift * 100.0;
    }
    shift = have_direction ? trial_shift * 0.01 : 0.0;
    if (shift < 1e-12) shift = 0.0;
    if (!have_direction) d = -r;

    LineSearch best = armijo(prob, u, value, d, r.dot(d));
    if (subquadratic) {
      // Full Newton steps can crawl or cycle here even when accepted; the
      // majorizer step is computed as well and the lower value is kept.
      ldlt.factorize(prob.hessian(u, true));
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd dm = ldlt.solve(-r);
        if (dm.allFinite() && r.dot(dm) < 0.0) {
          LineSearch mm = armijo(prob, u, value, dm, r.dot(dm));
          if (mm.accepted && (!best.accepted || mm.value < best.value)) best = std::move(mm);
        }
      }
    }
    if (!best.accepted) {
      // Near the minimizer the functional is flat to rounding; backtrack on
      // the defect norm instead, keeping the value within rounding.
      const double rounding = 1e-13 * std::max(1.0, std::abs(value));
      bool moved = false;
      double alpha = 1.0;
      for (int ls = 0; ls < 30 && !moved; ++ls, alpha *= 0.5) {
        Eigen::VectorXd trial = u + alpha * d;
        const double tv = prob.value(trial);
        Eigen::VectorXd rt = prob.defect(trial);
        const double rt_norm = prob.residual_norm(rt);
        if (rt_norm < res && tv <= value + rounding) {
          u = std::move(trial);
          value = tv;
          r = std::move(rt);
          res = rt_norm;
          moved = true;
        }
      }
      if (moved) continue;
      return out;  // stagnated above tolerance
    }
    u = std::move(best.point);
    value = best.value;
    r = prob.defect(u);
    res = prob.residual_norm(r);
  }
}

}  // namespace

VectorField Trajectory::velocity(int k) const {
  if (k < 1 || k > steps()) fail(ErrorKind::OutOfRange, "velocity index out of range");
  VectorField d = fields[k] - fields[k - 1];
  d *= 1.0 / tau;
  return d;
}

double stored_energy(const VectorField& u, const EnergySpec& espec) {
  const CellGradient du = gradient(u);
  std::vector<double> M(u.m() * u.grid().dim());
  double s = 0.0;
  for (int k = 0; k < du.cell_count(); ++k) {
    du.load(k, M);
    s += F_eval(espec, M);
  }
  return s * u.grid().cell_volume();
}

double default_residual_tol(const VectorField& g, const EnergySpec& espec) {
  return 1e-9 * std::max(1.0, stored_energy(g, espec));
}

VectorField step_defect(const VectorField& v_next, const VectorField& v_prev,
                        const DissipationSpec& dspec, const EnergySpec& espec, double tau) {
  if (!(v_next.grid() == v_prev.grid()) || v_next.m() != v_prev.m())
    fail(ErrorKind::InvalidArgument, "step pair lives on different grids");
  if (!(tau > 0.0)) fail(ErrorKind::InvalidArgument, "tau must be positive");
  require_compatible(v_prev, dspec, espec);
  StepProblem prob(v_prev, dspec, espec, tau);
  return to_field(v_next.grid(), v_next.m(), prob.defect(to_vector(v_next)));
}

double weak_residual(const VectorField& v_next, const VectorField& v_prev,
                     const DissipationSpec& dspec, const EnergySpec& espec, double tau) {
  const VectorField r = step_defect(v_next, v_prev, dspec, espec, tau);
  double s = 0.0;
  for (double x : r.values()) s += x * x;
  return std::sqrt(s * r.grid().cell_volume());
}

StepResult step(const VectorField& v_prev, const DissipationSpec& dspec,
                const EnergySpec& espec, const StepConfig& cfg) {
  require_compatible(v_prev, dspec, espec);
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau))
    fail(ErrorKind::InvalidArgument, "step size tau must be positive");
  if (cfg.max_iter < 1) fail(ErrorKind::InvalidArgument, "max_iter must be >= 1");
  for (std::size_t i = 1; i < cfg.eps_schedule.size(); ++i)
    if (cfg.eps_schedule[i] > cfg.eps_schedule[i - 1])
      fail(ErrorKind::InvalidArgument, "eps_schedule must be nonincreasing");
  const double tol =
      cfg.residual_tol > 0.0 ? cfg.residual_tol : default_residual_tol(v_prev, espec);

  StepProblem prob(v_prev, dspec, espec, cfg.tau);
  Eigen::VectorXd u = to_vector(v_prev);
  StepStat stat;

  // Warm-up levels only apply to p-power models and only above their own eps.
  for (double e : cfg.eps_schedule) {
    const bool any = (dspec.is_ppower() && e > dspec.eps()) || (espec.is_ppower() && e > espec.eps());
    if (!any) continue;
    prob.set_models(dspec.is_ppower() ? dspec.with_eps(std::max(e, dspec.eps())) : dspec,
                    espec.is_ppower() ? espec.with_eps(std::max(e, espec.eps())) : espec);
    const LevelOutcome lvl = newton_level(prob, u, tol, cfg.max_iter);
    stat.iterations += lvl.iterations;
  }
  prob.set_models(dspec, espec);
  const LevelOutcome final_level = newton_level(prob, u, tol, cfg.max_iter);
  stat.iterations += final_level.iterations;
  stat.residual = final_level.residual;
  stat.functional = prob.value(u) * v_prev.grid().cell_volume();
  if (!final_level.converged)
    fail(ErrorKind::NonConvergence,
         "step solver stopped after " + std::to_string(stat.iterations) +
             " iterations with residual " + format_double(stat.residual) + " > tolerance " +
             format_double(tol));
  return {to_field(v_prev.grid(), v_prev.m(), u), stat};
}

Trajectory evolve(const VectorField& g, const DissipationSpec& dspec, const EnergySpec& espec,
                  double T, int N, StepConfig cfg) {
  if (!(T > 0.0) || !std::isfinite(T)) fail(ErrorKind::InvalidArgument, "final time T must be positive");
  if (N < 1) fail(ErrorKind::InvalidArgument, "step count N must be >= 1");
  require_compatible(g, dspec, espec);
  cfg.tau = T / N;
  if (!(cfg.residual_tol > 0.0)) cfg.residual_tol = default_residual_tol(g, espec);

  Trajectory traj{g.grid(), g.m(), dspec, espec, cfg.tau, cfg.residual_tol, {}, {}};
  traj.fields.reserve(N + 1);
  traj.stats.reserve(N);
  traj.fields.push_back(g);
  for (int k = 1; k <= N; ++k) {
    try {
      StepResult r = step(traj.fields.back(), dspec, espec, cfg);
      traj.fields.push_back(std::move(r.field));
      traj.stats.push_back(r.stat);
    } catch (const Error& e) {
      throw Error(e.kind(), "step k=" + std::to_string(k) + ": " + e.what());
    }
  }
  return traj;
}

Interpolants interpolants(const Trajectory& traj, double t) {
  const double T = traj.final_time();
  const double slack = 1e-12 * std::max(1.0, T);
  if (!(t >= -slack && t <= T + slack))
    fail(ErrorKind::OutOfRange, "interpolation time outside [0, T]");
  t = std::clamp(t, 0.0, T);
  if (t == 0.0 || traj.steps() == 0) return {traj.fields[0], traj.fields[0]};
  // index k with tau_{k-1} < t <= tau_k; exact grid times map to their own k
  const double s = t / traj.tau;
  int k = static_cast<int>(std::ceil(s - 1e-9));
  k = std::clamp(k, 1, traj.steps());
  const double theta = std::clamp(s - (k - 1), 0.0, 1.0);
  if (theta >= 1.0 - 1e-12) return {traj.fields[k], traj.fields[k]};
  VectorField lin = traj.fields[k - 1];
  if (theta != 0.0) {
    VectorField inc = traj.fields[k] - traj.fields[k - 1];
    inc *= theta;
    lin += inc;
  }
  return {traj.fields[k], lin};
}

}  // namespace dnflow
