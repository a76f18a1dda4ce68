// SPDX-License-Identifier: Apache-2.0
#include "dnflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dnflow/error.hpp"

namespace dnflow {

namespace {

double dot_psi_grad(const DissipationSpec& spec, const VectorField& delta) {
  std::vector<double> w(delta.m()), gw(delta.m());
  double s = 0.0;
  for (int i = 0; i < delta.node_count(); ++i) {
    for (int c = 0; c < delta.m(); ++c) w[c] = delta(c, i);
    psi_grad(spec, w, gw);
    for (int c = 0; c < delta.m(); ++c) s += gw[c] * w[c];
  }
  return s * delta.grid().cell_volume();
}

double integrated_potential(const DissipationSpec& spec, const VectorField& delta) {
  std::vector<double> w(delta.m());
  double s = 0.0;
  for (int i = 0; i < delta.node_count(); ++i) {
    for (int c = 0; c < delta.m(); ++c) w[c] = delta(c, i);
    s += dissipation_potential(spec, w);
  }
  return s * delta.grid().cell_volume();
}

double w1p_power(const VectorField& v, double p) { return std::pow(w1p_seminorm(v, p), p); }

double common_ppower_exponent(const Trajectory& traj, const char* what) {
  if (!traj.dissipation.is_ppower() || !traj.energy.is_ppower())
    fail(ErrorKind::ModelMismatch, std::string(what) + " needs p-power models for psi and F");
  const double p = traj.dissipation.exponent();
  if (traj.energy.exponent() != p)
    fail(ErrorKind::ModelMismatch, std::string(what) + " needs psi and F with the same p");
  return p;
}

void require_quadratic_growth(const Trajectory& traj, const char* what) {
  if (traj.dissipation.exponent() != 2.0 || traj.energy.exponent() != 2.0)
    fail(ErrorKind::ModelMismatch, std::string(what) + " needs p = 2 models");
}

std::vector<double> step_times(const Trajectory& traj, int first) {
  std::vector<double> t;
  for (int k = first; k <= traj.steps(); ++k) t.push_back(traj.time(k));
  return t;
}

// Nodal central-difference derivatives on interior nodes whose neighbors
// (padded with the zero boundary) exist.
class NodalCalculus {
 public:
  explicit NodalCalculus(const VectorField& v) : v_(v), g_(v.grid()) {}

  double at(int c, int i0, int i1) const {
    if (i0 < 0 || i0 >= g_.interior(0)) return 0.0;
    if (g_.dim() == 1) return v_(c, i0);
    if (i1 < 0 || i1 >= g_.interior(1)) return 0.0;
    return v_(c, i0 + g_.interior(0) * i1);
  }

  double first(int c, std::array<int, 2> y, int a) const {
    auto p = y, q = y;
    ++p[a];
    --q[a];
    return (at(c, p[0], p[1]) - at(c, q[0], q[1])) / (2.0 * g_.spacing(a));
  }

  double second(int c, std::array<int, 2> y, int a, int b) const {
    const double ha = g_.spacing(a), hb = g_.spacing(b);
    if (a == b) {
      auto p = y, q = y;
      ++p[a];
      --q[a];
      return (at(c, p[0], p[1]) - 2.0 * at(c, y[0], y[1]) + at(c, q[0], q[1])) / (ha * ha);
    }
    auto shifted = [&](int sa, int sb) {
      auto z = y;
      z[a] += sa;
      z[b] += sb;
      return at(c, z[0], z[1]);
    };
    return (shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)) / (4.0 * ha * hb);
  }

 private:
  const VectorField& v_;
  const Grid& g_;
};

// (1 - s^2)^2 on |s| < 1 and its derivative.
double bump(double s) { return std::abs(s) < 1.0 ? (1.0 - s * s) * (1.0 - s * s) : 0.0; }
double bump_prime(double s) { return std::abs(s) < 1.0 ? -4.0 * s * (1.0 - s * s) : 0.0; }

}  // namespace

EnergyReport energy_series(const Trajectory& traj) {
  const int N = traj.steps();
  const double tol = traj.residual_tol;
  EnergyReport rep;
  rep.series.name = "energy";
  rep.series.times = step_times(traj, 0);
  rep.series.slack = 10.0 * tol;
  for (int k = 0; k <= N; ++k) rep.series.values.push_back(stored_energy(traj.fields[k], traj.energy));

  const double E0 = rep.series.values[0];
  double cumulative = 0.0;
  rep.cumulative_dissipation.push_back(0.0);
  rep.identity_gap.push_back(0.0);
  rep.identity_defect.push_back(0.0);
  for (int k = 1; k <= N; ++k) {
    const double dissipated = traj.tau * dot_psi_grad(traj.dissipation, traj.velocity(k));
    cumulative += dissipated;
    const double Ek = rep.series.values[k], Eprev = rep.series.values[k - 1];
    const double gap = E0 - cumulative - Ek;
    rep.cumulative_dissipation.push_back(cumulative);
    rep.identity_gap.push_back(gap);
    rep.identity_defect.push_back(std::max(0.0, -gap));
    rep.step_defect.push_back(std::max(0.0, Ek + dissipated - Eprev));
    rep.series.monotone_violation = std::max(rep.series.monotone_violation, Ek - Eprev);
  }
  rep.series.pass = rep.series.monotone_violation <= rep.series.slack;
  for (double d : rep.step_defect) rep.max_step_defect = std::max(rep.max_step_defect, d);
  for (double d : rep.identity_defect) rep.max_identity_defect = std::max(rep.max_identity_defect, d);
  rep.pass = rep.series.pass && rep.max_step_defect <= 10.0 * tol &&
             rep.max_identity_defect <= 10.0 * N * tol;
  return rep;
}

SeriesReport dissipation_series(const Trajectory& traj) {
  const int N = traj.steps();
  if (N < 2) fail(ErrorKind::InvalidArgument, "dissipation_series needs N >= 2");
  SeriesReport rep;
  rep.name = "dissipation_potential";
  rep.times = step_times(traj, 1);
  rep.slack = 10.0 * traj.residual_tol * (1.0 + 1.0 / traj.tau);
  for (int k = 1; k <= N; ++k)
    rep.values.push_back(integrated_potential(traj.dissipation, traj.velocity(k)));
  for (std::size_t k = 1; k < rep.values.size(); ++k)
    rep.monotone_violation = std::max(rep.monotone_violation, rep.values[k] - rep.values[k - 1]);
  rep.pass = rep.monotone_violation <= rep.slack;
  return rep;
}

SeriesReport max_principle_check(const Trajectory& traj) {
  if (traj.m != 1) fail(ErrorKind::NotScalar, "maximum principle check applies to m = 1 only");
  SeriesReport rep;
  rep.name = "sup_norm";
  rep.times = step_times(traj, 0);
  rep.slack = 10.0 * traj.residual_tol;
  for (const auto& v : traj.fields) rep.values.push_back(v.sup_norm());
  const double bound = rep.values.front();
  for (double s : rep.values) rep.monotone_violation = std::max(rep.monotone_violation, s - bound);
  rep.pass = rep.monotone_violation <= rep.slack;
  return rep;
}

ScaledEnergyReport scaled_energy_report(const Trajectory& traj, double upsilon) {
  const double p = common_ppower_exponent(traj, "scaled_energy_report");
  if (!(upsilon >= 0.0)) fail(ErrorKind::InvalidArgument, "Upsilon must be nonnegative");
  ScaledEnergyReport rep;
  rep.series.name = "scaled_energy";
  rep.series.times = step_times(traj, 0);
  rep.series.slack = 10.0 * p * traj.residual_tol;
  std::vector<double> A;
  for (const auto& v : traj.fields) A.push_back(w1p_power(v, p));
  for (int k = 0; k <= traj.steps(); ++k)
    rep.series.values.push_back(std::exp(p * upsilon * traj.time(k)) * A[k]);
  for (int k = 1; k <= traj.steps(); ++k) {
    const double rise = (rep.series.values[k] - rep.series.values[k - 1]) *
                        std::exp(-p * upsilon * traj.time(k));
    rep.series.monotone_violation = std::max(rep.series.monotone_violation, rise);
    const double bound = std::exp(-p * upsilon * traj.time(k)) * A[0] * (1.0 + 1e-8);
    rep.decay_bound_violation = std::max(rep.decay_bound_violation, A[k] - bound);
  }
  rep.series.pass = rep.series.monotone_violation <= rep.series.slack;
  rep.decay_bound_pass = rep.decay_bound_violation <= 0.0;
  return rep;
}

SeriesReport energy_convexity_check(const Trajectory& traj, double p) {
  const double pm = common_ppower_exponent(traj, "energy_convexity_check");
  if (pm != p) fail(ErrorKind::ModelMismatch, "energy_convexity_check: p does not match the models");
  const int N = traj.steps();
  if (N < 3) fail(ErrorKind::InvalidArgument, "energy_convexity_check needs N >= 3");
  SeriesReport rep;
  rep.name = "energy_second_difference";
  rep.slack = 100.0 * traj.residual_tol / (traj.tau * traj.tau);
  std::vector<double> A;
  for (const auto& v : traj.fields) A.push_back(w1p_power(v, p));
  for (int k = 1; k < N; ++k) {
    rep.times.push_back(traj.time(k));
    const double d2 = A[k + 1] - 2.0 * A[k] + A[k - 1];
    rep.values.push_back(d2);
    rep.monotone_violation = std::max(rep.monotone_violation, -d2);
  }
  rep.pass = rep.monotone_violation <= rep.slack;
  return rep;
}

double excess(const Trajectory& traj, std::array<int, 2> center, int center_step,
              int radius_cells) {
  require_quadratic_growth(traj, "excess");
  if (radius_cells < 1) fail(ErrorKind::InvalidArgument, "excess radius must be >= 1 cell");
  const Grid& g = traj.grid;
  const int n = g.dim(), m = traj.m;
  double hmin = g.spacing(0);
  for (int a = 1; a < n; ++a) hmin = std::min(hmin, g.spacing(a));
  const double r = radius_cells * hmin;
  const int half_window = static_cast<int>(std::ceil(r * r / (2.0 * traj.tau) - 1e-9));
  if (center_step - half_window < 1 || center_step + half_window > traj.steps())
    fail(ErrorKind::OutOfDomain, "excess: time window leaves the trajectory");

  // Ball nodes as index offsets; every stencil neighbor must be interior.
  std::vector<std::array<int, 2>> ball;
  std::vector<std::array<double, 2>> offsets;
  const int reach0 = static_cast<int>(std::floor(r / g.spacing(0) + 1e-9));
  const int reach1 = n == 2 ? static_cast<int>(std::floor(r / g.spacing(1) + 1e-9)) : 0;
  for (int d1 = -reach1; d1 <= reach1; ++d1)
    for (int d0 = -reach0; d0 <= reach0; ++d0) {
      const double x0 = d0 * g.spacing(0), x1 = n == 2 ? d1 * g.spacing(1) : 0.0;
      if (x0 * x0 + x1 * x1 > r * r * (1.0 + 1e-12)) continue;
      std::array<int, 2> y{center[0] + d0, n == 2 ? center[1] + d1 : 0};
      for (int a = 0; a < n; ++a)
        if (y[a] - 1 < 0 || y[a] + 1 > g.interior(a) - 1)
          fail(ErrorKind::OutOfDomain, "excess: cylinder reaches the boundary");
      ball.push_back(y);
      offsets.push_back({x0, x1});
    }

  const int k0 = center_step - half_window, k1 = center_step + half_window;
  const std::size_t samples = ball.size() * static_cast<std::size_t>(k1 - k0 + 1);
  // Gather v_t, Dv and D^2 v at every cylinder sample.
  std::vector<double> vt(samples * m), dv(samples * m * n), d2v(samples * m * n * n);
  std::size_t s = 0;
  for (int k = k0; k <= k1; ++k) {
    const NodalCalculus cur(traj.fields[k]);
    const NodalCalculus prev(traj.fields[k - 1]);
    for (const auto& y : ball) {
      for (int c = 0; c < m; ++c) {
        vt[s * m + c] = (cur.at(c, y[0], y[1]) - prev.at(c, y[0], y[1])) / traj.tau;
        for (int a = 0; a < n; ++a) {
          dv[(s * m + c) * n + a] = cur.first(c, y, a);
          for (int b = 0; b < n; ++b) d2v[((s * m + c) * n + a) * n + b] = cur.second(c, y, a, b);
        }
      }
      ++s;
    }
  }
  auto mean_of = [&](const std::vector<double>& x, std::size_t width) {
    std::vector<double> mu(width, 0.0);
    for (std::size_t i = 0; i < samples; ++i)
      for (std::size_t j = 0; j < width; ++j) mu[j] += x[i * width + j];
    for (double& v : mu) v /= static_cast<double>(samples);
    return mu;
  };
  const auto mu_vt = mean_of(vt, m);
  const auto mu_dv = mean_of(dv, static_cast<std::size_t>(m) * n);
  const auto mu_d2v = mean_of(d2v, static_cast<std::size_t>(m) * n * n);

  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto& off = offsets[i % ball.size()];
    for (int c = 0; c < m; ++c) {
      const double e = vt[i * m + c] - mu_vt[c];
      t1 += e * e;
      for (int a = 0; a < n; ++a) {
        double lin = 0.0;
        for (int b = 0; b < n; ++b) lin += mu_d2v[(c * n + a) * n + b] * off[b];
        const double e2 = (dv[(i * m + c) * n + a] - mu_dv[c * n + a] - lin) / r;
        t2 += e2 * e2;
        for (int b = 0; b < n; ++b) {
          const double e3 = d2v[((i * m + c) * n + a) * n + b] - mu_d2v[(c * n + a) * n + b];
          t3 += e3 * e3;
        }
      }
    }
  }
  return (t1 + t2 + t3) / static_cast<double>(samples);
}

RegularityNorms regularity_norms(const Trajectory& traj, int inner_margin_cells) {
  require_quadratic_growth(traj, "regularity_norms");
  if (inner_margin_cells < 1) fail(ErrorKind::InvalidArgument, "inner margin must be >= 1");
  const Grid& g = traj.grid;
  const int n = g.dim(), m = traj.m, N = traj.steps();
  const double vol = g.cell_volume();
  for (int a = 0; a < n; ++a)
    if (g.interior(a) - 2 * inner_margin_cells < 1)
      fail(ErrorKind::InvalidArgument, "inner margin leaves no interior nodes");
  RegularityNorms out;
  if (N < 1) return out;

  std::array<double, 2> lo{}, hi{};
  for (int a = 0; a < n; ++a) {
    lo[a] = inner_margin_cells * g.spacing(a);
    hi[a] = g.length(a) - inner_margin_cells * g.spacing(a);
  }
  const double T = traj.final_time();
  struct Cutoff {
    double eta, eta_t;
    std::array<double, 2> grad;
  };
  auto cutoff = [&](std::array<double, 2> x, double t) {
    std::array<double, 2> s{}, b{}, bp{};
    for (int a = 0; a < n; ++a) {
      s[a] = (2.0 * x[a] - lo[a] - hi[a]) / (hi[a] - lo[a]);
      b[a] = bump(s[a]);
      bp[a] = bump_prime(s[a]) * 2.0 / (hi[a] - lo[a]);
    }
    const double st = 2.0 * t / T - 1.0;
    const double bt = bump(st), btp = bump_prime(st) * 2.0 / T;
    double space = 1.0;
    for (int a = 0; a < n; ++a) space *= b[a];
    Cutoff c{space * bt, space * btp, {0.0, 0.0}};
    for (int a = 0; a < n; ++a) {
      double other = 1.0;
      for (int e = 0; e < n; ++e)
        if (e != a) other *= b[e];
      c.grad[a] = bp[a] * other * bt;
    }
    return c;
  };

  for (int k = 1; k <= N; ++k) {
    const VectorField delta = traj.velocity(k);
    const VectorField& v = traj.fields[k];
    const double t_mid = traj.time(k) - 0.5 * traj.tau;
    const NodalCalculus calc(v);
    double d2 = 0.0, vt2 = 0.0, dv2 = 0.0, local_rhs = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
      const auto y = g.node_index(i);
      bool inside = true;
      for (int a = 0; a < n; ++a)
        inside = inside && y[a] >= inner_margin_cells && y[a] <= g.interior(a) - 1 - inner_margin_cells;
      double dsq = 0.0;
      for (int c = 0; c < m; ++c) dsq += delta(c, i) * delta(c, i);
      vt2 += dsq;
      if (inside)
        for (int c = 0; c < m; ++c)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
              const double h2 = calc.second(c, y, a, b);
              d2 += h2 * h2;
            }
      std::array<double, 2> x{g.node_coordinate(i, 0), n == 2 ? g.node_coordinate(i, 1) : 0.0};
      const Cutoff eta = cutoff(x, t_mid);
      double grad2 = 0.0;
      for (int a = 0; a < n; ++a) grad2 += eta.grad[a] * eta.grad[a];
      local_rhs += (std::abs(eta.eta) * std::abs(eta.eta_t) + grad2) * dsq;
    }
    const CellGradient dv = gradient(v);
    const CellGradient ddelta = gradient(delta);
    double local_lhs = 0.0;
    for (int cell = 0; cell < g.cell_count(); ++cell) {
      std::array<double, 2> x{};
      if (n == 1) x[0] = (cell + 0.5) * g.spacing(0);
      else {
        x[0] = (cell % (g.interior(0) + 1) + 0.5) * g.spacing(0);
        x[1] = (cell / (g.interior(0) + 1) + 0.5) * g.spacing(1);
      }
      const double eta = cutoff(x, t_mid).eta;
      double gd = 0.0;
      for (int c = 0; c < m; ++c)
        for (int a = 0; a < n; ++a) {
          dv2 += dv(c, a, cell) * dv(c, a, cell);
          gd += ddelta(c, a, cell) * ddelta(c, a, cell);
        }
      local_lhs += eta * eta * gd;
    }
    out.d2v_l2 += traj.tau * vol * d2;
    out.rhs_bound += traj.tau * vol * (vt2 + dv2);
    out.dvt_l2_local += traj.tau * vol * local_lhs;
    out.rhs_local += traj.tau * vol * local_rhs;
  }
  out.d2v_ratio = out.rhs_bound > 0.0 ? out.d2v_l2 / out.rhs_bound : 0.0;
  out.dvt_ratio = out.rhs_local > 0.0 ? out.dvt_l2_local / out.rhs_local : 0.0;
  return out;
}

}  // namespace dnflow
