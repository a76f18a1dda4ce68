// SPDX-License-Identifier: Apache-2.0
#include "dnflow/viscosity_checks.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "dnflow/error.hpp"

namespace dnflow {

namespace {

void require_scalar(const VectorField& g, const char* what) {
  if (g.m() != 1) fail(ErrorKind::NotScalar, std::string(what) + " is defined for m = 1 only");
}

}  // namespace

RefinementReport refinement_study(const VectorField& g, const DissipationSpec& dspec,
                                  const EnergySpec& espec, double T,
                                  const std::vector<int>& N_list, StepConfig cfg,
                                  unsigned threads) {
  require_scalar(g, "refinement_study");
  if (N_list.size() < 3) fail(ErrorKind::InvalidArgument, "refinement_study needs >= 3 step counts");
  if (N_list.front() < 1) fail(ErrorKind::InvalidArgument, "step counts must be positive");
  for (std::size_t j = 1; j < N_list.size(); ++j)
    if (N_list[j] != 2 * N_list[j - 1])
      fail(ErrorKind::InvalidArgument, "N_list must be a doubling chain");
  if (cfg.residual_tol <= 0.0) cfg.residual_tol = default_residual_tol(g, espec);

  const std::size_t count = N_list.size();
  std::vector<Trajectory> runs(count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](std::size_t j) {
    try {
      runs[j] = evolve(g, dspec, espec, T, N_list[j], cfg);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1) {
    for (std::size_t j = 0; j < count; ++j) work(j);
  } else {
    // largest runs first
    std::vector<std::thread> pool;
    for (std::size_t j = count; j-- > 0;) {
      pool.emplace_back(work, j);
      if (pool.size() == threads) {
        for (auto& t : pool) t.join();
        pool.clear();
      }
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  RefinementReport rep;
  rep.N_list = N_list;
  const int coarse = N_list.front();
  for (std::size_t j = 0; j + 1 < count; ++j) {
    const Trajectory& a = runs[j];
    const Trajectory& b = runs[j + 1];
    const int fa = N_list[j] / coarse, fb = N_list[j + 1] / coarse;
    double d = 0.0;
    for (int k = 0; k <= coarse; ++k) {
      // v_N(tau_k) equals the iterate with index k * N / N_coarse at the step times
      const auto va = a.fields[k * fa].values();
      const auto vb = b.fields[k * fb].values();
      for (std::size_t i = 0; i < va.size(); ++i) d = std::max(d, std::abs(va[i] - vb[i]));
    }
    rep.pairwise_sup_distances.push_back(d);
  }
  rep.pass = true;
  for (std::size_t j = 1; j < rep.pairwise_sup_distances.size(); ++j) {
    const double prev = rep.pairwise_sup_distances[j - 1], cur = rep.pairwise_sup_distances[j];
    rep.contraction_ratios.push_back(prev > 0.0 ? cur / prev : 0.0);
    if (cur > prev) rep.pass = false;
  }
  return rep;
}

ComparisonReport comparison_check(const VectorField& g_low, const VectorField& g_high,
                                  const DissipationSpec& dspec, const EnergySpec& espec,
                                  double T, int N, StepConfig cfg) {
  require_scalar(g_low, "comparison_check");
  require_scalar(g_high, "comparison_check");
  if (!(g_low.grid() == g_high.grid()))
    fail(ErrorKind::InvalidArgument, "comparison_check: data live on different grids");
  const auto lo = g_low.values(), hi = g_high.values();
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) fail(ErrorKind::BadOrder, "comparison_check: g_low > g_high at node " + std::to_string(i));

  StepConfig c_low = cfg, c_high = cfg;
  if (cfg.residual_tol <= 0.0) {
    // one common tolerance keeps the slack symmetric in the two data
    const double tol = std::max(default_residual_tol(g_low, espec), default_residual_tol(g_high, espec));
    c_low.residual_tol = c_high.residual_tol = tol;
  }
  const Trajectory a = evolve(g_low, dspec, espec, T, N, c_low);
  const Trajectory b = evolve(g_high, dspec, espec, T, N, c_high);

  ComparisonReport rep;
  rep.slack = 10.0 * std::max(a.residual_tol, b.residual_tol);
  for (int k = 0; k <= N; ++k) {
    const auto va = a.fields[k].values(), vb = b.fields[k].values();
    for (std::size_t i = 0; i < va.size(); ++i)
      rep.max_violation = std::max(rep.max_violation, va[i] - vb[i]);
  }
  rep.pass = rep.max_violation <= rep.slack;
  return rep;
}

}  // namespace dnflow
