// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include "common/oracles.hpp"
#include "dnflow/diagnostics.hpp"
#include "dnflow/error.hpp"
#include "doctest.h"

using namespace dnflow;

namespace {

VectorField sine(const Grid& g, double amp = 1.0) {
  VectorField u(g, 1);
  for (int i = 0; i < g.node_count(); ++i) {
    double v = amp;
    for (int a = 0; a < g.dim(); ++a)
      v *= std::sin(std::numbers::pi * g.node_coordinate(i, a) / g.length(a));
    u(0, i) = v;
  }
  return u;
}

Trajectory heat(const VectorField& g0, double T, int N) {
  return evolve(g0, DissipationSpec::ppower(g0.m(), 2.0),
                EnergySpec::ppower_norm(g0.m(), g0.grid().dim(), 2.0), T, N, {});
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("energy series of a heat mode follows the closed form") {
  const Grid g = Grid::line(1.0, 31);
  const VectorField u = sine(g);
  const double lam = oracle::lambda_1d(1.0, 31), T = 0.1;
  const int N = 16;
  const auto traj = heat(u, T, N);
  const auto rep = energy_series(traj);
  CHECK(rep.pass);
  CHECK(rep.series.pass);
  const double e0 = 0.5 * lam * std::pow(lp_norm(u, 2.0), 2);
  const double q = 1.0 / (1.0 + lam * T / N);
  for (int k = 0; k <= N; ++k)
    CHECK(rep.series.values[k] == doctest::Approx(e0 * std::pow(q, 2 * k)).epsilon(1e-11));
  // by convexity each energy drop dominates tau Dpsi(delta).delta
  for (int k = 1; k <= N; ++k)
    CHECK(rep.series.values[0] - rep.series.values[k] >= rep.cumulative_dissipation[k] - 1e-12);
}

TEST_CASE("series diagnostics on a random heat trajectory") {
  const Grid g = Grid::rectangle(1.0, 1.0, 9, 9);
  std::mt19937_64 rng(4);
  const VectorField u(g, 1, oracle::uniform(rng, g.node_count(), -1, 1));
  const auto traj = heat(u, 0.05, 10);
  CHECK(dissipation_series(traj).pass);
  CHECK(max_principle_check(traj).pass);
  CHECK(energy_convexity_check(traj, 2.0).pass);
  const auto lam = oracle::lambda_2d(1.0, 1.0, 9, 9);
  const auto sc = scaled_energy_report(traj, lam);
  CHECK(sc.series.pass);
}

TEST_CASE("diagnostics reject mismatched inputs") {
  const Grid g = Grid::line(1.0, 9);
  VectorField two(g, 2);
  for (int i = 0; i < g.node_count(); ++i) two(0, i) = two(1, i) = std::sin(0.3 * i);
  CHECK(kind_of([&] { max_principle_check(heat(two, 0.1, 4)); }) == ErrorKind::NotScalar);
  const auto cubic = evolve(sine(g), DissipationSpec::ppower(1, 3.0), EnergySpec::ppower_norm(1, 1, 3.0),
                            0.1, 4, {});
  CHECK(kind_of([&] { energy_convexity_check(cubic, 2.0); }) == ErrorKind::ModelMismatch);
  CHECK(kind_of([&] { excess(cubic, {4, 0}, 2, 1); }) == ErrorKind::ModelMismatch);
  CHECK(kind_of([&] { regularity_norms(cubic, 1); }) == ErrorKind::ModelMismatch);
  CHECK(kind_of([&] { scaled_energy_report(heat(sine(g), 0.1, 4), -1.0); }) == ErrorKind::InvalidArgument);
  const auto mixed = evolve(sine(g), DissipationSpec::identity(1), EnergySpec::ppower_norm(1, 1, 3.0), 0.1,
                            4, {});
  CHECK(kind_of([&] { scaled_energy_report(mixed, 1.0); }) == ErrorKind::ModelMismatch);
}

TEST_CASE("excess") {
  const Grid g = Grid::line(1.0, 63);
  const auto traj = heat(sine(g), 0.05, 200);
  const double e1 = excess(traj, {31, 0}, 100, 2);
  const double e2 = excess(traj, {31, 0}, 100, 4);
  CHECK(e1 >= 0.0);
  CHECK(e2 >= e1);
  CHECK(kind_of([&] { excess(traj, {1, 0}, 100, 2); }) == ErrorKind::OutOfDomain);
  CHECK(kind_of([&] { excess(traj, {31, 0}, 1, 4); }) == ErrorKind::OutOfDomain);
  CHECK(kind_of([&] { excess(traj, {31, 0}, 100, 0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("regularity norm ratios are stable under refinement") {
  std::array<RegularityNorms, 2> r;
  int idx = 0;
  for (int cells : {64, 128}) {
    const Grid g = Grid::line(1.0, cells - 1);
    VectorField u = sine(g);
    for (int i = 0; i < g.node_count(); ++i)
      u(0, i) += 0.3 * std::sin(3.0 * std::numbers::pi * g.node_coordinate(i, 0));
    r[idx++] = regularity_norms(heat(u, 0.02, 40), cells / 8);
  }
  for (const auto& x : r) {
    CHECK(std::isfinite(x.d2v_ratio));
    CHECK(std::isfinite(x.dvt_ratio));
    CHECK(x.d2v_ratio > 0.0);
  }
  CHECK(r[1].d2v_ratio <= 2.0 * r[0].d2v_ratio);
  CHECK(r[1].d2v_ratio >= 0.5 * r[0].d2v_ratio);
  CHECK(r[1].dvt_ratio <= 2.0 * r[0].dvt_ratio);
  CHECK(r[1].dvt_ratio >= 0.5 * r[0].dvt_ratio);
}
