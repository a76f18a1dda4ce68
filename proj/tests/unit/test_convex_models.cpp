// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <vector>

#include "common/oracles.hpp"
#include "dnflow/convex_models.hpp"
#include "dnflow/error.hpp"
#include "doctest.h"

using namespace dnflow;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Eigen::MatrixXd spd_matrix() {
  Eigen::MatrixXd A(3, 3);
  A << 2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 1.0;
  return A;
}

}  // namespace

TEST_CASE("psi gradient and Hessian agree with finite differences") {
  std::mt19937_64 rng(7);
  const std::vector<DissipationSpec> specs = {
      DissipationSpec::ppower(3, 1.5, 1e-2), DissipationSpec::ppower(3, 2.0),
      DissipationSpec::ppower(3, 3.0), DissipationSpec::ppower(3, 4.0, 0.1),
      DissipationSpec::quadratic(spd_matrix())};
  for (const auto& spec : specs) {
    for (int s = 0; s < 10; ++s) {
      const auto w = oracle::uniform(rng, 3, -2, 2);
      const auto fd = oracle::fd_gradient([&](const std::vector<double>& x) { return psi_eval(spec, x); },
                                          w, 1e-6);
      const auto g = psi_grad(spec, w);
      for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-6));

      std::vector<double> H(9);
      psi_hess(spec, w, H);
      for (int j = 0; j < 3; ++j) {
        const auto fdj = oracle::fd_gradient(
            [&](const std::vector<double>& x) { return psi_grad(spec, x)[j]; }, w, 1e-6);
        for (int i = 0; i < 3; ++i) CHECK(H[j * 3 + i] == doctest::Approx(fdj[i]).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("F gradient agrees with finite differences") {
  std::mt19937_64 rng(11);
  for (const auto& spec : {EnergySpec::ppower_norm(2, 2, 1.5, 0.05), EnergySpec::ppower_norm(2, 2, 3.0),
                           EnergySpec::quadratic_frobenius(2, 2, 0.7)}) {
    for (int s = 0; s < 10; ++s) {
      const auto M = oracle::uniform(rng, 4, -1, 1);
      const auto fd =
          oracle::fd_gradient([&](const std::vector<double>& x) { return F_eval(spec, x); }, M, 1e-6);
      const auto g = F_grad(spec, M);
      for (int i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("p-power values") {
  const auto spec = DissipationSpec::ppower(2, 3.0);
  const std::vector<double> w = {3.0, 4.0};
  CHECK(psi_eval(spec, w) == doctest::Approx(125.0 / 3.0));
  // Dpsi(w).w - psi(w) = (p - 1) psi(w) for the pure power
  CHECK(dissipation_potential(spec, w) == doctest::Approx(250.0 / 3.0));
  const std::vector<double> zero = {0.0, 0.0};
  CHECK(psi_eval(spec, zero) == 0.0);
  const auto regularized = DissipationSpec::ppower(2, 1.5, 1e-3);
  CHECK(psi_eval(regularized, zero) == 0.0);
}

TEST_CASE("Fenchel-Young holds with equality at the gradient") {
  std::mt19937_64 rng(3);
  for (const auto& spec : {DissipationSpec::ppower(2, 1.5, 0.1), DissipationSpec::ppower(2, 3.0),
                           DissipationSpec::ppower(2, 4.0, 0.2), DissipationSpec::identity(2)}) {
    for (int s = 0; s < 20; ++s) {
      const auto w = oracle::uniform(rng, 2, -3, 3);
      const auto xi = psi_grad(spec, w);
      const double gap = psi_eval(spec, w) + psi_legendre(spec, xi) - dot(xi, w);
      CHECK(std::abs(gap) <= 1e-9 * (1.0 + std::abs(dot(xi, w))));
      // and the inequality for an unrelated dual point
      const auto eta = oracle::uniform(rng, 2, -3, 3);
      CHECK(psi_eval(spec, w) + psi_legendre(spec, eta) >= dot(eta, w) - 1e-12);
    }
  }
}

TEST_CASE("midpoint convexity") {
  std::mt19937_64 rng(5);
  const auto d = DissipationSpec::ppower(2, 1.5, 1e-3);
  const auto q = DissipationSpec::quadratic(spd_matrix());
  for (int s = 0; s < 200; ++s) {
    const auto a = oracle::uniform(rng, 2, -2, 2), b = oracle::uniform(rng, 2, -2, 2);
    std::vector<double> mid = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
    CHECK(psi_eval(d, mid) <= 0.5 * (psi_eval(d, a) + psi_eval(d, b)) + 1e-14);
    const auto a3 = oracle::uniform(rng, 3, -2, 2), b3 = oracle::uniform(rng, 3, -2, 2);
    std::vector<double> m3(3), diff(3);
    for (int i = 0; i < 3; ++i) {
      m3[i] = 0.5 * (a3[i] + b3[i]);
      diff[i] = a3[i] - b3[i];
    }
    // uniform convexity margin alpha / 8 |a - b|^2
    const double margin = q.alpha() / 8.0 * dot(diff, diff);
    CHECK(psi_eval(q, m3) <= 0.5 * (psi_eval(q, a3) + psi_eval(q, b3)) - margin + 1e-12);
  }
}

TEST_CASE("gradient at the origin is singular for unregularized p < 2") {
  const auto d = DissipationSpec::ppower(1, 1.5);
  const std::vector<double> zero = {0.0};
  CHECK_THROWS_AS(psi_grad(d, zero), Error);
  try {
    psi_grad(d, zero);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularPoint);
  }
  CHECK_NOTHROW(psi_grad(DissipationSpec::ppower(1, 1.5, 1e-8), zero));
  CHECK(psi_grad(DissipationSpec::ppower(1, 3.0), zero)[0] == 0.0);
}

TEST_CASE("invalid models are rejected") {
  CHECK_THROWS_AS(DissipationSpec::ppower(1, 1.0), Error);
  CHECK_THROWS_AS(DissipationSpec::ppower(1, 2.0, -1.0), Error);
  CHECK_THROWS_AS(DissipationSpec::ppower(0, 2.0), Error);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(DissipationSpec::quadratic(asym), Error);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(DissipationSpec::quadratic(indefinite), Error);
  CHECK_THROWS_AS(EnergySpec::quadratic_frobenius(1, 1, 0.0), Error);
}

TEST_CASE("growth and coercivity bounds") {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const double eps = p < 2.0 ? 1e-8 : 0.0;
    const auto r = check_growth_coercivity(DissipationSpec::ppower(2, p, eps),
                                           EnergySpec::ppower_norm(2, 2, p, eps), 2000, 9);
    CHECK(r.pass);
    CHECK(r.gamma > 0.0);
  }
  const auto q = check_growth_coercivity(DissipationSpec::quadratic(spd_matrix()),
                                         EnergySpec::quadratic_frobenius(3, 1, 2.0), 2000, 9);
  CHECK(q.pass);
  CHECK_THROWS_AS(check_growth_coercivity(DissipationSpec::identity(2), EnergySpec::quadratic_frobenius(3, 1),
                                          10, 1),
                  Error);
}
