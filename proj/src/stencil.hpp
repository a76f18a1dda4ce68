// SPDX-License-Identifier: Apache-2.0
// Per-cell forward-difference stencils, shared by the assembly routines.
#pragma once

#include <array>
#include <vector>

#include "dnflow/grid.hpp"

namespace dnflow::detail {

struct CellStencil {
  int count = 0;
  std::array<int, 3> nodes{};
  // coefficient of each node in the difference along axis a
  std::array<std::array<double, 2>, 3> coef{};
};

inline std::vector<CellStencil> build_stencils(const Grid& g) {
  std::vector<CellStencil> out(g.cell_count());
  if (g.dim() == 1) {
    const int n = g.interior(0);
    const double inv_h = 1.0 / g.spacing(0);
    for (int j = 0; j <= n; ++j) {
      CellStencil& s = out[j];
      if (j >= 1) s.nodes[s.count] = j - 1, s.coef[s.count++] = {-inv_h, 0.0};
      if (j < n) s.nodes[s.count] = j, s.coef[s.count++] = {inv_h, 0.0};
    }
    return out;
  }
  const int n0 = g.interior(0), n1 = g.interior(1);
  const double inv_h0 = 1.0 / g.spacing(0), inv_h1 = 1.0 / g.spacing(1);
  auto interior = [&](int j0, int j1) {
    return j0 >= 1 && j0 <= n0 && j1 >= 1 && j1 <= n1;
  };
  for (int j1 = 0; j1 <= n1; ++j1)
    for (int j0 = 0; j0 <= n0; ++j0) {
      CellStencil& s = out[j0 + (n0 + 1) * j1];
      if (interior(j0, j1))
        s.nodes[s.count] = (j0 - 1) + n0 * (j1 - 1), s.coef[s.count++] = {-inv_h0, -inv_h1};
      if (interior(j0 + 1, j1))
        s.nodes[s.count] = j0 + n0 * (j1 - 1), s.coef[s.count++] = {inv_h0, 0.0};
      if (interior(j0, j1 + 1))
        s.nodes[s.count] = (j0 - 1) + n0 * j1, s.coef[s.count++] = {0.0, inv_h1};
    }
  return out;
}

}  // namespace dnflow::detail
