// SPDX-License-Identifier: Apache-2.0
#include "dnflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dnflow/error.hpp"

namespace dnflow {

namespace {

void require_same_shape(const VectorField& a, const VectorField& b) {
  if (!(a.grid() == b.grid()) || a.m() != b.m())
    fail(ErrorKind::InvalidArgument, "fields live on different grids or have different m");
}

void require_p(double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    fail(ErrorKind::InvalidArgument, "exponent p must satisfy p > 1");
}

}  // namespace

Grid::Grid(std::span<const double> lengths, std::span<const int> interior_counts) {
  if (lengths.size() != interior_counts.size() || lengths.empty() || lengths.size() > 2)
    fail(ErrorKind::InvalidArgument, "grid needs one length and one count per axis, 1 or 2 axes");
  dim_ = static_cast<int>(lengths.size());
  for (int a = 0; a < dim_; ++a) {
    if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
      fail(ErrorKind::InvalidArgument, "grid lengths must be positive");
    if (interior_counts[a] < 1)
      fail(ErrorKind::InvalidArgument, "grid needs at least one interior node per axis");
    lengths_[a] = lengths[a];
    interior_[a] = interior_counts[a];
  }
  if (dim_ == 1) {
    lengths_[1] = 1.0;
    interior_[1] = 1;
  }
}

Grid Grid::line(double length, int interior) {
  const double l[] = {length};
  const int n[] = {interior};
  return Grid(l, n);
}

Grid Grid::rectangle(double length0, double length1, int interior0, int interior1) {
  const double l[] = {length0, length1};
  const int n[] = {interior0, interior1};
  return Grid(l, n);
}

int Grid::node_count() const {
  return dim_ == 1 ? interior_[0] : interior_[0] * interior_[1];
}

int Grid::cell_count() const {
  return dim_ == 1 ? interior_[0] + 1 : (interior_[0] + 1) * (interior_[1] + 1);
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= spacing(a);
  return v;
}

std::array<int, 2> Grid::node_index(int node) const {
  return {node % interior_[0], node / interior_[0]};
}

int Grid::node_at(std::array<int, 2> index) const {
  return dim_ == 1 ? index[0] : index[0] + interior_[0] * index[1];
}

double Grid::node_coordinate(int node, int axis) const {
  const auto idx = node_index(node);
  return (idx[axis] + 1) * spacing(axis);
}

// --- VectorField ------------------------------------------------------------

VectorField::VectorField(const Grid& grid, int m)
    : grid_(grid), m_(m), values_(static_cast<std::size_t>(m) * grid.node_count(), 0.0) {
  if (m < 1) fail(ErrorKind::InvalidArgument, "component count m must be >= 1");
}

VectorField::VectorField(const Grid& grid, int m, std::vector<double> values)
    : grid_(grid), m_(m), values_(std::move(values)) {
  if (m < 1) fail(ErrorKind::InvalidArgument, "component count m must be >= 1");
  if (values_.size() != static_cast<std::size_t>(m) * grid.node_count())
    fail(ErrorKind::InvalidArgument,
         "field has " + std::to_string(values_.size()) + " values, expected " +
             std::to_string(m * grid.node_count()));
  for (double v : values_)
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "field entries must be finite");
}

std::span<const double> VectorField::component(int comp) const {
  return std::span<const double>(values_).subspan(
      static_cast<std::size_t>(comp) * grid_.node_count(), grid_.node_count());
}

double VectorField::sup_norm() const {
  double best = 0.0;
  for (int i = 0; i < node_count(); ++i) {
    double s = 0.0;
    for (int c = 0; c < m_; ++c) s += (*this)(c, i) * (*this)(c, i);
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

VectorField& VectorField::operator+=(const VectorField& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

// --- CellGradient -----------------------------------------------------------

CellGradient::CellGradient(const Grid& grid, int m)
    : grid_(grid),
      m_(m),
      values_(static_cast<std::size_t>(m) * grid.dim() * grid.cell_count(), 0.0) {}

CellGradient::CellGradient(const Grid& grid, int m, std::vector<double> values)
    : grid_(grid), m_(m), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(m) * grid.dim() * grid.cell_count())
    fail(ErrorKind::InvalidArgument, "cell gradient has the wrong number of values");
}

void CellGradient::load(int cell, std::span<double> out) const {
  const int n = grid_.dim();
  for (int c = 0; c < m_; ++c)
    for (int a = 0; a < n; ++a) out[c * n + a] = (*this)(c, a, cell);
}

void CellGradient::store(int cell, std::span<const double> in) {
  const int n = grid_.dim();
  for (int c = 0; c < m_; ++c)
    for (int a = 0; a < n; ++a) (*this)(c, a, cell) = in[c * n + a];
}

// --- difference operators ---------------------------------------------------

CellGradient gradient(const VectorField& field) {
  const Grid& g = field.grid();
  CellGradient out(g, field.m());
  if (g.dim() == 1) {
    const int n = g.interior(0);
    const double inv_h = 1.0 / g.spacing(0);
    for (int c = 0; c < field.m(); ++c) {
      auto u = field.component(c);
      for (int j = 0; j <= n; ++j) {
        const double left = j >= 1 ? u[j - 1] : 0.0;
        const double right = j < n ? u[j] : 0.0;
        out(c, 0, j) = (right - left) * inv_h;
      }
    }
    return out;
  }
  const int n0 = g.interior(0), n1 = g.interior(1);
  const double inv_h0 = 1.0 / g.spacing(0), inv_h1 = 1.0 / g.spacing(1);
  for (int c = 0; c < field.m(); ++c) {
    auto u = field.component(c);
    // padded value
    auto at = [&](int j0, int j1) -> double {
      if (j0 < 1 || j0 > n0 || j1 < 1 || j1 > n1) return 0.0;
      return u[(j0 - 1) + n0 * (j1 - 1)];
    };
    for (int j1 = 0; j1 <= n1; ++j1)
      for (int j0 = 0; j0 <= n0; ++j0) {
        const int cell = j0 + (n0 + 1) * j1;
        const double here = at(j0, j1);
        out(c, 0, cell) = (at(j0 + 1, j1) - here) * inv_h0;
        out(c, 1, cell) = (at(j0, j1 + 1) - here) * inv_h1;
      }
  }
  return out;
}

VectorField divergence_adjoint(const CellGradient& flux) {
  const Grid& g = flux.grid();
  VectorField out(g, flux.m());
  if (g.dim() == 1) {
    const int n = g.interior(0);
    const double inv_h = 1.0 / g.spacing(0);
    for (int c = 0; c < flux.m(); ++c)
      for (int i = 0; i < n; ++i)
        // node i sits between cells i (on its left) and i + 1
        out(c, i) = (flux(c, 0, i + 1) - flux(c, 0, i)) * inv_h;
    return out;
  }
  const int n0 = g.interior(0), n1 = g.interior(1);
  const double inv_h0 = 1.0 / g.spacing(0), inv_h1 = 1.0 / g.spacing(1);
  for (int c = 0; c < flux.m(); ++c)
    for (int i1 = 0; i1 < n1; ++i1)
      for (int i0 = 0; i0 < n0; ++i0) {
        // padded (i0 + 1, i1 + 1) anchors its own cell and receives from the
        // cells anchored one step back along each axis
        const int own = (i0 + 1) + (n0 + 1) * (i1 + 1);
        const int west = i0 + (n0 + 1) * (i1 + 1);
        const int south = (i0 + 1) + (n0 + 1) * i1;
        out(c, i0 + n0 * i1) = (flux(c, 0, own) - flux(c, 0, west)) * inv_h0 +
                               (flux(c, 1, own) - flux(c, 1, south)) * inv_h1;
      }
  return out;
}

double inner_product_nodes(const VectorField& a, const VectorField& b) {
  require_same_shape(a, b);
  double s = 0.0;
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s * a.grid().cell_volume();
}

double inner_product_cells(const CellGradient& a, const CellGradient& b) {
  if (!(a.grid() == b.grid()) || a.m() != b.m())
    fail(ErrorKind::InvalidArgument, "cell gradients have different shapes");
  double s = 0.0;
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s * a.grid().cell_volume();
}

namespace {

double lp_power(const VectorField& field, double p) {
  double s = 0.0;
  for (int i = 0; i < field.node_count(); ++i) {
    double r2 = 0.0;
    for (int c = 0; c < field.m(); ++c) r2 += field(c, i) * field(c, i);
    if (r2 > 0.0) s += std::pow(r2, 0.5 * p);
  }
  return s * field.grid().cell_volume();
}

double w1p_power(const VectorField& field, double p) {
  const CellGradient du = gradient(field);
  const int n = field.grid().dim();
  double s = 0.0;
  for (int k = 0; k < du.cell_count(); ++k) {
    double r2 = 0.0;
    for (int c = 0; c < du.m(); ++c)
      for (int a = 0; a < n; ++a) r2 += du(c, a, k) * du(c, a, k);
    if (r2 > 0.0) s += std::pow(r2, 0.5 * p);
  }
  return s * field.grid().cell_volume();
}

}  // namespace

double lp_norm(const VectorField& field, double p) {
  require_p(p);
  return std::pow(lp_power(field, p), 1.0 / p);
}

double w1p_seminorm(const VectorField& field, double p) {
  require_p(p);
  return std::pow(w1p_power(field, p), 1.0 / p);
}

double rayleigh_quotient(const VectorField& field, double p) {
  require_p(p);
  const double denom = lp_power(field, p);
  if (!(denom > 0.0)) fail(ErrorKind::ZeroField, "Rayleigh quotient of the zero field");
  return w1p_power(field, p) / denom;
}

}  // namespace dnflow
