// SPDX-License-Identifier: Apache-2.0
//
// Uniform box grids with homogeneous Dirichlet boundary, nodal vector fields
// and the forward-difference cell gradient.
//
// Node layout: interior node (i0, i1) has linear index i0 + n0 * i1 (axis 0
// fastest). Cells are anchored at padded node indices (j0, j1), 0 <= j_a <= n_a,
// with linear index j0 + (n0 + 1) * j1. Cell (j0, j1) carries the forward
// differences from padded node (j0, j1) along each axis; padded nodes with an
// index of 0 or n_a + 1 are boundary nodes whose value is zero.
//
// Storage is component-major: a field stores component c of node i at
// c * node_count + i; a cell gradient stores (c, axis a, cell k) at
// (c * dim + a) * cell_count + k.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace dnflow {

class Grid {
 public:
  Grid() = default;

  /// `lengths` and `interior_counts` must both have one entry per axis
  /// (1 or 2 axes).
  Grid(std::span<const double> lengths, std::span<const int> interior_counts);

  static Grid line(double length, int interior);
  static Grid rectangle(double length0, double length1, int interior0,
                        int interior1);

  int dim() const { return dim_; }
  double length(int axis) const { return lengths_[axis]; }
  int interior(int axis) const { return interior_[axis]; }
  int cells_along(int axis) const { return interior_[axis] + 1; }
  double spacing(int axis) const { return lengths_[axis] / (interior_[axis] + 1); }

  int node_count() const;
  int cell_count() const;
  /// Product of spacings; the quadrature weight of every node and cell.
  double cell_volume() const;

  /// Physical coordinate of interior node `node` along `axis`.
  double node_coordinate(int node, int axis) const;
  /// Interior multi-index of a linear node index.
  std::array<int, 2> node_index(int node) const;
  int node_at(std::array<int, 2> index) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dim_ = 1;
  std::array<double, 2> lengths_{1.0, 1.0};
  std::array<int, 2> interior_{1, 1};
};

/// m-component nodal values on the interior of a grid.
class VectorField {
 public:
  VectorField() = default;
  /// Zero field.
  VectorField(const Grid& grid, int m);
  /// Takes ownership of component-major values; every entry must be finite.
  VectorField(const Grid& grid, int m, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  int m() const { return m_; }
  int node_count() const { return grid_.node_count(); }
  std::size_t size() const { return values_.size(); }

  double operator()(int comp, int node) const {
    return values_[static_cast<std::size_t>(comp) * grid_.node_count() + node];
  }
  double& operator()(int comp, int node) {
    return values_[static_cast<std::size_t>(comp) * grid_.node_count() + node];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> component(int comp) const;

  /// Largest Euclidean norm of a nodal vector.
  double sup_norm() const;

  VectorField& operator+=(const VectorField& other);
  VectorField& operator-=(const VectorField& other);
  VectorField& operator*=(double s);
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }

 private:
  Grid grid_;
  int m_ = 1;
  std::vector<double> values_;
};

/// Per-cell m x dim gradient matrices.
class CellGradient {
 public:
  CellGradient() = default;
  CellGradient(const Grid& grid, int m);
  CellGradient(const Grid& grid, int m, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  int m() const { return m_; }
  int cell_count() const { return grid_.cell_count(); }

  double operator()(int comp, int axis, int cell) const {
    return values_[index(comp, axis, cell)];
  }
  double& operator()(int comp, int axis, int cell) {
    return values_[index(comp, axis, cell)];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Copies the m x dim matrix of `cell` into `out` (row-major, component rows).
  void load(int cell, std::span<double> out) const;
  void store(int cell, std::span<const double> in);

 private:
  std::size_t index(int comp, int axis, int cell) const {
    return (static_cast<std::size_t>(comp) * grid_.dim() + axis) *
               grid_.cell_count() +
           cell;
  }

  Grid grid_;
  int m_ = 1;
  std::vector<double> values_;
};

CellGradient gradient(const VectorField& field);

/// Negative adjoint of `gradient` under the h^n-weighted inner products:
/// inner_product_cells(gradient(u), q) == -inner_product_nodes(u, divergence_adjoint(q)).
VectorField divergence_adjoint(const CellGradient& flux);

double inner_product_nodes(const VectorField& a, const VectorField& b);
double inner_product_cells(const CellGradient& a, const CellGradient& b);

/// (h^n sum_nodes |u|^p)^(1/p).
double lp_norm(const VectorField& field, double p);
/// (h^n sum_cells |Du|^p)^(1/p), Frobenius norm per cell.
double w1p_seminorm(const VectorField& field, double p);
/// w1p_seminorm^p / lp_norm^p; throws ZeroField for the zero field.
double rayleigh_quotient(const VectorField& field, double p);

}  // namespace dnflow
