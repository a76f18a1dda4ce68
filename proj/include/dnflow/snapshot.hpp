// SPDX-License-Identifier: Apache-2.0
//
// Field snapshot CSV:
//   # grid dim=<d> lengths=<l1[,l2]> interior=<n1[,n2]> m=<m>
// followed by one row per interior node (linear node order) holding the m
// component values with 17 significant digits.
#pragma once

#include <filesystem>
#include <string>

#include "dnflow/grid.hpp"

namespace dnflow {

std::string format_double(double x);

std::string snapshot_to_string(const VectorField& field);
VectorField snapshot_from_string(const std::string& text);

/// Writes through a temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_snapshot(const std::filesystem::path& path, const VectorField& field);
VectorField read_snapshot(const std::filesystem::path& path);

}  // namespace dnflow
