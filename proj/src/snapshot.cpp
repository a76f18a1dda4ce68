// SPDX-License-Identifier: Apache-2.0
#include "dnflow/snapshot.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "dnflow/error.hpp"

namespace dnflow {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  double v = 0.0;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    fail(ErrorKind::IoError, "snapshot: cannot parse number '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string snapshot_to_string(const VectorField& field) {
  const Grid& g = field.grid();
  std::string out = "# grid dim=" + std::to_string(g.dim()) + " lengths=";
  for (int a = 0; a < g.dim(); ++a) out += (a ? "," : "") + format_double(g.length(a));
  out += " interior=";
  for (int a = 0; a < g.dim(); ++a) out += (a ? "," : "") + std::to_string(g.interior(a));
  out += " m=" + std::to_string(field.m()) + "\n";
  for (int i = 0; i < field.node_count(); ++i) {
    for (int c = 0; c < field.m(); ++c) {
      if (c) out += ',';
      out += format_double(field(c, i));
    }
    out += '\n';
  }
  return out;
}

VectorField snapshot_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# grid ", 0) != 0)
    fail(ErrorKind::IoError, "snapshot: missing '# grid' header");
  int dim = 0, m = 0;
  std::vector<double> lengths;
  std::vector<int> counts;
  for (const auto& tok : split(header.substr(7), ' ')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string::npos) fail(ErrorKind::IoError, "snapshot: bad header token '" + tok + "'");
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "dim") dim = static_cast<int>(parse_double(val));
    else if (key == "m") m = static_cast<int>(parse_double(val));
    else if (key == "lengths") for (const auto& v : split(val, ',')) lengths.push_back(parse_double(v));
    else if (key == "interior") for (const auto& v : split(val, ',')) counts.push_back(static_cast<int>(parse_double(v)));
    else fail(ErrorKind::IoError, "snapshot: unknown header key '" + key + "'");
  }
  if (dim < 1 || dim > 2 || static_cast<int>(lengths.size()) != dim ||
      static_cast<int>(counts.size()) != dim || m < 1)
    fail(ErrorKind::IoError, "snapshot: inconsistent header");
  Grid grid;
  try {
    grid = Grid(lengths, counts);
  } catch (const Error& e) {
    fail(ErrorKind::IoError, std::string("snapshot: ") + e.what());
  }
  const int nodes = grid.node_count();
  std::vector<double> values(static_cast<std::size_t>(m) * nodes);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (row >= nodes) fail(ErrorKind::IoError, "snapshot: too many rows");
    const auto cols = split(line, ',');
    if (static_cast<int>(cols.size()) != m) fail(ErrorKind::IoError, "snapshot: wrong column count");
    for (int c = 0; c < m; ++c) values[static_cast<std::size_t>(c) * nodes + row] = parse_double(cols[c]);
    ++row;
  }
  if (row != nodes) fail(ErrorKind::IoError, "snapshot: expected " + std::to_string(nodes) + " rows");
  return VectorField(grid, m, std::move(values));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) fail(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

void write_snapshot(const std::filesystem::path& path, const VectorField& field) {
  write_text_atomic(path, snapshot_to_string(field));
}

VectorField read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open snapshot " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return snapshot_from_string(ss.str());
}

}  // namespace dnflow
