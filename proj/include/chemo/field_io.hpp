#pragma once

// Text snapshots of fields.
//
// A snapshot file is a sequence of blocks. Each block is
//
//   field <name>
//   dim <1|2>
//   cells <n0> [n1]
//   spacing <h0> [h1]
//   time <t>
//   <value>            one per line, row-major, 17 significant digits
//   ...
//
// A file written by the simulator holds a `u` block followed by a `v` block.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chemo/grid.hpp"

namespace chemo {

struct NamedField {
  std::string name;
  double time = 0.0;
  Field field;
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_field_block(std::ostream& os, const std::string& name, const Field& z, double time) {
  const Grid& g = z.grid();
  os << "field " << name << '\n';
  os << "dim " << g.dim << '\n';
  os << "cells " << g.cells[0];
  if (g.dim == 2) os << ' ' << g.cells[1];
  os << "\nspacing " << format_double(g.spacing(0));
  if (g.dim == 2) os << ' ' << format_double(g.spacing(1));
  os << "\ntime " << format_double(time) << '\n';
  for (double x : z.data()) os << format_double(x) << '\n';
}

inline void write_snapshot(const std::filesystem::path& path, const std::vector<NamedField>& blocks) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot open snapshot file for writing: " + path.string());
  for (const auto& b : blocks) write_field_block(os, b.name, b.field, b.time);
}

namespace detail {

inline std::string expect_key(std::istream& is, const std::string& key) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw Error("snapshot: expected '" + key + "', got '" + line + "'");
    std::string rest;
    std::getline(ls, rest);
    return rest;
  }
  throw Error("snapshot: unexpected end of file looking for '" + key + "'");
}

}  // namespace detail

inline std::vector<NamedField> read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open snapshot file: " + path.string());
  std::vector<NamedField> out;
  while (true) {
    // skip blank lines between blocks
    while (is && (is.peek() == '\n' || is.peek() == ' ')) is.get();
    if (!is || is.peek() == EOF) break;
    NamedField nf;
    std::istringstream(detail::expect_key(is, "field")) >> nf.name;
    int dim = 0;
    std::istringstream(detail::expect_key(is, "dim")) >> dim;
    std::array<int, 2> cells{1, 1};
    std::array<double, 2> h{1.0, 1.0};
    {
      std::istringstream cs(detail::expect_key(is, "cells"));
      for (int k = 0; k < dim; ++k) cs >> cells[k];
      std::istringstream hs(detail::expect_key(is, "spacing"));
      for (int k = 0; k < dim; ++k) hs >> h[k];
    }
    std::istringstream(detail::expect_key(is, "time")) >> nf.time;
    const Grid g = Grid::make(dim, {h[0] * cells[0], h[1] * cells[1]}, cells);
    std::vector<double> values(g.size());
    for (double& x : values) {
      if (!(is >> x)) throw Error("snapshot: truncated value list in " + path.string());
    }
    is.ignore();
    nf.field = Field(g, std::move(values));
    out.push_back(std::move(nf));
  }
  return out;
}

}  // namespace chemo
