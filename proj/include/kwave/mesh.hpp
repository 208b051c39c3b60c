#pragma once

#include <cstddef>

namespace kwave {

enum class Geometry { line, duct };

/// Cell-centered spatial mesh: a truncated x1 line, or an (x1, x2) duct slab
/// with walls at y_min and y_max. Cells are stored x-major: index(i, j) = i * ny + j.
struct Mesh {
  Geometry geometry = Geometry::line;
  double x_min = -1.0;
  double x_max = 1.0;
  int nx = 16;
  double y_min = 0.0;
  double y_max = 1.0;
  int ny = 1;

  double hx() const { return (x_max - x_min) / nx; }
  double hy() const { return (y_max - y_min) / ny; }
  double x(int i) const { return x_min + (i + 0.5) * hx(); }
  double y(int j) const { return y_min + (j + 0.5) * hy(); }
  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * ny + j; }
  /// Measure of one cell (hx for the line, hx * hy for the duct).
  double cell_volume() const { return geometry == Geometry::line ? hx() : hx() * hy(); }

  /// Throws ConfigError on empty or inverted extents.
  void validate() const;
};

}  // namespace kwave
