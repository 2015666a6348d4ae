#pragma once

#include <cstdint>
#include <vector>

#include "mks/domain.hpp"
#include "mks/geometry.hpp"

namespace mks {

// Isotropic node lattice aligned to multiples of h (so that symmetry axes of
// the presets land on grid rows/columns).
struct GridSpec {
  Vec2 origin;
  double h = 0.0;
  int nx = 0;
  int ny = 0;

  // Covers `box` with at least one cell of margin. `target_h` is the requested
  // spacing; it is coarsened so that neither direction exceeds `max_cells`.
  static GridSpec cover(const BBox& box, double target_h, int max_cells = 296);

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  Vec2 node(int i, int j) const { return {origin.x + i * h, origin.y + j * h}; }
  bool valid(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
};

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
  std::vector<uint8_t> mask;  // 1 = node in the closed domain

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(g.size(), fill), mask(g.size(), 0) {}

  double& at(int i, int j) { return values[grid.idx(i, j)]; }
  double at(int i, int j) const { return values[grid.idx(i, j)]; }
  bool inside(int i, int j) const { return mask[grid.idx(i, j)] != 0; }

  // Mask-weighted bilinear interpolation; NaN when no masked corner is
  // available.
  double interpolate(const Vec2& p) const;
  // True when all four corners of p's cell are masked (fast path is exact
  // bilinear there).
  bool cell_fully_inside(const Vec2& p) const;

  struct Stats {
    double min = 0.0, max = 0.0;
    Vec2 argmin, argmax;
    long count = 0;
  };
  Stats stats() const;
};

// Node mask for the closed domain plus an interior mask (all four neighbors
// masked) used by difference stencils.
struct DomainMask {
  std::vector<uint8_t> inside;    // node in closure of Omega
  std::vector<uint8_t> boundary;  // node classified on the boundary itself
  std::vector<uint8_t> interior;  // node + 4-neighborhood inside
};

DomainMask rasterize_domain(const PolygonalDomain& dom, const GridSpec& grid);

}  // namespace mks
