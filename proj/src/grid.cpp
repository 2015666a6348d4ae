#include "mks/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mks/parallel.hpp"

namespace mks {

GridSpec GridSpec::cover(const BBox& box, double target_h, int max_cells) {
  double ext = std::max(box.width(), box.height());
  double h = std::max(target_h, ext / max_cells);
  GridSpec g;
  g.h = h;
  long i0 = static_cast<long>(std::floor(box.min.x / h)) - 1;
  long j0 = static_cast<long>(std::floor(box.min.y / h)) - 1;
  g.origin = {i0 * h, j0 * h};
  g.nx = static_cast<int>(std::ceil((box.max.x - g.origin.x) / h)) + 2;
  g.ny = static_cast<int>(std::ceil((box.max.y - g.origin.y) / h)) + 2;
  return g;
}

double ScalarField::interpolate(const Vec2& p) const {
  double fx = (p.x - grid.origin.x) / grid.h;
  double fy = (p.y - grid.origin.y) / grid.h;
  int i = std::clamp(static_cast<int>(std::floor(fx)), 0, grid.nx - 2);
  int j = std::clamp(static_cast<int>(std::floor(fy)), 0, grid.ny - 2);
  double ax = fx - i, ay = fy - j;
  double w[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  std::size_t id[4] = {grid.idx(i, j), grid.idx(i + 1, j), grid.idx(i, j + 1), grid.idx(i + 1, j + 1)};
  if (mask[id[0]] && mask[id[1]] && mask[id[2]] && mask[id[3]])
    return w[0] * values[id[0]] + w[1] * values[id[1]] + w[2] * values[id[2]] + w[3] * values[id[3]];
  double acc = 0.0, wsum = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (mask[id[k]]) {
      acc += w[k] * values[id[k]];
      wsum += w[k];
    }
  }
  if (wsum <= 1e-12) return std::numeric_limits<double>::quiet_NaN();
  return acc / wsum;
}

bool ScalarField::cell_fully_inside(const Vec2& p) const {
  double fx = (p.x - grid.origin.x) / grid.h;
  double fy = (p.y - grid.origin.y) / grid.h;
  int i = static_cast<int>(std::floor(fx));
  int j = static_cast<int>(std::floor(fy));
  if (i < 0 || j < 0 || i > grid.nx - 2 || j > grid.ny - 2) return false;
  return mask[grid.idx(i, j)] && mask[grid.idx(i + 1, j)] && mask[grid.idx(i, j + 1)] &&
         mask[grid.idx(i + 1, j + 1)];
}

ScalarField::Stats ScalarField::stats() const {
  Stats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -s.min;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      std::size_t id = grid.idx(i, j);
      if (!mask[id]) continue;
      ++s.count;
      double v = values[id];
      if (v < s.min) { s.min = v; s.argmin = grid.node(i, j); }
      if (v > s.max) { s.max = v; s.argmax = grid.node(i, j); }
    }
  if (s.count == 0) { s.min = s.max = 0.0; }
  return s;
}

DomainMask rasterize_domain(const PolygonalDomain& dom, const GridSpec& grid) {
  DomainMask m;
  m.inside.assign(grid.size(), 0);
  m.boundary.assign(grid.size(), 0);
  m.interior.assign(grid.size(), 0);
  parallel_for(static_cast<std::size_t>(grid.ny), [&](std::size_t j) {
    for (int i = 0; i < grid.nx; ++i) {
      PointClass c = dom.classify(grid.node(i, static_cast<int>(j)));
      if (c != PointClass::Outside) m.inside[grid.idx(i, static_cast<int>(j))] = 1;
      if (c == PointClass::Boundary) m.boundary[grid.idx(i, static_cast<int>(j))] = 1;
    }
  });
  for (int j = 1; j + 1 < grid.ny; ++j)
    for (int i = 1; i + 1 < grid.nx; ++i) {
      std::size_t id = grid.idx(i, j);
      if (m.inside[id] && m.inside[id - 1] && m.inside[id + 1] && m.inside[id - grid.nx] &&
          m.inside[id + grid.nx])
        m.interior[id] = 1;
    }
  return m;
}

}  // namespace mks
