#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mks/convex_body.hpp"
#include "mks/geometry.hpp"

namespace mks {

enum class PointClass { Inside, Boundary, Outside };

struct BoundarySample {
  Vec2 point;
  int loop = 0;
  double arc = 0.0;  // Euclidean arc-length parameter along the loop
  double datum = 0.0;
};

struct GeodesicResult {
  double length = 0.0;
  std::vector<Vec2> polyline;  // from -> bends -> to
};

struct UnreachableError : std::runtime_error {
  UnreachableError() : std::runtime_error("no admissible path between the query points") {}
};

struct DatumReport {
  bool is_compatible = false;  // (H4) on sampled pairs, within `tolerance`
  bool chord_ok = false;       // the stronger chord condition phi(x)-phi(y) <= rho0(x-y)
  double h4_margin = 0.0;      // min of d_L(y->x) - (phi(x)-phi(y)) over tested pairs
  double chord_margin = 0.0;   // min of rho0(x-y) - (phi(x)-phi(y)) over all pairs
  std::pair<int, int> h4_worst_pair{-1, -1};     // (y index, x index)
  std::pair<int, int> chord_worst_pair{-1, -1};  // (y index, x index)
  double tolerance = 0.0;      // slack granted to H4 (polygonization chord deficit)
  long h4_pairs_tested = 0;
  long chord_pairs_tested = 0;
  int sample_count = 0;
};

// Omega as an outer CCW loop minus CW hole loops. Immutable after
// construction; every query is const and thread-safe.
class PolygonalDomain {
 public:
  PolygonalDomain(std::vector<Vec2> outer, std::vector<std::vector<Vec2>> holes = {});

  const std::vector<std::vector<Vec2>>& loops() const { return loops_; }
  const BBox& bbox() const { return bbox_; }
  double diameter() const { return bbox_.diameter(); }
  double perimeter() const { return perimeter_total_; }
  double loop_perimeter(int loop) const { return loop_perimeter_[loop]; }
  bool convex() const { return convex_; }
  int vertex_count() const { return static_cast<int>(edges_.size()); }
  double boundary_tolerance() const { return boundary_tol_; }

  PointClass classify(const Vec2& p) const;
  bool contains(const Vec2& p) const { return classify(p) != PointClass::Outside; }

  // Open segment ]a,b[ contained in the open set Omega (endpoints may lie on
  // the boundary). This is the visibility predicate of the Lax-Hopf formula.
  bool open_segment_in_omega(const Vec2& a, const Vec2& b) const;
  // Segment [a,b] contained in the closed domain (admissible path piece).
  bool segment_in_closure(const Vec2& a, const Vec2& b) const;

  // y on the boundary visible from x: ]y,x[ subset of Omega. Degenerate
  // zero-length segments are not visibility pairs.
  bool visible(const Vec2& y, const Vec2& x) const;

  std::vector<BoundarySample> sample_boundary(int target_count,
                                              const std::function<double(const Vec2&)>& datum) const;

  // Shortest rho0-path from `from` to `to` through the closed domain
  // (visibility graph over the polygon vertices; exact for polygons).
  GeodesicResult geodesic(const Vec2& from, const Vec2& to, const ConvexBody& body) const;

  DatumReport validate_datum(const std::vector<BoundarySample>& samples,
                             const ConvexBody& body, long max_h4_pairs = 100000) const;

  // First boundary hit of the ray x + t*dir, t > 0. Returns the parameter,
  // the exact point, and its (loop, arc) location.
  struct RayHit {
    double t = 0.0;
    Vec2 point;
    int loop = -1;
    double arc = 0.0;
  };
  std::optional<RayHit> ray_exit(const Vec2& x, const Vec2& dir) const;

  // Sum over low-turning vertices of s*beta^2/24: the length deficit of an
  // inscribed polygonization, used to set the H4 acceptance slack.
  double polygonization_chord_deficit() const;

  const std::vector<int>& reflex_vertices() const { return reflex_vertices_; }
  Vec2 vertex(int id) const { return edges_[id].a; }

  struct EdgeView {
    Vec2 a, b;
    int loop;
    double arc_a;
    double len;
  };
  int edge_count() const { return static_cast<int>(edges_.size()); }
  EdgeView edge_view(int id) const {
    const Edge& e = edges_[id];
    return {e.a, e.b, e.loop, e.arc_a, e.len};
  }
  // edge containing the (wrapped) arc parameter on a loop
  int edge_of_arc(int loop, double arc) const;

 private:
  struct Edge {
    Vec2 a, b;
    int loop;
    double arc_a;  // arc parameter of `a` within its loop
    double len;
  };

  void build_buckets();
  void gather_edges(const Vec2& a, const Vec2& b, std::vector<int>& out) const;
  bool segment_admissible(const Vec2& a, const Vec2& b, bool open_interior) const;
  int crossings_from(const Vec2& p) const;

  std::vector<std::vector<Vec2>> loops_;
  std::vector<Edge> edges_;
  std::vector<int> loop_edge_start_;
  std::vector<double> loop_perimeter_;
  std::vector<int> reflex_vertices_;  // ids into edges_ (vertex = edge start)
  BBox bbox_;
  double perimeter_total_ = 0.0;
  double boundary_tol_ = 0.0;
  bool convex_ = false;

  // uniform edge buckets
  int bx_ = 0, by_ = 0;
  double bucket_size_ = 0.0;
  Vec2 bucket_origin_;
  std::vector<std::vector<int32_t>> buckets_;
};

}  // namespace mks
