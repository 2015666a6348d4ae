#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace mks {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3-D cross product; > 0 when b is counter-clockwise from a
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
constexpr double norm2(const Vec2& v) { return v.x * v.x + v.y * v.y; }

inline Vec2 normalized(const Vec2& v) {
  double n = norm(v);
  return n > 0.0 ? v / n : Vec2{0.0, 0.0};
}

inline double dist(const Vec2& a, const Vec2& b) { return norm(b - a); }

// Distance from p to the closed segment [a, b].
inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double den = norm2(ab);
  if (den <= 0.0) return dist(p, a);
  double t = dot(p - a, ab) / den;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return dist(p, a + t * ab);
}

struct BBox {
  Vec2 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void expand(const Vec2& p) {
    if (p.x < min.x) min.x = p.x;
    if (p.y < min.y) min.y = p.y;
    if (p.x > max.x) max.x = p.x;
    if (p.y > max.y) max.y = p.y;
  }
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  double diameter() const { return std::hypot(width(), height()); }
};

// Intersection of segments [a,b] and [c,d]. Returns parameters on both segments
// when they cross; collinear overlaps are reported via the `collinear` flag.
struct SegmentHit {
  bool hit = false;
  bool collinear = false;
  double t = 0.0;  // parameter on [a,b]
  double u = 0.0;  // parameter on [c,d]
};

inline SegmentHit intersect_segments(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d,
                                     double eps) {
  SegmentHit h;
  Vec2 r = b - a, s = d - c;
  double denom = cross(r, s);
  Vec2 ca = c - a;
  double scale = std::max({std::abs(r.x), std::abs(r.y), std::abs(s.x), std::abs(s.y), 1e-300});
  if (std::abs(denom) <= eps * scale * scale) {
    if (std::abs(cross(ca, r)) <= eps * scale * scale) h.collinear = true;
    return h;
  }
  double t = cross(ca, s) / denom;
  double u = cross(ca, r) / denom;
  if (t >= -eps && t <= 1.0 + eps && u >= -eps && u <= 1.0 + eps) {
    h.hit = true;
    h.t = t;
    h.u = u;
  }
  return h;
}

}  // namespace mks
