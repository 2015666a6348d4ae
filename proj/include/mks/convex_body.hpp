#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mks/geometry.hpp"

namespace mks {

struct ZeroVectorError : std::runtime_error {
  ZeroVectorError() : std::runtime_error("gauge gradient of the zero vector") {}
};

struct NonDifferentiableError : std::runtime_error {
  explicit NonDifferentiableError(const std::string& what) : std::runtime_error(what) {}
};

enum class BodyFamily { Ball, Ellipse, PBall, Lens, Polygon };

// Gradient-constraint body K together with its polar K0.
//
// The description always refers to a concrete set S (ball, ellipse sublevel,
// p-ball, the lens (|x|+sqrt2/2)^2 + y^2 <= 1, or a polygon). With role
// "primal" S is K itself; with role "polar" S is K0 and K is recovered by
// duality (gauge of K = support function of S). The negated() wrapper gives
// the body -K used by the reverse geometry.
//
// All evaluators are pure and the object is immutable after construction, so
// concurrent use is safe.
class ConvexBody {
 public:
  static ConvexBody ball(double radius);
  // {xi : xi^T A xi <= 1} with A = [[a11, a12], [a12, a22]] positive definite
  static ConvexBody ellipse(double a11, double a12, double a22);
  static ConvexBody p_ball(double p);
  static ConvexBody lens(bool polar_role);
  static ConvexBody polygon(std::vector<Vec2> vertices_ccw, bool polar_role = false);

  // Body -K (equivalently: described set mirrored through the origin).
  ConvexBody negated() const;

  // Minkowski gauge rho of K: inf{t >= 0 : xi in tK}.
  double gauge(const Vec2& xi) const;
  // Gauge rho0 of the polar body K0 = support function of K.
  double polar_gauge(const Vec2& xi) const;
  // D rho(xi), an element of the boundary of K0 (Euler: <Drho, xi> = rho).
  Vec2 gauge_gradient(const Vec2& xi) const;

  // rho continuously differentiable away from 0 (the standing hypothesis of
  // every gradient-based operation).
  bool is_c1() const;
  BodyFamily family() const { return family_; }
  bool polar_role() const { return polar_role_; }
  bool negated_flag() const { return negate_; }

  // min/max of rho0 over unit directions: the Euclidean equivalence constants
  // c1 |xi| <= rho0(xi) <= c2 |xi| (sampled estimate, conditioning info only).
  void equivalence_constants(double& c1, double& c2, int samples = 512) const;

  // Boundary point of the described set in polar direction `angle`.
  Vec2 described_boundary_point(double angle) const;
  // Dense-sampling support function of the described set (test oracle and
  // fallback cross-check for the closed forms).
  double described_support_sampled(const Vec2& xi, int samples) const;

  std::string family_name() const;

 private:
  ConvexBody() = default;

  // Primitives on the described set S.
  double set_gauge(const Vec2& xi) const;
  double set_support(const Vec2& xi) const;
  Vec2 set_gauge_gradient(const Vec2& xi) const;
  Vec2 set_support_argmax(const Vec2& xi) const;

  BodyFamily family_ = BodyFamily::Ball;
  bool polar_role_ = false;
  bool negate_ = false;

  double radius_ = 1.0;                     // ball
  double a11_ = 1, a12_ = 0, a22_ = 1;      // ellipse matrix
  double i11_ = 1, i12_ = 0, i22_ = 1;      // its inverse
  double p_ = 2.0, q_ = 2.0;                // p-ball and dual exponent
  std::vector<Vec2> verts_;                 // polygon
  std::vector<Vec2> edge_normals_;          // outward, unnormalized
  std::vector<double> edge_offsets_;        // <n_i, v_i> > 0
};

}  // namespace mks
