#pragma once

#include <cstdint>
#include <vector>

#include "mks/lax_hopf.hpp"

namespace mks {

struct MultivaluedDirectionError : std::runtime_error {
  MultivaluedDirectionError() : std::runtime_error("ray direction is multivalued (node in D)") {}
};

struct RayNodeData {
  int32_t primary = -1;      // representative projection sample
  uint8_t cluster_count = 0;
  bool in_d = false;         // >= 2 projection clusters
  bool has_ray = false;
  bool boundary_exit = false;
  Vec2 dir;                  // rho0-unit ray direction d(x)
  double tau = 0.0;          // remaining ray length above x
  Vec2 q;                    // endpoint x + tau d(x)
  int32_t exit_loop = -1;    // boundary exits: exact hit location
  double exit_arc = 0.0;
  double exit_datum = 0.0;
  int32_t cluster_loop = 0;   // loop of the primary cluster
  double arc_center = 0.0;    // arc of the representative sample
  double arc_halfwidth = 0.0; // max circular arc distance of a member from it
};

struct RayField {
  std::vector<RayNodeData> nodes;  // grid-size array
  double delta_pi = 0.0;           // projection value tolerance (3h)
  double cluster_gap = 0.0;        // arc gap separating clusters (5 spacings)
};

// Projection set Pi(x) at an arbitrary point: representative sample index per
// cluster, cheapest first. `delta` defaults to 3h when <= 0.
std::vector<int32_t> projection_clusters(const Frame& frame, const Vec2& x, double delta = -1.0);

// Per-node ray extraction: projections, direction, tau (bisection on the
// linearity + projection-constancy predicate), endpoint q.
RayField extract_rays(const Frame& frame, const LaxHopfSolution& uphi);

// Single-node variant with the spec error contract.
RayNodeData ray_of(const Frame& frame, const LaxHopfSolution& uphi, int i, int j,
                   const RayField* cache = nullptr);

// Non-differentiability mask: one-sided difference quotients disagreeing
// beyond 0.15 in gauge-normalized units.
struct SigmaMask {
  std::vector<uint8_t> mask;
  std::vector<Vec2> points;  // sub-grid ridge estimates
};
SigmaMask detect_sigma(const Frame& frame, const ScalarField& uphi);

struct EPair {
  int32_t p_sample = -1;
  Vec2 p;
  Vec2 q;
  int32_t q_loop = -1;
  double q_arc = 0.0;
  double datum_gap = 0.0;  // phi(q) - phi(p) - rho0(q - p)
};

struct SingularSets {
  std::vector<uint8_t> sigma_mask;
  std::vector<uint8_t> d_mask;
  std::vector<uint8_t> t_mask;
  std::vector<Vec2> j_points;
  std::vector<uint8_t> j_source;  // 0 = interior ray endpoint, 1 = multiprojection node
  std::vector<Vec2> sigma_points;
  std::vector<EPair> e_pairs;
  double t_measure = 0.0;
  // consistency checks (up to one cell of slack)
  long d_outside_sigma = 0;
  long j_far_from_d = 0;
  bool d_subset_sigma = true;
  bool j_in_closure_d = true;
};

SingularSets detect_singular_sets(const Frame& frame, const LaxHopfSolution& uphi,
                                  const RayField& rays, const SigmaMask& sigma);

}  // namespace mks
