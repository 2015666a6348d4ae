#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mks/ray_field.hpp"

namespace mks {

struct EmptyTError : std::runtime_error {
  EmptyTError() : std::runtime_error("T has measure below tolerance; witness not applicable") {}
};

// theta = D rho(Du_phi) and its divergence, masked away from Sigma and filled
// by nearest-valid extension elsewhere.
struct DirectionField {
  ScalarField theta_x, theta_y;
  ScalarField div_theta;
  std::vector<uint8_t> theta_valid;
  std::vector<uint8_t> div_valid;
};

DirectionField direction_divergence(const Frame& frame, const ScalarField& uphi,
                                    const std::vector<uint8_t>& sigma_mask);

// v_f along rays: integral of f(x + t d) exp(int_0^t div theta) dt up to tau.
ScalarField solve_vf(const Frame& frame, const RayField& rays, const ScalarField& f,
                     const DirectionField& dir);

struct BumpFunction {
  Vec2 center;
  double rx = 0.0, ry = 0.0;
  bool usable = false;
};

std::vector<BumpFunction> make_test_bumps(const Frame& frame);

struct WeakResidual {
  double residual = 0.0;
  double flux = 0.0;
  double source = 0.0;
  Vec2 center;
};

// |sum v <theta, grad psi> h^2 - sum f psi h^2| per bump, normalized by the
// source integral (or the bump mass for homogeneous tests).
std::vector<WeakResidual> weak_residual(const Frame& frame, const ScalarField& v,
                                        const DirectionField& dir, const ScalarField& f,
                                        const std::vector<BumpFunction>& bumps);

struct WitnessResult {
  ScalarField v_plus, v_minus;
  std::vector<WeakResidual> homogeneous_residuals;
  double max_residual = 0.0;
};

// Non-uniqueness witness of the v component: v+ and v- transport the
// indicator of T along the forward and reverse geometries; their sum solves
// the homogeneous equation.
WitnessResult nonuniqueness_witness(const Frame& frame, const LaxHopfSolution& uphi,
                                    const SingularSets& sets, const DirectionField& dir_forward);

struct Diagnosis {
  double t_measure = 0.0;
  double t_measure_tolerance = 0.0;
  bool v_unique = false;
  bool j_in_support = false;
  bool u_unique = false;
  double energy_gap = 0.0;
  std::vector<WeakResidual> weak_residuals;
  double max_weak_residual = 0.0;
  std::optional<double> witness_residual;
  long j_points_total = 0;
  long j_points_outside_support = 0;
};

Diagnosis diagnose(const Frame& frame, const ScalarField& uphi, const ScalarField& uf,
                   const ScalarField& vf, const SingularSets& sets, const DirectionField& dir,
                   const ScalarField& f, const std::vector<uint8_t>& support_mask,
                   std::optional<double> witness_residual);

}  // namespace mks
