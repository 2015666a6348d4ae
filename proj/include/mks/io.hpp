#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "mks/ray_field.hpp"
#include "mks/transport.hpp"

namespace mks {

// x,y,value rows in row-major node order, 17 significant digits, LF endings;
// nodes outside the mask carry value "nan".
std::string field_to_csv(const ScalarField& field);
void write_text_file(const std::string& path, const std::string& content);

nlohmann::json field_summary(const ScalarField& field);
nlohmann::json vec2_json(const Vec2& v);

nlohmann::json singular_sets_json(const Frame& frame, const SingularSets& sets);

// Deterministic scene: domain outline, subsampled rays, Sigma/D/J/T overlays,
// v_f shading with a legend.
std::string render_svg(const Frame& frame, const ScalarField& vf, const RayField& rays,
                       const SingularSets& sets, const std::string& title);

}  // namespace mks
