#pragma once

#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "mks/lax_hopf.hpp"

namespace mks {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A fully expanded scenario: owned domain, body, datum/source evaluators and
// the solve frame. `effective` is the defaults-filled configuration echoed
// into diagnosis.json; loading it back reproduces the scenario.
struct Scenario {
  std::string name;
  std::shared_ptr<PolygonalDomain> domain;
  ConvexBody body = ConvexBody::ball(1.0);
  std::function<double(const Vec2&)> datum;
  std::function<double(const Vec2&)> source;
  Frame frame;
  int resolution = 128;
  int sample_count = 720;
  int max_cells = 296;
  uint64_t seed = 20260808;
  std::string output_dir = "out";
  nlohmann::json effective;
};

// Named whole-scenario presets (square-tray, hexagon-lens, annulus-sector,
// ellipse-foci, disk-homogeneous, l-shape).
bool is_scenario_preset(const std::string& name);
nlohmann::json scenario_preset(const std::string& name);
std::vector<std::string> scenario_preset_names();

// Parse a config document (defaults filled), then construct the scenario.
// Overrides <= 0 keep the config's values.
nlohmann::json parse_config_text(const std::string& text, const std::string& origin);
Scenario build_scenario(const nlohmann::json& config, int resolution_override = 0,
                        int samples_override = 0, const std::string& out_override = "",
                        int64_t seed_override = -1);

// Convenience: path to a config file, or a preset name.
Scenario load_scenario(const std::string& path_or_preset, int resolution_override = 0,
                       int samples_override = 0, const std::string& out_override = "",
                       int64_t seed_override = -1);

// Domain generators used by the presets (also reachable from explicit configs).
std::shared_ptr<PolygonalDomain> make_preset_domain(const nlohmann::json& spec);

}  // namespace mks
