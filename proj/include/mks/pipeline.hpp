#pragma once

#include <optional>
#include <string>

#include "mks/config.hpp"
#include "mks/io.hpp"
#include "mks/transport.hpp"

namespace mks {

enum class Stage { Validate = 0, Solve = 1, Diagnose = 2, Render = 3 };

// exit codes: 0 ok, 2 datum incompatible with (H4), 3 numerical failure
struct PipelineResult {
  int exit_code = 0;
  DatumReport datum;
  std::optional<LaxHopfSolution> uphi;
  std::optional<ScalarField> uf;
  std::optional<ScalarField> vf;
  std::optional<ScalarField> source_field;
  std::vector<uint8_t> support_mask;
  std::optional<SingularSets> sets;
  std::optional<RayField> rays;
  std::optional<DirectionField> direction;
  std::optional<Diagnosis> diagnosis;
  std::optional<WitnessResult> witness;
};

ScalarField build_source_field(const Frame& frame, const std::function<double(const Vec2&)>& src);
std::vector<uint8_t> build_support_mask(const Frame& frame,
                                        const std::function<double(const Vec2&)>& src);

nlohmann::json diagnosis_json(const Scenario& sc, const PipelineResult& result);

// Runs validate -> solve -> rays -> transport -> diagnose up to `stage`,
// writing artifacts into the scenario output directory.
PipelineResult run_pipeline(const Scenario& sc, Stage stage, bool quiet = false,
                            bool write_files = true);

}  // namespace mks
