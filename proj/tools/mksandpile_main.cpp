#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mks/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config;
  int resolution = 0;
  int samples = 0;
  std::string out;
  long long seed = -1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("config", o.config, "config file or preset name")->required();
  cmd->add_option("--resolution", o.resolution, "grid nodes per unit length");
  cmd->add_option("--samples", o.samples, "boundary sample count");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "seed for randomized property checks");
  cmd->add_flag("--quiet", o.quiet, "suppress progress output");
}

int run_stage(const CommonOpts& o, mks::Stage stage) {
  try {
    mks::Scenario sc =
        mks::load_scenario(o.config, o.resolution, o.samples, o.out, o.seed);
    mks::PipelineResult res = mks::run_pipeline(sc, stage, o.quiet);
    if (!o.quiet) {
      if (res.exit_code == 2)
        std::cout << "datum incompatible with (H4): margin " << res.datum.h4_margin
                  << " at sample pair (" << res.datum.h4_worst_pair.first << ", "
                  << res.datum.h4_worst_pair.second << ")\n";
      else if (res.exit_code == 3)
        std::cout << "numerical failure flags set\n";
      else if (res.diagnosis)
        std::cout << "t_measure=" << res.diagnosis->t_measure
                  << " v_unique=" << (res.diagnosis->v_unique ? "true" : "false")
                  << " u_unique=" << (res.diagnosis->u_unique ? "true" : "false") << "\n";
    }
    return res.exit_code;
  } catch (const mks::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monge-Kantorovich sandpile solver: maximal/minimal profiles, transport "
               "density, singular sets and uniqueness diagnosis on 2-D polygonal domains"};
  app.require_subcommand(1);

  CommonOpts vo, so, do_, ro;
  CLI::App* validate = app.add_subcommand("validate", "check the boundary datum against (H4)");
  add_common(validate, vo);
  CLI::App* solve = app.add_subcommand("solve", "solve u_phi, u_f, v_f and export CSV fields");
  add_common(solve, so);
  CLI::App* diagnose =
      app.add_subcommand("diagnose", "solve plus singular sets and the uniqueness diagnosis");
  add_common(diagnose, do_);
  CLI::App* render = app.add_subcommand("render", "full pipeline plus the SVG scene");
  add_common(render, ro);

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return run_stage(vo, mks::Stage::Validate);
  if (solve->parsed()) return run_stage(so, mks::Stage::Solve);
  if (diagnose->parsed()) return run_stage(do_, mks::Stage::Diagnose);
  if (render->parsed()) return run_stage(ro, mks::Stage::Render);
  return 1;
}
