#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "mf/app/commands.h"

int main(int argc, char** argv) {
  CLI::App app{"multifuse: multi-model RGB-D SLAM with synthetic scenes and evaluation"};
  app.require_subcommand(1);

  std::string script, dataset, out, results, dest, report;
  std::string mode = "motion";
  std::string config_file;
  uint64_t seed = 0;
  bool seed_set = false;

  CLI::App* render = app.add_subcommand("render", "render a scene script into a dataset");
  render->add_option("script", script, "scene script file")->required();
  render->add_option("out", out, "output dataset directory")->required();
  render->add_option("--seed", seed, "override the script's noise seed")
      ->each([&](const std::string&) { seed_set = true; });

  CLI::App* run = app.add_subcommand("run", "run the SLAM pipeline over a dataset");
  run->add_option("dataset", dataset, "dataset directory (from render)")->required();
  run->add_option("out", out, "results directory")->required();
  run->add_option("--mode", mode, "segmentation mode: motion|masks")
      ->check(CLI::IsMember({"motion", "masks"}));
  run->add_option("--config", config_file, "key=value pipeline configuration file");
  run->add_option("--seed", seed, "accepted for interface compatibility; the run is deterministic");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a run against its dataset");
  eval->add_option("results", results, "results directory (from run)")->required();
  eval->add_option("dataset", dataset, "dataset directory")->required();
  eval->add_option("--report", report, "report output path (default <results>/report.txt)");

  CLI::App* export_ply = app.add_subcommand("export-ply", "merge run models into one PLY");
  export_ply->add_option("results", results, "results directory (from run)")->required();
  export_ply->add_option("dest", dest, "output .ply path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (render->parsed())
      return mf::app::cmd_render(script, out,
                                 seed_set ? std::optional<uint64_t>(seed) : std::nullopt);
    if (run->parsed()) return mf::app::cmd_run(dataset, out, mode, config_file);
    if (eval->parsed()) return mf::app::cmd_eval(results, dataset, report);
    if (export_ply->parsed()) return mf::app::cmd_export_ply(results, dest);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
