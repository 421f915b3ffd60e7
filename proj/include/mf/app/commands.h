#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mf/pipeline/pipeline.h"

namespace mf::app {

/// Renders a scene script into a dataset directory. A seed override replaces
/// the script's noise seed.
int cmd_render(const std::filesystem::path& script, const std::filesystem::path& out,
               std::optional<uint64_t> seed);

/// Runs the SLAM pipeline over a dataset; mode is "motion" or "masks".
int cmd_run(const std::filesystem::path& dataset, const std::filesystem::path& out,
            const std::string& mode, const std::filesystem::path& config_file);

/// Computes ATE, IoU and reconstruction metrics of a run against its dataset;
/// writes a key=value report and prints a summary.
int cmd_eval(const std::filesystem::path& results, const std::filesystem::path& dataset,
             const std::filesystem::path& report);

/// Merges all exported model clouds of a run into one world-frame PLY.
int cmd_export_ply(const std::filesystem::path& results, const std::filesystem::path& dest);

/// key=value pipeline configuration (one entry per line, '#' comments).
PipelineConfig parse_pipeline_config(const std::filesystem::path& path);

}  // namespace mf::app
