#pragma once

#include "boxfuse/config.hpp"
#include "boxfuse/superpoints.hpp"
#include "boxfuse/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace boxfuse {

/// Everything the pipeline reads from a scene directory:
///   cloud.ply, frames/, detections.jsonl, masks.txt and (optional) superpoints.txt
struct SceneInputs {
    ScenePointCloud cloud;
    FrameSet frames;
    DetectionsByFrame detections;
    std::vector<BinaryMask3D> point_masks;
    std::optional<SuperpointPartition> superpoints;
};

/// `superpoints` overrides <scene_dir>/superpoints.txt.
SceneInputs load_scene_inputs(const std::filesystem::path& scene_dir, const PipelineConfig& config,
                              const std::optional<std::filesystem::path>& superpoints = std::nullopt);

struct StageTiming {
    std::string name;
    double seconds = 0;
    std::map<std::string, std::size_t> counts;
};

struct PipelineResult {
    std::vector<LabeledInstance> instances;  // output order
    std::vector<StageTiming> stages;
    double total_seconds = 0;
    unsigned threads = 1;
};

/// Timing report. With `include_times` false the wall times are omitted, which
/// leaves a document that is identical across runs and thread counts.
nlohmann::json timing_json(const PipelineResult& result, bool include_times = true);

struct RunOptions {
    std::optional<std::filesystem::path> output;
    std::optional<std::filesystem::path> timing;
    /// Merge events (JSON Lines) and label-map PNGs land here when set.
    std::optional<std::filesystem::path> debug_dir;
    /// Superpoint cache to use instead of <scene_dir>/superpoints.txt.
    std::optional<std::filesystem::path> superpoints;
};

/// Stages after loading, on in-memory inputs. `debug_dir` as in RunOptions.
PipelineResult run_pipeline(const SceneInputs& inputs, const PipelineConfig& config,
                            const std::optional<std::filesystem::path>& debug_dir = std::nullopt);

/// Load, run and save. Outputs are only written once every stage succeeded.
/// Module errors are rethrown with the failing stage named.
PipelineResult run_pipeline(const std::filesystem::path& scene_dir, const PipelineConfig& config,
                            const RunOptions& options = {});

}  // namespace boxfuse
