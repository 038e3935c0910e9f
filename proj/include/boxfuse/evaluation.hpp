#pragma once

#include "boxfuse/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace boxfuse {

struct GroundTruthInstance {
    BinaryMask3D mask;
    int class_id = 0;

    friend bool operator==(const GroundTruthInstance&, const GroundTruthInstance&) = default;
};

struct GroundTruth {
    std::size_t n_points = 0;
    std::vector<GroundTruthInstance> instances;
};

/// Header `n_instances n_points`, then `class_id i0 i1 ...` per instance.
GroundTruth load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> coco_thresholds();

/// Average precision for one class at one IoU threshold. Predictions are
/// ranked by output order (confidence descending, deterministic ties); each
/// one greedily claims the unmatched same-class ground truth with the highest
/// IoU at or above the threshold. Precision is made non-increasing from the
/// right and integrated over every recall step. Returns nullopt when the class
/// has no ground truth.
std::optional<double> compute_ap(std::span<const LabeledInstance> predictions,
                                 std::span<const GroundTruthInstance> gt, int class_id, double iou_threshold);

struct APReport {
    double map_50_95 = 0;
    double map_50 = 0;
    double map_25 = 0;
    std::vector<int> classes;
    /// Thresholds matching each per_class_ap entry: 0.25 then 0.50 ... 0.95.
    std::vector<double> thresholds;
    std::map<int, std::vector<double>> per_class_ap;
};

/// Means are taken over the ground-truth classes (intersected with
/// class_subset when given); classes without ground truth are skipped.
APReport compute_map_suite(std::span<const LabeledInstance> predictions, std::span<const GroundTruthInstance> gt,
                           const std::optional<std::set<int>>& class_subset = std::nullopt);

nlohmann::json to_json(const APReport& report);
void write_report(const APReport& report, const std::filesystem::path& path);

}  // namespace boxfuse
