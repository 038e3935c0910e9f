#pragma once

#include "boxfuse/geometry.hpp"
#include "boxfuse/proposal_fusion.hpp"
#include "boxfuse/types.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace boxfuse {

/// Per-frame image of prompt class ids; -1 where no box applies.
struct LabelMap {
    static constexpr int kNoLabel = -1;

    int width = 0;
    int height = 0;
    std::vector<int> labels;

    LabelMap() = default;
    LabelMap(int w, int h) : width(w), height(h), labels(static_cast<std::size_t>(w) * h, kNoLabel) {}

    int at(int u, int v) const { return labels[static_cast<std::size_t>(v) * width + u]; }
    int& at(int u, int v) { return labels[static_cast<std::size_t>(v) * width + u]; }
};

/// Paints boxes from largest to smallest area so smaller boxes win. Equal
/// areas paint in input order, so the later box wins.
LabelMap build_label_map(std::span<const DetectionBox> boxes, int width, int height);

std::vector<LabelMap> build_label_maps(const DetectionsByFrame& detections, const FrameSet& frames,
                                       unsigned threads = 1);

/// Writes class_id + 1 as a 16-bit PNG (unlabelled pixels become 0).
void write_label_map_png(const LabelMap& map, const std::filesystem::path& path);

/// Up to k frame positions with the most visible mask points (score > 0),
/// ties to the lower position.
std::vector<std::size_t> select_topk_frames(const BinaryMask3D& mask, const VisibilityMatrices& vis, std::size_t k);

struct ClassDistribution {
    std::map<int, std::size_t> counts;
    std::size_t total_labeled = 0;
    std::size_t total_sampled = 0;

    friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;
};

/// Samples the label map at the rounded pixel of every visible mask point in
/// the given frames.
ClassDistribution aggregate_distribution(const BinaryMask3D& mask, const ProjectedPoints& proj,
                                         const VisibilityMatrices& vis, std::span<const LabelMap> label_maps,
                                         std::span<const std::size_t> topk);

/// Majority class (ties to the lower id) with confidence count/total_sampled.
/// Proposals without any labelled sample are dropped.
std::vector<LabeledInstance> assign_labels(std::span<const Proposal> proposals,
                                           std::span<const ClassDistribution> distributions);

/// Top-k selection and aggregation for every proposal, in parallel.
std::vector<ClassDistribution> classify_distributions(std::span<const Proposal> proposals,
                                                      const ProjectedPoints& proj, const VisibilityMatrices& vis,
                                                      std::span<const LabelMap> label_maps, std::size_t top_k,
                                                      unsigned threads = 1);

}  // namespace boxfuse
