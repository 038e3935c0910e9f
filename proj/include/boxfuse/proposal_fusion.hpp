#pragma once

#include "boxfuse/geometry.hpp"
#include "boxfuse/superpoints.hpp"
#include "boxfuse/types.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace boxfuse {

/// Superpoints assigned to one lifted detection, with their cached point union.
struct CoarseMask {
    std::vector<std::uint32_t> superpoint_ids;  // sorted
    int class_id = 0;
    BinaryMask3D point_set;
    int source_frame = 0;
};

/// Builds a coarse mask whose point set is the exact union of the superpoints.
CoarseMask make_coarse_mask(std::vector<std::uint32_t> superpoint_ids, const SuperpointPartition& partition,
                            int class_id, int source_frame);

/// RGBD-based candidates in insertion order.
struct CandidateSet {
    std::vector<CoarseMask> candidates;
};

struct ClassedBox3D {
    OrientedBox3D box;
    int class_id = 0;
};

/// True iff some point mask has at least tau_box of its points inside the box.
bool is_redundant_box(const OrientedBox3D& box, std::span<const BinaryMask3D> point_masks,
                      const ScenePointCloud& cloud, double tau_box);

/// Drops every box that is redundant with a point mask; survivors keep their order.
std::vector<ClassedBox3D> filter_redundant_boxes(std::span<const ClassedBox3D> boxes,
                                                 std::span<const BinaryMask3D> point_masks,
                                                 const ScenePointCloud& cloud, double tau_box);

/// Superpoints with at least tau_spp of their points inside the box; nullopt
/// when none qualifies.
std::optional<CoarseMask> assign_superpoints(const OrientedBox3D& box, const SuperpointPartition& partition,
                                             const ScenePointCloud& cloud, double tau_spp, int class_id = 0,
                                             int source_frame = 0);

enum class MergeAction { Seed, Merge, Append };

struct MergeEvent {
    std::size_t step = 0;
    int frame_id = 0;
    MergeAction action = MergeAction::Seed;
    std::size_t candidate_index = 0;
    double best_iou = 0;
    const CoarseMask* candidate = nullptr;  // state after the step
};

using MergeObserver = std::function<void(const MergeEvent&)>;

/// Sequential cross-frame merge. The first list seeds the set; every later
/// coarse mask joins the same-class candidate with the highest point-set IoU
/// (lowest index on ties) when that IoU reaches tau_merge, else is appended.
CandidateSet merge_coarse_masks(const std::vector<std::vector<CoarseMask>>& per_frame, double tau_merge,
                                const MergeObserver& observer = {});

/// Keeps candidates whose IoU with every point mask is at most tau_filter.
std::vector<CoarseMask> filter_rgbd_masks(const CandidateSet& candidates, std::span<const BinaryMask3D> point_masks,
                                          double tau_filter);

struct Proposal {
    BinaryMask3D mask;
    ProposalSource source = ProposalSource::PointBased;
    std::optional<int> detector_class;
};

/// Point-based masks first, then the surviving RGBD masks, each in order.
std::vector<Proposal> fuse_proposals(std::span<const BinaryMask3D> point_masks, std::span<const CoarseMask> rgbd_masks);

struct FusionParams {
    double tau_box = 0.75;
    double tau_spp = 0.5;
    double tau_merge = 0.25;
    double tau_filter = 0.75;
    int pixel_stride = 5;
    std::size_t min_lift_points = 10;
};

struct FusionStats {
    std::size_t boxes = 0;
    std::size_t boxes_too_sparse = 0;
    std::size_t boxes_redundant = 0;
    std::size_t coarse_masks = 0;
    std::size_t candidates = 0;
    std::size_t surviving = 0;
};

/// Lift, fit, filter and assign every detection, then merge and filter.
/// Per-box work runs in parallel; results are gathered in (frame, detection)
/// order before the sequential merge.
std::vector<CoarseMask> generate_rgbd_masks(const ScenePointCloud& cloud, const FrameSet& frames,
                                            const DetectionsByFrame& detections, const SuperpointPartition& partition,
                                            std::span<const BinaryMask3D> point_masks, const FusionParams& params,
                                            unsigned threads = 1, FusionStats* stats = nullptr,
                                            const MergeObserver& observer = {});

}  // namespace boxfuse
