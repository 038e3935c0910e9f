#include "boxfuse/proposal_fusion.hpp"

#include "boxfuse/parallel.hpp"

#include <algorithm>

namespace boxfuse {

namespace {

double fraction_inside(const std::vector<std::uint8_t>& flags, std::span<const PointIndex> indices) {
    if (indices.empty()) return 0.0;
    std::size_t inside = 0;
    for (PointIndex p : indices) inside += flags[p];
    return static_cast<double>(inside) / static_cast<double>(indices.size());
}

bool redundant_given_flags(const std::vector<std::uint8_t>& flags, std::span<const BinaryMask3D> point_masks,
                           double tau_box) {
    return std::any_of(point_masks.begin(), point_masks.end(),
                       [&](const BinaryMask3D& m) { return fraction_inside(flags, m.indices()) >= tau_box; });
}

std::optional<CoarseMask> assign_given_flags(const std::vector<std::uint8_t>& flags,
                                             const SuperpointPartition& partition, double tau_spp, int class_id,
                                             int source_frame) {
    std::vector<std::uint32_t> ids;
    for (std::size_t s = 0; s < partition.segment_count(); ++s)
        if (fraction_inside(flags, partition.members[s]) >= tau_spp) ids.push_back(static_cast<std::uint32_t>(s));
    if (ids.empty()) return std::nullopt;
    return make_coarse_mask(std::move(ids), partition, class_id, source_frame);
}

}  // namespace

CoarseMask make_coarse_mask(std::vector<std::uint32_t> superpoint_ids, const SuperpointPartition& partition,
                            int class_id, int source_frame) {
    std::sort(superpoint_ids.begin(), superpoint_ids.end());
    superpoint_ids.erase(std::unique(superpoint_ids.begin(), superpoint_ids.end()), superpoint_ids.end());
    std::vector<PointIndex> points;
    for (std::uint32_t s : superpoint_ids)
        points.insert(points.end(), partition.members.at(s).begin(), partition.members.at(s).end());
    CoarseMask mask;
    mask.superpoint_ids = std::move(superpoint_ids);
    mask.class_id = class_id;
    mask.point_set = BinaryMask3D::from_unsorted(std::move(points));
    mask.source_frame = source_frame;
    return mask;
}

bool is_redundant_box(const OrientedBox3D& box, std::span<const BinaryMask3D> point_masks,
                      const ScenePointCloud& cloud, double tau_box) {
    return std::any_of(point_masks.begin(), point_masks.end(), [&](const BinaryMask3D& m) {
        return points_in_box_fraction(box, cloud, m) >= tau_box;
    });
}

std::vector<ClassedBox3D> filter_redundant_boxes(std::span<const ClassedBox3D> boxes,
                                                 std::span<const BinaryMask3D> point_masks,
                                                 const ScenePointCloud& cloud, double tau_box) {
    std::vector<ClassedBox3D> kept;
    for (const ClassedBox3D& b : boxes)
        if (!is_redundant_box(b.box, point_masks, cloud, tau_box)) kept.push_back(b);
    return kept;
}

std::optional<CoarseMask> assign_superpoints(const OrientedBox3D& box, const SuperpointPartition& partition,
                                             const ScenePointCloud& cloud, double tau_spp, int class_id,
                                             int source_frame) {
    return assign_given_flags(containment_flags(box, cloud), partition, tau_spp, class_id, source_frame);
}

CandidateSet merge_coarse_masks(const std::vector<std::vector<CoarseMask>>& per_frame, double tau_merge,
                                const MergeObserver& observer) {
    CandidateSet set;
    std::size_t step = 0;
    for (std::size_t f = 0; f < per_frame.size(); ++f) {
        for (const CoarseMask& mask : per_frame[f]) {
            MergeEvent event;
            event.step = step++;
            event.frame_id = mask.source_frame;
            if (f == 0) {
                set.candidates.push_back(mask);
                event.action = MergeAction::Seed;
                event.candidate_index = set.candidates.size() - 1;
                event.best_iou = 0;
            } else {
                std::optional<std::size_t> best;
                double best_iou = -1.0;
                for (std::size_t c = 0; c < set.candidates.size(); ++c) {
                    const CoarseMask& cand = set.candidates[c];
                    if (cand.class_id != mask.class_id) continue;
                    const double iou = mask_iou(cand.point_set, mask.point_set);
                    if (iou > best_iou) {
                        best_iou = iou;
                        best = c;
                    }
                }
                if (best && best_iou >= tau_merge) {
                    CoarseMask& cand = set.candidates[*best];
                    std::vector<std::uint32_t> ids;
                    std::set_union(cand.superpoint_ids.begin(), cand.superpoint_ids.end(),
                                   mask.superpoint_ids.begin(), mask.superpoint_ids.end(), std::back_inserter(ids));
                    cand.superpoint_ids = std::move(ids);
                    cand.point_set = unite(cand.point_set, mask.point_set);
                    event.action = MergeAction::Merge;
                    event.candidate_index = *best;
                } else {
                    set.candidates.push_back(mask);
                    event.action = MergeAction::Append;
                    event.candidate_index = set.candidates.size() - 1;
                }
                event.best_iou = std::max(best_iou, 0.0);
            }
            if (observer) {
                event.candidate = &set.candidates[event.candidate_index];
                observer(event);
            }
        }
    }
    return set;
}

std::vector<CoarseMask> filter_rgbd_masks(const CandidateSet& candidates, std::span<const BinaryMask3D> point_masks,
                                          double tau_filter) {
    std::vector<CoarseMask> kept;
    for (const CoarseMask& c : candidates.candidates) {
        const bool overlaps = std::any_of(point_masks.begin(), point_masks.end(), [&](const BinaryMask3D& m) {
            return mask_iou(c.point_set, m) > tau_filter;
        });
        if (!overlaps) kept.push_back(c);
    }
    return kept;
}

std::vector<Proposal> fuse_proposals(std::span<const BinaryMask3D> point_masks, std::span<const CoarseMask> rgbd_masks) {
    std::vector<Proposal> out;
    out.reserve(point_masks.size() + rgbd_masks.size());
    for (const BinaryMask3D& m : point_masks) out.push_back({m, ProposalSource::PointBased, std::nullopt});
    for (const CoarseMask& c : rgbd_masks) out.push_back({c.point_set, ProposalSource::RGBDBased, c.class_id});
    return out;
}

std::vector<CoarseMask> generate_rgbd_masks(const ScenePointCloud& cloud, const FrameSet& frames,
                                            const DetectionsByFrame& detections, const SuperpointPartition& partition,
                                            std::span<const BinaryMask3D> point_masks, const FusionParams& params,
                                            unsigned threads, FusionStats* stats, const MergeObserver& observer) {
    struct WorkItem {
        std::size_t frame_pos;
        std::size_t det_index;
    };
    std::vector<WorkItem> items;
    for (std::size_t f = 0; f < detections.size(); ++f)
        for (std::size_t d = 0; d < detections[f].size(); ++d) items.push_back({f, d});

    enum class Outcome { TooSparse, Redundant, NoSuperpoint, Coarse };
    std::vector<Outcome> outcomes(items.size(), Outcome::TooSparse);
    std::vector<std::optional<CoarseMask>> results(items.size());

    parallel_for(items.size(), threads, [&](std::size_t i) {
        const Frame& frame = frames.frames[items[i].frame_pos];
        const DetectionBox& det = detections[items[i].frame_pos][items[i].det_index];
        const std::vector<Vec3> lifted = try_lift_box_pixels(det, frame, params.pixel_stride);
        if (lifted.size() < params.min_lift_points) return;
        const OrientedBox3D box = fit_oriented_box(lifted);
        const std::vector<std::uint8_t> flags = containment_flags(box, cloud);
        if (redundant_given_flags(flags, point_masks, params.tau_box)) {
            outcomes[i] = Outcome::Redundant;
            return;
        }
        results[i] = assign_given_flags(flags, partition, params.tau_spp, det.class_id, frame.frame_id);
        outcomes[i] = results[i] ? Outcome::Coarse : Outcome::NoSuperpoint;
    });

    std::vector<std::vector<CoarseMask>> per_frame(detections.size());
    for (std::size_t i = 0; i < items.size(); ++i)
        if (results[i]) per_frame[items[i].frame_pos].push_back(std::move(*results[i]));

    const CandidateSet merged = merge_coarse_masks(per_frame, params.tau_merge, observer);
    std::vector<CoarseMask> kept = filter_rgbd_masks(merged, point_masks, params.tau_filter);

    if (stats) {
        *stats = {};
        stats->boxes = items.size();
        for (Outcome o : outcomes) {
            if (o == Outcome::TooSparse) ++stats->boxes_too_sparse;
            if (o == Outcome::Redundant) ++stats->boxes_redundant;
            if (o == Outcome::Coarse) ++stats->coarse_masks;
        }
        stats->candidates = merged.candidates.size();
        stats->surviving = kept.size();
    }
    return kept;
}

}  // namespace boxfuse
