#include "boxfuse/mask_classify.hpp"

#include "boxfuse/error.hpp"
#include "boxfuse/parallel.hpp"
#include "boxfuse/scene_io.hpp"

#include <algorithm>
#include <numeric>

namespace boxfuse {

LabelMap build_label_map(std::span<const DetectionBox> boxes, int width, int height) {
    LabelMap map(width, height);
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return boxes[a].area() > boxes[b].area(); });
    for (std::size_t i : order) {
        const PixelSpan span = pixel_span(boxes[i], width, height);
        for (int v = span.v_begin; v <= span.v_end; ++v)
            for (int u = span.u_begin; u <= span.u_end; ++u) map.at(u, v) = boxes[i].class_id;
    }
    return map;
}

std::vector<LabelMap> build_label_maps(const DetectionsByFrame& detections, const FrameSet& frames,
                                       unsigned threads) {
    std::vector<LabelMap> maps(frames.size());
    parallel_for(frames.size(), threads, [&](std::size_t f) {
        const CameraParams& cam = frames.frames[f].camera;
        maps[f] = f < detections.size() ? build_label_map(detections[f], cam.width, cam.height)
                                        : LabelMap(cam.width, cam.height);
    });
    return maps;
}

void write_label_map_png(const LabelMap& map, const std::filesystem::path& path) {
    std::vector<std::uint16_t> raw(map.labels.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<std::uint16_t>(std::clamp(map.labels[i] + 1, 0, 65535));
    write_u16_png(path, map.width, map.height, raw);
}

std::vector<std::size_t> select_topk_frames(const BinaryMask3D& mask, const VisibilityMatrices& vis, std::size_t k) {
    const std::size_t frames = vis.frame_vis.frame_count();
    std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, frame)
    for (std::size_t f = 0; f < frames; ++f) {
        std::size_t score = 0;
        for (PointIndex p : mask.indices()) score += vis.visible(f, p) ? 1 : 0;
        if (score > 0) scored.emplace_back(score, f);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].second);
    return out;
}

ClassDistribution aggregate_distribution(const BinaryMask3D& mask, const ProjectedPoints& proj,
                                         const VisibilityMatrices& vis, std::span<const LabelMap> label_maps,
                                         std::span<const std::size_t> topk) {
    ClassDistribution dist;
    for (std::size_t f : topk) {
        const LabelMap& map = label_maps[f];
        for (PointIndex p : mask.indices()) {
            if (!vis.visible(f, p)) continue;
            const std::size_t i = proj.at(f, p);
            const int label = map.at(sample_index(proj.pixel_x[i], map.width), sample_index(proj.pixel_y[i], map.height));
            ++dist.total_sampled;
            if (label >= 0) {
                ++dist.counts[label];
                ++dist.total_labeled;
            }
        }
    }
    return dist;
}

std::vector<LabeledInstance> assign_labels(std::span<const Proposal> proposals,
                                           std::span<const ClassDistribution> distributions) {
    if (proposals.size() != distributions.size())
        throw std::invalid_argument("one distribution per proposal is required");
    std::vector<LabeledInstance> out;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        const ClassDistribution& d = distributions[i];
        if (d.total_labeled == 0) continue;
        // std::map iterates class ids ascending, so strict > keeps the lowest id on ties.
        int best_class = -1;
        std::size_t best_count = 0;
        for (const auto& [cls, count] : d.counts) {
            if (count > best_count) {
                best_count = count;
                best_class = cls;
            }
        }
        LabeledInstance inst;
        inst.mask = proposals[i].mask;
        inst.class_id = best_class;
        inst.confidence = static_cast<double>(best_count) / static_cast<double>(d.total_sampled);
        inst.source = proposals[i].source;
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<ClassDistribution> classify_distributions(std::span<const Proposal> proposals,
                                                      const ProjectedPoints& proj, const VisibilityMatrices& vis,
                                                      std::span<const LabelMap> label_maps, std::size_t top_k,
                                                      unsigned threads) {
    std::vector<ClassDistribution> out(proposals.size());
    parallel_for(proposals.size(), threads, [&](std::size_t i) {
        const auto topk = select_topk_frames(proposals[i].mask, vis, top_k);
        out[i] = aggregate_distribution(proposals[i].mask, proj, vis, label_maps, topk);
    });
    return out;
}

}  // namespace boxfuse
