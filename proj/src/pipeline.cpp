#include "boxfuse/pipeline.hpp"

#include "boxfuse/error.hpp"
#include "boxfuse/geometry.hpp"
#include "boxfuse/mask_classify.hpp"
#include "boxfuse/parallel.hpp"
#include "boxfuse/proposal_fusion.hpp"
#include "boxfuse/scene_io.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>

namespace boxfuse {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs one stage, records its wall time and tags escaping errors with its name.
template <typename Fn>
auto timed_stage(std::vector<StageTiming>& stages, const std::string& name, Fn&& fn) {
    stages.push_back({name, 0.0, {}});
    const auto t0 = Clock::now();
    try {
        if constexpr (std::is_void_v<decltype(fn(stages.back()))>) {
            fn(stages.back());
            stages.back().seconds = seconds_since(t0);
        } else {
            auto out = fn(stages.back());
            stages.back().seconds = seconds_since(t0);
            return out;
        }
    } catch (const Error& e) {
        throw Error(e.kind(), "stage '" + name + "': " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error("stage '" + name + "': " + e.what());
    }
}

const char* to_string(MergeAction a) {
    switch (a) {
        case MergeAction::Seed: return "seed";
        case MergeAction::Merge: return "merge";
        case MergeAction::Append: return "append";
    }
    return "?";
}

}  // namespace

SceneInputs load_scene_inputs(const std::filesystem::path& scene_dir, const PipelineConfig& config,
                              const std::optional<std::filesystem::path>& superpoints) {
    validate(config);
    SceneInputs in;
    in.cloud = load_point_cloud(scene_dir / "cloud.ply");
    validate(in.cloud);
    FrameLoadOptions opts;
    opts.stride = config.frame_stride;
    opts.depth_scale = config.depth_scale;
    opts.invert_extrinsics = config.invert_extrinsics;
    opts.threads = resolve_thread_count(config.threads);
    in.frames = load_frames(scene_dir / "frames", opts);
    const auto boxes = read_detections(scene_dir / "detections.jsonl");
    in.detections = assemble_detections(boxes, in.frames);
    in.point_masks = load_masks(scene_dir / "masks.txt", in.cloud.size());
    if (superpoints)
        in.superpoints = load_superpoints(*superpoints, in.cloud.size());
    else if (std::filesystem::exists(scene_dir / "superpoints.txt"))
        in.superpoints = load_superpoints(scene_dir / "superpoints.txt", in.cloud.size());
    return in;
}

nlohmann::json timing_json(const PipelineResult& result, bool include_times) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : result.stages) {
        nlohmann::json j = {{"name", s.name}, {"counts", s.counts}};
        if (include_times) j["seconds"] = s.seconds;
        stages.push_back(std::move(j));
    }
    nlohmann::json out = {{"stages", stages}, {"instances", result.instances.size()}};
    if (include_times) {
        double sum = 0;
        for (const auto& s : result.stages) sum += s.seconds;
        out["stage_seconds_sum"] = sum;
        out["total_seconds"] = result.total_seconds;
        out["threads"] = result.threads;
    }
    return out;
}

PipelineResult run_pipeline(const SceneInputs& in, const PipelineConfig& config,
                            const std::optional<std::filesystem::path>& debug_dir) {
    validate(config);
    const auto t_start = Clock::now();
    PipelineResult result;
    result.threads = resolve_thread_count(config.threads);
    const unsigned threads = result.threads;
    auto& stages = result.stages;

    const SuperpointPartition partition = timed_stage(stages, "superpoints", [&](StageTiming& st) {
        SuperpointPartition p;
        if (in.superpoints) {
            if (in.superpoints->segment_of.size() != in.cloud.size())
                throw Error(ErrorKind::HeaderMismatch, "superpoint cache does not match the cloud size");
            p = *in.superpoints;
            st.counts["cached"] = 1;
        } else {
            SuperpointParams sp;
            sp.granularity = config.sp_granularity;
            sp.k = static_cast<std::size_t>(config.sp_k);
            sp.min_segment_size = static_cast<std::size_t>(config.sp_min_size);
            p = compute_superpoints(in.cloud, sp, threads);
            st.counts["cached"] = 0;
        }
        st.counts["points"] = in.cloud.size();
        st.counts["superpoints"] = p.segment_count();
        return p;
    });

    ProjectedPoints proj;
    VisibilityMatrices vis;
    timed_stage(stages, "project_visibility", [&](StageTiming& st) {
        proj = project_all(in.cloud, in.frames, threads);
        vis = compute_visibility(proj, in.frames, config.tau_depth, threads);
        st.counts["frames"] = in.frames.size();
        std::size_t visible = 0;
        for (std::size_t f = 0; f < in.frames.size(); ++f)
            for (std::size_t p = 0; p < in.cloud.size(); ++p) visible += vis.visible(f, p) ? 1 : 0;
        st.counts["visible_entries"] = visible;
    });

    const std::vector<LabelMap> label_maps = timed_stage(stages, "label_maps", [&](StageTiming& st) {
        std::size_t boxes = 0;
        for (const auto& d : in.detections) boxes += d.size();
        st.counts["boxes"] = boxes;
        return build_label_maps(in.detections, in.frames, threads);
    });

    std::vector<std::string> merge_log;
    const std::vector<CoarseMask> rgbd = timed_stage(stages, "rgbd_masks", [&](StageTiming& st) {
        FusionParams fp;
        fp.tau_box = config.tau_box;
        fp.tau_spp = config.tau_spp;
        fp.tau_merge = config.tau_merge;
        fp.tau_filter = config.tau_filter;
        fp.pixel_stride = config.pixel_stride;
        fp.min_lift_points = config.min_lift_points;
        MergeObserver observer;
        if (debug_dir) {
            observer = [&](const MergeEvent& e) {
                nlohmann::json j = {{"step", e.step},
                                    {"frame_id", e.frame_id},
                                    {"action", to_string(e.action)},
                                    {"candidate", e.candidate_index},
                                    {"best_iou", e.best_iou},
                                    {"points", e.candidate ? e.candidate->point_set.size() : 0}};
                merge_log.push_back(j.dump());
            };
        }
        FusionStats stats;
        auto out = generate_rgbd_masks(in.cloud, in.frames, in.detections, partition, in.point_masks, fp, threads,
                                       &stats, observer);
        st.counts["boxes"] = stats.boxes;
        st.counts["boxes_too_sparse"] = stats.boxes_too_sparse;
        st.counts["boxes_redundant"] = stats.boxes_redundant;
        st.counts["coarse_masks"] = stats.coarse_masks;
        st.counts["candidates"] = stats.candidates;
        st.counts["surviving"] = stats.surviving;
        return out;
    });

    const std::vector<Proposal> proposals = timed_stage(stages, "fuse", [&](StageTiming& st) {
        auto out = fuse_proposals(in.point_masks, rgbd);
        st.counts["point_masks"] = in.point_masks.size();
        st.counts["rgbd_masks"] = rgbd.size();
        return out;
    });

    result.instances = timed_stage(stages, "classify", [&](StageTiming& st) {
        const auto dists = classify_distributions(proposals, proj, vis, label_maps,
                                                  static_cast<std::size_t>(config.top_k), threads);
        auto out = assign_labels(proposals, dists);
        sort_for_output(out);
        st.counts["proposals"] = proposals.size();
        st.counts["labeled"] = out.size();
        return out;
    });

    if (debug_dir) {
        timed_stage(stages, "debug_dump", [&](StageTiming& st) {
            std::filesystem::create_directories(*debug_dir);
            std::ofstream log(*debug_dir / "merge_events.jsonl");
            if (!log) throw Error(ErrorKind::IoFailure, "cannot write merge_events.jsonl");
            for (const auto& line : merge_log) log << line << '\n';
            for (std::size_t f = 0; f < label_maps.size(); ++f)
                write_label_map_png(label_maps[f],
                                    *debug_dir / (std::to_string(in.frames.frames[f].frame_id) + ".labels.png"));
            st.counts["merge_events"] = merge_log.size();
            st.counts["label_maps"] = label_maps.size();
        });
    }

    result.total_seconds = seconds_since(t_start);
    return result;
}

PipelineResult run_pipeline(const std::filesystem::path& scene_dir, const PipelineConfig& config,
                            const RunOptions& options) {
    validate(config);
    const auto t_start = Clock::now();
    std::vector<StageTiming> load_stage;
    const SceneInputs inputs = timed_stage(load_stage, "load", [&](StageTiming& st) {
        auto in = load_scene_inputs(scene_dir, config, options.superpoints);
        st.counts["points"] = in.cloud.size();
        st.counts["frames"] = in.frames.size();
        st.counts["point_masks"] = in.point_masks.size();
        return in;
    });

    PipelineResult result = run_pipeline(inputs, config, options.debug_dir);
    result.stages.insert(result.stages.begin(), load_stage.front());

    if (options.output) {
        timed_stage(result.stages, "save", [&](StageTiming& st) {
            save_labeled_instances(result.instances, *options.output);
            st.counts["instances"] = result.instances.size();
        });
    }
    result.total_seconds = seconds_since(t_start);
    if (options.timing) {
        std::ofstream out(*options.timing);
        if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + options.timing->string());
        out << timing_json(result).dump(2) << '\n';
    }
    return result;
}

}  // namespace boxfuse
