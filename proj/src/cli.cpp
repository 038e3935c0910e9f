#include "boxfuse/cli.hpp"

#include "boxfuse/config.hpp"
#include "boxfuse/error.hpp"
#include "boxfuse/evaluation.hpp"
#include "boxfuse/parallel.hpp"
#include "boxfuse/pipeline.hpp"
#include "boxfuse/scene_io.hpp"
#include "boxfuse/superpoints.hpp"
#include "boxfuse/synthetic.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <iostream>
#include <optional>
#include <sstream>

namespace boxfuse {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
T to_number(const std::string& flag, std::string_view text) {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw UsageError(flag + ": cannot parse '" + std::string(text) + "'");
    return v;
}

// "A..B" -> (A, B)
std::pair<int, int> parse_range(const std::string& flag, const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw UsageError(flag + ": expected A..B, got '" + text + "'");
    return {to_number<int>(flag, std::string_view(text).substr(0, dots)),
            to_number<int>(flag, std::string_view(text).substr(dots + 2))};
}

// "WxH" -> (W, H)
std::pair<int, int> parse_size(const std::string& flag, const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) throw UsageError(flag + ": expected WxH, got '" + text + "'");
    return {to_number<int>(flag, std::string_view(text).substr(0, x)),
            to_number<int>(flag, std::string_view(text).substr(x + 1))};
}

std::set<int> parse_class_list(const std::string& flag, const std::string& text) {
    std::set<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.insert(to_number<int>(flag, item));
    }
    if (out.empty()) throw UsageError(flag + ": empty class list");
    return out;
}

struct ConfigFlags {
    std::string config_path;
    std::vector<std::string> sets;
    int threads = -1;
    std::optional<double> depth_scale;
    bool invert_extrinsics = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value configuration file");
        cmd->add_option("--set", sets, "override one key (key=value), repeatable");
        cmd->add_option("--threads", threads, "worker threads (0 = auto)");
        cmd->add_option("--depth-scale", depth_scale, "raw depth PNG units per meter");
        cmd->add_flag("--invert-extrinsics", invert_extrinsics, "extrinsic files hold camera-to-world poses");
    }

    PipelineConfig resolve() const {
        PipelineConfig c;
        if (!config_path.empty()) c = load_config(config_path, c);
        for (const auto& s : sets) apply_assignment(c, s);
        if (threads >= 0) c.threads = static_cast<unsigned>(threads);
        if (depth_scale) c.depth_scale = *depth_scale;
        if (invert_extrinsics) c.invert_extrinsics = true;
        validate(c);
        return c;
    }
};

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"box-guided 3D instance segmentation fusion", "boxfuse"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run the fusion pipeline on a scene directory");
    std::string run_scene, run_out, run_timing, run_debug, run_superpoints;
    bool print_config = false;
    ConfigFlags run_cfg;
    run->add_option("scene_dir", run_scene, "scene directory")->required();
    run->add_option("--out", run_out, "output instances (default <scene_dir>/instances.jsonl)");
    run->add_option("--timing", run_timing, "stage timing report (JSON)");
    run->add_option("--debug-dir", run_debug, "merge-event log and label-map dumps");
    run->add_option("--superpoints", run_superpoints, "precomputed superpoint file (skips segmentation)");
    run->add_flag("--print-config", print_config, "print the resolved configuration and exit");
    run_cfg.add_to(run);

    // superpoints
    auto* sp = app.add_subcommand("superpoints", "compute and cache the superpoint partition");
    std::string sp_scene, sp_out;
    ConfigFlags sp_cfg;
    sp->add_option("scene_dir", sp_scene, "scene directory")->required();
    sp->add_option("--out", sp_out, "output path (one segment id per line)")->required();
    sp_cfg.add_to(sp);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene directory");
    std::string objects = "5..10", size = "320x240", synth_out;
    SynthSpec spec;
    synth->add_option("--objects", objects, "object count range A..B");
    synth->add_option("--frames", spec.frame_count, "frame count");
    synth->add_option("--size", size, "image size WxH");
    synth->add_option("--seed", spec.seed, "random seed");
    synth->add_option("--withhold-fraction", spec.withhold_fraction, "fraction of objects missing from masks.txt");
    synth->add_option("--jitter", spec.jitter_px, "uniform box-corner jitter in pixels");
    synth->add_option("--room-extent", spec.room_extent, "floor side length in meters");
    synth->add_option("--density", spec.point_density, "surface points per square meter");
    synth->add_option("--out", synth_out, "output directory")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "score predictions against ground truth");
    std::string pred_path, gt_path, classes, report_path;
    ev->add_option("--pred", pred_path, "predicted instances (JSON Lines)")->required();
    ev->add_option("--gt", gt_path, "ground truth text file")->required();
    ev->add_option("--classes", classes, "comma-separated class subset");
    ev->add_option("--out", report_path, "report path (JSON)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*run) {
            const PipelineConfig config = run_cfg.resolve();
            if (print_config) {
                out << serialize_config(config);
                return 0;
            }
            RunOptions opts;
            opts.output = run_out.empty() ? std::filesystem::path(run_scene) / "instances.jsonl"
                                          : std::filesystem::path(run_out);
            if (!run_timing.empty()) opts.timing = run_timing;
            if (!run_debug.empty()) opts.debug_dir = run_debug;
            if (!run_superpoints.empty()) opts.superpoints = run_superpoints;
            const PipelineResult r = run_pipeline(run_scene, config, opts);
            out << r.instances.size() << " instances -> " << opts.output->string() << " (" << r.total_seconds
                << " s)\n";
        } else if (*sp) {
            const PipelineConfig config = sp_cfg.resolve();
            const ScenePointCloud cloud = load_point_cloud(std::filesystem::path(sp_scene) / "cloud.ply");
            validate(cloud);
            SuperpointParams params;
            params.granularity = config.sp_granularity;
            params.k = static_cast<std::size_t>(config.sp_k);
            params.min_segment_size = static_cast<std::size_t>(config.sp_min_size);
            const auto partition = compute_superpoints(cloud, params, resolve_thread_count(config.threads));
            write_superpoints(sp_out, partition);
            out << partition.segment_count() << " superpoints over " << cloud.size() << " points -> " << sp_out
                << '\n';
        } else if (*synth) {
            std::tie(spec.min_objects, spec.max_objects) = parse_range("--objects", objects);
            std::tie(spec.width, spec.height) = parse_size("--size", size);
            const SyntheticScene scene = generate_synthetic_scene(spec);
            write_scene(scene, synth_out);
            out << scene.objects.size() << " objects, " << scene.cloud.size() << " points, "
                << scene.frames.size() << " frames -> " << synth_out << '\n';
        } else if (*ev) {
            std::optional<std::set<int>> subset;
            if (!classes.empty()) subset = parse_class_list("--classes", classes);
            const GroundTruth gt = load_ground_truth(gt_path);
            const auto preds = load_labeled_instances(pred_path);
            for (const auto& p : preds)
                if (!p.mask.empty() && p.mask.indices().back() >= gt.n_points)
                    throw Error(ErrorKind::IndexOutOfRange, pred_path + ": mask index beyond ground-truth point count");
            const APReport report = compute_map_suite(preds, gt.instances, subset);
            if (!report_path.empty()) write_report(report, report_path);
            out << "mAP " << report.map_50_95 << "  mAP50 " << report.map_50 << "  mAP25 " << report.map_25
                << '\n';
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::InvalidConfig ? 1 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace boxfuse
