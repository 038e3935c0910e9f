// Acceptance suite: one PASS/FAIL line per criterion.

#include "oracles.hpp"

#include "boxfuse/geometry.hpp"
#include "boxfuse/mask_classify.hpp"
#include "boxfuse/pipeline.hpp"
#include "boxfuse/scene_io.hpp"
#include "boxfuse/synthetic.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <unistd.h>

using namespace boxfuse;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

fs::path scratch_root() {
    fs::path p = fs::temp_directory_path() / ("boxfuse_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
}

SynthSpec suite_spec(std::uint64_t seed, double withhold) {
    SynthSpec s;
    s.min_objects = 5;
    s.max_objects = 10;
    s.frame_count = 30;
    s.width = 320;
    s.height = 240;
    s.seed = seed;
    s.withhold_fraction = withhold;
    return s;
}

// ---------------------------------------------------------------------------

Outcome criterion_1(const fs::path& root) {
    Outcome o;
    constexpr int kScenes = 20;
    PipelineConfig config;
    config.threads = 1;
    int scenes_all_recovered = 0;
    double map25_sum = 0;
    double worst_seconds = 0;
    int complete_perfect = 0;
    std::ostringstream misses;

    for (int s = 0; s < kScenes; ++s) {
        const auto seed = static_cast<std::uint64_t>(1000 + s);
        {
            const SyntheticScene scene = generate_synthetic_scene(suite_spec(seed, 0.5));
            const fs::path dir = root / ("c1_w50_" + std::to_string(s));
            write_scene(scene, dir);
            const auto t0 = Clock::now();
            const PipelineResult r = run_pipeline(dir, config, {dir / "instances.jsonl", {}, {}});
            worst_seconds = std::max(worst_seconds, std::chrono::duration<double>(Clock::now() - t0).count());
            const GroundTruth gt = load_ground_truth(dir / "gt.txt");
            map25_sum += compute_map_suite(r.instances, gt.instances).map_25;

            bool all = true;
            for (std::size_t w : scene.withheld) {
                const auto& g = gt.instances[w];
                const bool found = std::any_of(r.instances.begin(), r.instances.end(), [&](const LabeledInstance& inst) {
                    return inst.source == ProposalSource::RGBDBased && inst.class_id == g.class_id &&
                           mask_iou(inst.mask, g.mask) >= 0.25;
                });
                if (!found) {
                    all = false;
                    misses << " s" << s << "/o" << w;
                }
            }
            scenes_all_recovered += all ? 1 : 0;
        }
        {
            const SyntheticScene scene = generate_synthetic_scene(suite_spec(seed, 0.0));
            const fs::path dir = root / ("c1_w0_" + std::to_string(s));
            write_scene(scene, dir);
            const auto t0 = Clock::now();
            const PipelineResult r = run_pipeline(dir, config, {dir / "instances.jsonl", {}, {}});
            worst_seconds = std::max(worst_seconds, std::chrono::duration<double>(Clock::now() - t0).count());
            const GroundTruth gt = load_ground_truth(dir / "gt.txt");
            const double m = compute_map_suite(r.instances, gt.instances).map_25;
            if (m == 1.0) ++complete_perfect;
            else misses << " w0:s" << s << "=" << m;
        }
    }
    const double map25 = map25_sum / kScenes;
    o.pass = scenes_all_recovered >= 18 && map25 >= 0.90 && complete_perfect == kScenes && worst_seconds < 10.0;
    std::ostringstream d;
    d << "withheld recovered in " << scenes_all_recovered << "/20 scenes, mean mAP25 " << map25
      << ", withhold-0 mAP25=1 in " << complete_perfect << "/20, slowest scene " << worst_seconds << " s";
    if (!misses.str().empty()) d << "; misses:" << misses.str();
    o.detail = d.str();
    return o;
}

Outcome criterion_2() {
    Outcome o;
    std::mt19937_64 rng(2);
    constexpr std::size_t kPoints = 10000;
    constexpr int kCams = 10;
    constexpr double kTau = 0.1;
    std::uniform_real_distribution<double> u(-1, 1);

    FrameSet frames;
    for (int c = 0; c < kCams; ++c) {
        Frame f;
        f.frame_id = c;
        f.camera = oracle::random_camera(rng, 160 + 16 * c, 120 + 8 * c);
        frames.frames.push_back(std::move(f));
        frames.available_ids.push_back(c);
    }
    ScenePointCloud cloud;
    for (std::size_t i = 0; i < kPoints; ++i) cloud.points.emplace_back(u(rng), u(rng), u(rng));
    // A few points behind each camera.
    for (int c = 0; c < kCams; ++c) {
        const Mat4 pose = frames.frames[c].camera.pose();
        const Vec3 eye = pose.topRightCorner<3, 1>();
        const Vec3 back = -pose.block<3, 1>(0, 2);
        cloud.points.push_back(eye + 0.5 * back);
    }

    // Depth maps: splat a perturbed copy of each point's depth so that the
    // occlusion test sees agreement, disagreement and missing depth.
    std::uniform_real_distribution<double> noise(-0.3, 0.3);
    std::bernoulli_distribution hole(0.1);
    for (auto& f : frames.frames) {
        const CameraParams& cam = f.camera;
        f.depth = DepthMap(cam.width, cam.height);
        for (const Vec3& p : cloud.points) {
            const auto s = oracle::scalar_project(p, cam);
            if (!oracle::frame_visible(s, cam.width, cam.height)) continue;
            const int px = sample_index(s.x, cam.width), py = sample_index(s.y, cam.height);
            f.depth.at(px, py) = hole(rng) ? 0.0 : s.z + noise(rng);
        }
    }

    const ProjectedPoints proj = project_all(cloud, frames, 4);
    const VisibilityMatrices vis = compute_visibility(proj, frames, kTau, 4);
    double max_err = 0;
    std::size_t bit_mismatch = 0, subset_violations = 0, fv = 0, dv = 0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const CameraParams& cam = frames.frames[f].camera;
        for (std::size_t p = 0; p < cloud.size(); ++p) {
            const auto s = oracle::scalar_project(cloud.points[p], cam);
            const std::size_t i = proj.at(f, p);
            if (std::abs(proj.cam_z[i] - s.z) > max_err) max_err = std::abs(proj.cam_z[i] - s.z);
            if (s.z > 0) {
                max_err = std::max({max_err, std::abs(proj.pixel_x[i] - s.x), std::abs(proj.pixel_y[i] - s.y)});
            }
            const bool ref_f = oracle::frame_visible(s, cam.width, cam.height);
            const bool ref_d = oracle::depth_visible(s, frames.frames[f].depth, kTau);
            bit_mismatch += (ref_f != vis.frame_vis.get(f, p)) + (ref_d != vis.depth_vis.get(f, p));
            subset_violations += vis.depth_vis.get(f, p) && !vis.frame_vis.get(f, p);
            fv += ref_f;
            dv += ref_d;
        }
    }
    o.pass = max_err <= 1e-9 && bit_mismatch == 0 && subset_violations == 0;
    std::ostringstream d;
    d << "max coordinate error " << max_err << ", bit mismatches " << bit_mismatch << ", subset violations "
      << subset_violations << " (" << fv << " frame-visible, " << dv << " depth-visible entries)";
    o.detail = d.str();
    return o;
}

Outcome criterion_3() {
    Outcome o;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> count(1, 30), w(40, 200), h(30, 160);
    std::size_t pixels = 0, mismatches = 0;
    for (int t = 0; t < 100; ++t) {
        const int width = w(rng), height = h(rng);
        std::vector<DetectionBox> boxes;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) boxes.push_back(oracle::random_box(rng, width, height));
        // Duplicate a few boxes with a different class to force equal-area ties.
        if (n > 2) {
            DetectionBox twin = boxes[0];
            twin.class_id = (twin.class_id + 1) % 8;
            boxes.push_back(twin);
        }
        const LabelMap map = build_label_map(boxes, width, height);
        for (int v = 0; v < height; ++v)
            for (int u = 0; u < width; ++u) {
                ++pixels;
                mismatches += map.at(u, v) != oracle::label_at(boxes, u, v, width, height);
            }
    }
    o.pass = mismatches == 0;
    o.detail = std::to_string(mismatches) + " mismatched pixels of " + std::to_string(pixels);
    return o;
}

Outcome criterion_4() {
    Outcome o;
    std::mt19937_64 rng(4);
    std::size_t oracle_mismatch = 0, cover_fail = 0, connect_fail = 0, monotone_fail = 0;
    const double sweep[5] = {0.01, 0.05, 0.2, 0.8, 3.2};
    std::ostringstream monotone_detail;
    for (int t = 0; t < 50; ++t) {
        const WeightedGraph g = oracle::random_graph(rng, 200);
        const std::size_t min_size = 1 + rng() % 4;
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (double k : sweep) {
            const SuperpointPartition part = segment_graph(g, k, min_size);
            if (part.segment_of != oracle::segment_labels(g, k, min_size)) ++oracle_mismatch;
            if (!oracle::disjoint_cover(part, g.node_count)) ++cover_fail;
            if (!oracle::connected_segments(g, part)) ++connect_fail;
        }
        // Monotonicity is stated for min_segment_size = 1.
        for (double k : sweep) {
            const std::size_t count = segment_graph(g, k, 1).segment_count();
            if (count > prev) {
                ++monotone_fail;
                monotone_detail << " g" << t << "@" << k << ":" << prev << "->" << count;
            }
            prev = count;
        }
    }
    o.pass = oracle_mismatch == 0 && cover_fail == 0 && connect_fail == 0 && monotone_fail == 0;
    std::ostringstream d;
    d << "oracle mismatches " << oracle_mismatch << ", cover failures " << cover_fail << ", connectivity failures "
      << connect_fail << ", monotonicity violations " << monotone_fail << monotone_detail.str();
    o.detail = d.str();
    return o;
}

Outcome criterion_5() {
    Outcome o;
    std::size_t lifted = 0, returned = 0, boxes = 0, contain_fail = 0;
    double worst_px = 0, worst_depth = 0;
    for (std::uint64_t seed : {11u, 12u}) {
        SynthSpec spec = suite_spec(seed, 0.5);
        spec.frame_count = 6;
        const SyntheticScene scene = generate_synthetic_scene(spec);
        for (std::size_t f = 0; f < scene.frames.size(); ++f) {
            const Frame& frame = scene.frames.frames[f];
            for (const DetectionBox& det : scene.ideal_detections[f]) {
                for (int stride : {1, 5}) {
                    const auto pts = try_lift_box_pixels(det, frame, stride);
                    // Re-walk the sampled pixels in the same order to pair them up.
                    const PixelSpan span = pixel_span(det, frame.depth.width, frame.depth.height);
                    std::size_t k = 0;
                    for (int v = span.v_begin; v <= span.v_end; v += stride)
                        for (int uu = span.u_begin; uu <= span.u_end; uu += stride) {
                            const double d = frame.depth.at(uu, v);
                            if (!(d > 0)) continue;
                            const auto s = oracle::scalar_project(pts[k++], frame.camera);
                            const double px = std::hypot(s.x - uu, s.y - v);
                            const double dz = std::abs(s.z - d);
                            worst_px = std::max(worst_px, px);
                            worst_depth = std::max(worst_depth, dz);
                            ++lifted;
                            returned += px <= 0.5 && dz <= 1e-6;
                        }
                    if (k != pts.size()) contain_fail += 1000;  // pairing broke
                    if (pts.empty()) continue;
                    ++boxes;
                    const OrientedBox3D box = fit_oriented_box(pts);
                    for (const Vec3& p : pts) contain_fail += !box.contains(p);
                }
            }
        }
    }
    // Rotated cuboids: the fitted box of the corners reproduces the volume.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ext(0.05, 1.0), ang(-3.14, 3.14), off(-5, 5);
    double worst_volume = 0;
    for (int t = 0; t < 100; ++t) {
        Vec3 h(ext(rng), ext(rng), ext(rng));
        const Mat3 r = (Eigen::AngleAxisd(ang(rng), Vec3::UnitZ()) * Eigen::AngleAxisd(ang(rng), Vec3::UnitY()) *
                        Eigen::AngleAxisd(ang(rng), Vec3::UnitX()))
                           .toRotationMatrix();
        const Vec3 c(off(rng), off(rng), off(rng));
        std::vector<Vec3> corners;
        for (int i = 0; i < 8; ++i) {
            const Vec3 s((i & 1) ? 1 : -1, (i & 2) ? 1 : -1, (i & 4) ? 1 : -1);
            corners.push_back(c + r * s.cwiseProduct(h));
        }
        const OrientedBox3D box = fit_oriented_box(corners);
        worst_volume = std::max(worst_volume, std::abs(box.volume() - 8 * h.prod()));
        for (const Vec3& p : corners) contain_fail += !box.contains(p);
    }
    o.pass = lifted > 0 && returned == lifted && contain_fail == 0 && worst_volume <= 1e-6;
    std::ostringstream d;
    d << returned << "/" << lifted << " lifted pixels returned (worst " << worst_px << " px, " << worst_depth
      << " m), " << boxes << " boxes with " << contain_fail << " containment failures, worst volume error "
      << worst_volume;
    o.detail = d.str();
    return o;
}

Outcome criterion_6() {
    Outcome o;
    std::mt19937_64 rng(6);
    std::size_t mismatches = 0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t n_points = 60 + rng() % 200;
        const std::size_t n_sp = 5 + rng() % 30;
        std::vector<std::uint32_t> labels(n_points);
        for (auto& l : labels) l = static_cast<std::uint32_t>(rng() % n_sp);
        const SuperpointPartition part = SuperpointPartition::from_labels(labels);
        const double tau = std::vector<double>{0.0, 0.1, 0.25, 0.5, 0.9}[t % 5];

        std::vector<std::vector<CoarseMask>> frames(2 + rng() % 6);
        std::vector<std::vector<oracle::SetMask>> ref(frames.size());
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const std::size_t masks = rng() % 5;
            for (std::size_t m = 0; m < masks; ++m) {
                std::vector<std::uint32_t> ids;
                const std::size_t base = rng() % part.segment_count();
                const std::size_t span = 1 + rng() % 4;
                for (std::size_t s = 0; s < span; ++s) ids.push_back(static_cast<std::uint32_t>((base + s) % part.segment_count()));
                std::sort(ids.begin(), ids.end());
                ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
                const int cls = static_cast<int>(rng() % 3);
                frames[f].push_back(make_coarse_mask(ids, part, cls, static_cast<int>(f)));
                oracle::SetMask sm{cls, {}};
                for (auto s : ids) sm.points.insert(part.members[s].begin(), part.members[s].end());
                ref[f].push_back(std::move(sm));
            }
        }
        const CandidateSet got = merge_coarse_masks(frames, tau);
        const auto want = oracle::merge(ref, tau);
        if (got.candidates.size() != want.size()) {
            ++mismatches;
            continue;
        }
        for (std::size_t c = 0; c < want.size(); ++c) {
            const auto idx = got.candidates[c].point_set.indices();
            if (std::set<std::uint32_t>(idx.begin(), idx.end()) != want[c].points ||
                got.candidates[c].class_id != want[c].class_id)
                ++mismatches;
        }
    }

    // Boundaries. Two superpoints of two points each; the box holds exactly
    // one point of superpoint 0 and both of superpoint 1.
    ScenePointCloud cloud;
    cloud.points = {Vec3(0, 0, 0), Vec3(5, 0, 0), Vec3(0.5, 0, 0), Vec3(0.6, 0, 0)};
    const SuperpointPartition part = SuperpointPartition::from_labels({0, 0, 1, 1});
    OrientedBox3D box;
    box.center = Vec3(0.3, 0, 0);
    box.half_extents = Vec3(0.5, 0.5, 0.5);
    const auto spp = assign_superpoints(box, part, cloud, 0.5);
    const bool spp_inclusive = spp && spp->superpoint_ids == std::vector<std::uint32_t>{0, 1};
    const auto spp_above = assign_superpoints(box, part, cloud, 0.5000001);
    const bool spp_strict_above = spp_above && spp_above->superpoint_ids == std::vector<std::uint32_t>{1};

    // IoU exactly 0.75 against a point mask: kept; just above: discarded.
    const SuperpointPartition flat = SuperpointPartition::from_labels({0, 1, 2, 3});
    CandidateSet cands;
    cands.candidates.push_back(make_coarse_mask({0, 1, 2}, flat, 0, 0));
    const std::vector<BinaryMask3D> point_masks{BinaryMask3D({0, 1, 2, 3})};
    const bool filter_keeps_equal = filter_rgbd_masks(cands, point_masks, 0.75).size() == 1;
    const bool filter_drops_above = filter_rgbd_masks(cands, point_masks, 0.7499999).empty();

    // Merge at exactly tau_merge joins; redundancy at exactly tau_box is redundant.
    std::vector<std::vector<CoarseMask>> seq(2);
    seq[0].push_back(make_coarse_mask({0}, flat, 0, 0));
    seq[1].push_back(make_coarse_mask({0, 1, 2, 3}, flat, 0, 1));
    const bool merge_inclusive = merge_coarse_masks(seq, 0.25).candidates.size() == 1;
    OrientedBox3D all_but_one;
    all_but_one.center = Vec3(0.3, 0, 0);
    all_but_one.half_extents = Vec3(0.5, 0.5, 0.5);
    const std::vector<BinaryMask3D> four{BinaryMask3D({0, 1, 2, 3})};
    ScenePointCloud line;
    line.points = {Vec3(0, 0, 0), Vec3(0.2, 0, 0), Vec3(0.4, 0, 0), Vec3(3, 0, 0)};
    const bool box_inclusive = is_redundant_box(all_but_one, four, line, 0.75) &&
                               !is_redundant_box(all_but_one, four, line, 0.7500001);

    const bool boundaries =
        spp_inclusive && spp_strict_above && filter_keeps_equal && filter_drops_above && merge_inclusive && box_inclusive;
    o.pass = mismatches == 0 && boundaries;
    std::ostringstream d;
    d << mismatches << " oracle mismatches over 50 sequences; boundaries: tau_spp=0.5 include "
      << (spp_inclusive ? "ok" : "FAIL") << ", tau_filter equal keep " << (filter_keeps_equal ? "ok" : "FAIL")
      << ", tau_merge equal join " << (merge_inclusive ? "ok" : "FAIL") << ", tau_box equal redundant "
      << (box_inclusive ? "ok" : "FAIL") << ", strict side " << (spp_strict_above && filter_drops_above ? "ok" : "FAIL");
    o.detail = d.str();
    return o;
}

std::vector<GroundTruthInstance> gt_from(const nlohmann::json& arr) {
    std::vector<GroundTruthInstance> out;
    for (const auto& g : arr)
        out.push_back({BinaryMask3D::from_unsorted(g["mask"].get<std::vector<PointIndex>>()), g["class_id"].get<int>()});
    return out;
}

std::vector<LabeledInstance> pred_from(const nlohmann::json& arr) {
    std::vector<LabeledInstance> out;
    for (const auto& p : arr) {
        LabeledInstance inst;
        inst.mask = BinaryMask3D::from_unsorted(p["mask"].get<std::vector<PointIndex>>());
        inst.class_id = p["class_id"].get<int>();
        inst.confidence = p["confidence"].get<double>();
        inst.source = ProposalSource::RGBDBased;
        out.push_back(std::move(inst));
    }
    return out;
}

Outcome criterion_7() {
    Outcome o;
    constexpr double kTol = 1e-12;
    std::size_t cases = 0, case_fail = 0;
    std::ostringstream d;
    for (const auto& entry : fs::directory_iterator(oracle::fixture_dir())) {
        if (entry.path().extension() != ".json" || entry.path().filename().string().rfind("ap_case", 0) != 0) continue;
        ++cases;
        const auto j = nlohmann::json::parse(oracle::read_file(entry.path()));
        const auto gt = gt_from(j["gt"]);
        const auto preds = pred_from(j["pred"]);
        const APReport r = compute_map_suite(preds, gt);
        bool ok = std::abs(r.map_50_95 - oracle::parse_fraction(j["map_50_95"])) <= kTol &&
                  std::abs(r.map_50 - oracle::parse_fraction(j["map_50"])) <= kTol &&
                  std::abs(r.map_25 - oracle::parse_fraction(j["map_25"])) <= kTol &&
                  r.per_class_ap.size() == j["per_class"].size();
        for (const auto& [cls, vals] : j["per_class"].items()) {
            const auto it = r.per_class_ap.find(std::stoi(cls));
            if (it == r.per_class_ap.end() || it->second.size() != vals.size()) {
                ok = false;
                continue;
            }
            for (std::size_t i = 0; i < vals.size(); ++i)
                ok = ok && std::abs(it->second[i] - oracle::parse_fraction(vals[i])) <= kTol;
        }
        if (!ok) {
            ++case_fail;
            d << " " << entry.path().filename().string() << " FAILED;";
        }
    }

    // Perfect predictions, on the fixtures' ground truth and on a synthetic scene.
    bool perfect = true;
    for (const auto& entry : fs::directory_iterator(oracle::fixture_dir())) {
        if (entry.path().extension() != ".json") continue;
        const auto gt = gt_from(nlohmann::json::parse(oracle::read_file(entry.path()))["gt"]);
        std::vector<LabeledInstance> preds;
        for (const auto& g : gt) preds.push_back({g.mask, g.class_id, 1.0, ProposalSource::PointBased});
        const APReport r = compute_map_suite(preds, gt);
        perfect = perfect && r.map_50_95 == 1.0 && r.map_50 == 1.0 && r.map_25 == 1.0;
    }

    // Single prediction at IoU 0.6.
    std::vector<GroundTruthInstance> one_gt{{BinaryMask3D({0, 1, 2, 3, 4}), 0}};
    std::vector<LabeledInstance> one_pred{{BinaryMask3D({0, 1, 2}), 0, 0.9, ProposalSource::PointBased}};
    const double single = compute_map_suite(one_pred, one_gt).map_50_95;
    const bool single_ok = single == 0.3;

    // Subset: only the averaged class set changes.
    const auto j3 = nlohmann::json::parse(oracle::read_file(oracle::fixture_dir() / "ap_case_3_duplicate_and_miss.json"));
    const auto gt3 = gt_from(j3["gt"]);
    const auto pr3 = pred_from(j3["pred"]);
    const APReport full = compute_map_suite(pr3, gt3);
    const APReport sub = compute_map_suite(pr3, gt3, std::set<int>{0});
    const bool subset_ok = sub.classes == std::vector<int>{0} && sub.per_class_ap.at(0) == full.per_class_ap.at(0) &&
                           std::abs(sub.map_50 - 5.0 / 9.0) <= kTol &&
                           std::abs(sub.map_50_95 - (5.0 / 9 + 3.0) / 10) <= kTol;

    o.pass = cases == 5 && case_fail == 0 && perfect && single_ok && subset_ok;
    std::ostringstream out;
    out << cases - case_fail << "/" << cases << " fixtures exact, perfect suites " << (perfect ? "1.0" : "FAIL")
        << ", single IoU-0.6 mAP " << single << ", subset " << (subset_ok ? "ok" : "FAIL") << d.str();
    o.detail = out.str();
    return o;
}

Outcome criterion_8(const fs::path& root) {
    Outcome o;
    std::size_t compared = 0, differing = 0;
    for (int s = 0; s < 3; ++s) {
        SynthSpec spec = suite_spec(800 + s, 0.5);
        spec.jitter_px = 2.0;
        const fs::path dir = root / ("c8_" + std::to_string(s));
        write_scene(generate_synthetic_scene(spec), dir);
        std::vector<std::string> ref;
        for (unsigned threads : {1u, 4u, 8u}) {
            PipelineConfig config;
            config.threads = threads;
            const fs::path out = dir / ("run_t" + std::to_string(threads));
            fs::create_directories(out);
            const PipelineResult r =
                run_pipeline(dir, config, {out / "instances.jsonl", out / "timing.json", out / "debug"});
            {
                std::ofstream t(out / "timing_structure.json");
                t << timing_json(r, false).dump(2) << '\n';
            }
            std::vector<std::string> files;
            files.push_back(oracle::read_file(out / "instances.jsonl"));
            files.push_back(oracle::read_file(out / "timing_structure.json"));
            files.push_back(oracle::read_file(out / "debug" / "merge_events.jsonl"));
            std::vector<fs::path> pngs;
            for (const auto& e : fs::directory_iterator(out / "debug"))
                if (e.path().extension() == ".png") pngs.push_back(e.path());
            std::sort(pngs.begin(), pngs.end());
            for (const auto& p : pngs) files.push_back(p.filename().string() + oracle::read_file(p));
            if (ref.empty()) {
                ref = files;
                continue;
            }
            compared += files.size();
            if (files.size() != ref.size()) {
                ++differing;
                continue;
            }
            for (std::size_t i = 0; i < files.size(); ++i) differing += files[i] != ref[i];
        }
    }
    o.pass = compared > 0 && differing == 0;
    o.detail = std::to_string(compared) + " files compared against the 1-thread run, " + std::to_string(differing) +
               " differ";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    // Optional criterion ids restrict the run.
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const fs::path root = scratch_root();
    struct Entry {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> entries = {
        {1, "end-to-end rare-object recovery", 0, [&] { return criterion_1(root); }},
        {2, "projection/visibility oracle", 5, criterion_2},
        {3, "label-map correctness", 10, criterion_3},
        {4, "superpoint segmentation oracle", 5, criterion_4},
        {5, "lift/fit round-trip", 5, criterion_5},
        {6, "merge/filter oracle", 5, criterion_6},
        {7, "mAP evaluator fixtures", 0, criterion_7},
        {8, "determinism across thread counts", 0, [&] { return criterion_8(root); }},
    };
    int failures = 0;
    for (const auto& e : entries) {
        if (!only.empty() && !only.count(e.id)) continue;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = e.run();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (e.budget_s > 0 && secs >= e.budget_s) {
            o.pass = false;
            o.detail += "; over the " + std::to_string(static_cast<int>(e.budget_s)) + " s budget";
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %d %s: %s - %s (%.2f s)\n", e.id, e.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    std::error_code ec;
    fs::remove_all(root, ec);
    return failures == 0 ? 0 : 1;
}
