#include "oracles.hpp"

#include "boxfuse/proposal_fusion.hpp"
#include "boxfuse/synthetic.hpp"

#include <doctest.h>

using namespace boxfuse;

namespace {

// Unit box at the origin; `inside` of `n` cloud points sit in it, the rest far away.
struct Fixture {
    OrientedBox3D box;
    ScenePointCloud cloud;

    Fixture() { box.half_extents = Vec3(0.5, 0.5, 0.5); }

    BinaryMask3D add(std::size_t n, std::size_t inside) {
        std::vector<PointIndex> idx;
        for (std::size_t i = 0; i < n; ++i) {
            idx.push_back(static_cast<PointIndex>(cloud.size()));
            cloud.points.push_back(i < inside ? Vec3(0.1, 0, 0) : Vec3(10, 0, 0));
        }
        return BinaryMask3D(idx);
    }
};

std::vector<std::set<std::uint32_t>> point_sets(const CandidateSet& c) {
    std::vector<std::set<std::uint32_t>> out;
    for (const auto& m : c.candidates) out.emplace_back(m.point_set.indices().begin(), m.point_set.indices().end());
    return out;
}

}  // namespace

TEST_SUITE("proposal_fusion") {

TEST_CASE("redundancy filter") {
    Fixture fx;
    const auto full = fx.add(8, 8);
    const auto three_quarters = fx.add(4, 3);
    const auto outside = fx.add(5, 0);
    CHECK(is_redundant_box(fx.box, std::vector{full}, fx.cloud, 0.75));
    CHECK_FALSE(is_redundant_box(fx.box, std::vector{outside}, fx.cloud, 0.75));
    CHECK(is_redundant_box(fx.box, std::vector{three_quarters}, fx.cloud, 0.75));
    CHECK_FALSE(is_redundant_box(fx.box, std::vector{three_quarters}, fx.cloud, 0.7500001));

    const std::vector<ClassedBox3D> boxes{{fx.box, 1}, {fx.box, 2}};
    CHECK(filter_redundant_boxes(boxes, std::vector{outside}, fx.cloud, 0.75).size() == 2);
    CHECK(filter_redundant_boxes(boxes, std::vector{outside, full}, fx.cloud, 0.75).empty());
}

TEST_CASE("superpoint assignment thresholds") {
    Fixture fx;
    fx.add(10, 6);
    fx.add(10, 4);
    fx.add(10, 5);
    std::vector<std::uint32_t> labels(30);
    for (std::size_t i = 0; i < 30; ++i) labels[i] = static_cast<std::uint32_t>(i / 10);
    const auto part = SuperpointPartition::from_labels(labels);
    const auto m = assign_superpoints(fx.box, part, fx.cloud, 0.5, 4, 20);
    REQUIRE(m.has_value());
    CHECK(m->superpoint_ids == std::vector<std::uint32_t>{0, 2});
    CHECK(m->point_set.size() == 20);
    CHECK(m->class_id == 4);
    CHECK(m->source_frame == 20);
    CHECK_FALSE(assign_superpoints(fx.box, part, fx.cloud, 0.61).has_value());
}

TEST_CASE("merging identical and differently labelled masks") {
    std::vector<std::uint32_t> labels{0, 0, 1, 1, 2, 2};
    const auto part = SuperpointPartition::from_labels(labels);
    const auto a = make_coarse_mask({0, 1}, part, 3, 0);
    auto same = make_coarse_mask({0, 1}, part, 3, 10);
    CHECK(merge_coarse_masks({{a}, {same}}, 0.5).candidates.size() == 1);
    same.class_id = 4;
    CHECK(merge_coarse_masks({{a}, {same}}, 0.5).candidates.size() == 2);
}

TEST_CASE("merge follows the sequential oracle") {
    std::vector<std::uint32_t> labels(100);
    for (std::size_t i = 0; i < 100; ++i) labels[i] = static_cast<std::uint32_t>(i / 5);
    const auto part = SuperpointPartition::from_labels(labels);
    std::mt19937_64 rng(73);
    for (int t = 0; t < 40; ++t) {
        std::vector<std::vector<CoarseMask>> frames;
        std::vector<std::vector<oracle::SetMask>> sets;
        const int n_frames = 1 + static_cast<int>(rng() % 5);
        for (int f = 0; f < n_frames; ++f) {
            frames.emplace_back();
            sets.emplace_back();
            const int n = static_cast<int>(rng() % 4);
            for (int i = 0; i < n; ++i) {
                const std::uint32_t lo = rng() % 15, len = 1 + rng() % 6;
                std::vector<std::uint32_t> ids;
                for (std::uint32_t s = lo; s < std::min(20u, lo + len); ++s) ids.push_back(s);
                const int cls = static_cast<int>(rng() % 2);
                frames.back().push_back(make_coarse_mask(ids, part, cls, f));
                oracle::SetMask sm{cls, {}};
                for (auto p : frames.back().back().point_set.indices()) sm.points.insert(p);
                sets.back().push_back(sm);
            }
        }
        std::size_t last_count = 0;
        std::vector<BinaryMask3D> snapshot;
        const auto result = merge_coarse_masks(frames, 0.25, [&](const MergeEvent& e) {
            CHECK(e.candidate != nullptr);
            if (e.action == MergeAction::Merge) {
                CHECK(e.best_iou >= 0.25);
                const auto& before = snapshot.at(e.candidate_index);
                CHECK(intersection_size(before, e.candidate->point_set) == before.size());
                snapshot[e.candidate_index] = e.candidate->point_set;
            } else {
                CHECK(e.candidate_index == snapshot.size());
                snapshot.push_back(e.candidate->point_set);
                ++last_count;
            }
            CHECK(snapshot.size() == last_count);
        });
        const auto want = oracle::merge(sets, 0.25);
        const auto got = point_sets(result);
        REQUIRE(got.size() == want.size());
        for (std::size_t c = 0; c < got.size(); ++c) {
            CHECK(got[c] == want[c].points);
            CHECK(result.candidates[c].class_id == want[c].class_id);
            CHECK(make_coarse_mask(result.candidates[c].superpoint_ids, part, 0, 0).point_set ==
                  result.candidates[c].point_set);
        }
    }
}

TEST_CASE("re-feeding an existing candidate changes nothing") {
    std::vector<std::uint32_t> labels{0, 0, 1, 1, 2, 2, 3};
    const auto part = SuperpointPartition::from_labels(labels);
    const auto a = make_coarse_mask({0, 1}, part, 0, 0);
    const auto b = make_coarse_mask({2, 3}, part, 0, 0);
    const auto once = merge_coarse_masks({{a, b}}, 0.25);
    const auto twice = merge_coarse_masks({{a, b}, {b}, {a}}, 0.25);
    CHECK(point_sets(once) == point_sets(twice));
}

TEST_CASE("rgbd filter boundaries") {
    std::vector<std::uint32_t> labels{0, 1, 2, 3, 4, 5, 6, 7};
    const auto part = SuperpointPartition::from_labels(labels);
    CandidateSet c;
    c.candidates.push_back(make_coarse_mask({0, 1, 2}, part, 1, 0));     // identical to a point mask
    c.candidates.push_back(make_coarse_mask({5, 6}, part, 2, 0));        // disjoint
    c.candidates.push_back(make_coarse_mask({0, 1, 2, 3}, part, 3, 0));  // IoU 3/4
    const std::vector<BinaryMask3D> point_masks{BinaryMask3D({0, 1, 2})};
    const auto kept = filter_rgbd_masks(c, point_masks, 0.75);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].class_id == 2);
    CHECK(kept[1].class_id == 3);
    for (const auto& k : kept)
        for (const auto& m : point_masks) CHECK(mask_iou(k.point_set, m) <= 0.75);
}

TEST_CASE("fusing proposals") {
    std::vector<std::uint32_t> labels{0, 1, 2, 3, 4};
    const auto part = SuperpointPartition::from_labels(labels);
    const std::vector<BinaryMask3D> pm{BinaryMask3D({0}), BinaryMask3D({1}), BinaryMask3D({2})};
    const std::vector<CoarseMask> rgbd{make_coarse_mask({3}, part, 7, 0), make_coarse_mask({4}, part, 8, 0)};
    const auto all = fuse_proposals(pm, rgbd);
    REQUIRE(all.size() == 5);
    for (int i = 0; i < 3; ++i) {
        CHECK(all[i].source == ProposalSource::PointBased);
        CHECK(all[i].mask == pm[i]);
        CHECK_FALSE(all[i].detector_class.has_value());
    }
    CHECK(all[3].source == ProposalSource::RGBDBased);
    CHECK(all[4].detector_class == 8);
    CHECK(fuse_proposals(pm, {}).size() == 3);
    const auto only = fuse_proposals({}, rgbd);
    REQUIRE(only.size() == 2);
    CHECK(only[0].mask == rgbd[0].point_set);
}

TEST_CASE("rgbd masks on a synthetic scene are whole-superpoint unions and deterministic") {
    SynthSpec spec;
    spec.seed = 19;
    spec.withhold_fraction = 0.5;
    const auto scene = generate_synthetic_scene(spec);
    const auto part = compute_superpoints(scene.cloud, {}, 4);
    FrameSet frames;
    DetectionsByFrame dets;
    for (std::size_t f = 0; f < scene.frames.size(); f += 10) {
        frames.frames.push_back(scene.frames.frames[f]);
        dets.push_back(scene.ideal_detections[f]);
    }
    FusionStats stats;
    const auto masks = generate_rgbd_masks(scene.cloud, frames, dets, part, scene.partial_point_masks, {}, 1, &stats);
    CHECK_FALSE(masks.empty());
    CHECK(stats.surviving == masks.size());
    for (const auto& m : masks) {
        CHECK(make_coarse_mask(m.superpoint_ids, part, 0, 0).point_set == m.point_set);
        for (auto s : m.superpoint_ids)
            for (auto p : part.members[s]) CHECK(m.point_set.contains(p));
    }
    const auto again = generate_rgbd_masks(scene.cloud, frames, dets, part, scene.partial_point_masks, {}, 8);
    REQUIRE(again.size() == masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        CHECK(again[i].superpoint_ids == masks[i].superpoint_ids);
        CHECK(again[i].class_id == masks[i].class_id);
    }
}

}  // TEST_SUITE
