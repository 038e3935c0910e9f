#pragma once

#include "boxfuse/evaluation.hpp"
#include "boxfuse/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace boxfuse {

enum class ShapeKind { Cuboid, Ellipsoid };

/// Shape resting on the z = 0 plane, rotated by `yaw` about +z.
/// half_size holds cuboid half extents or ellipsoid semi-axes.
struct SynthObject {
    ShapeKind kind = ShapeKind::Cuboid;
    Vec3 center = Vec3::Zero();
    double yaw = 0;
    Vec3 half_size = Vec3::Constant(0.1);
    int class_id = 0;

    Mat3 rotation() const;
    /// Smallest ray parameter t > 0 where origin + t * dir meets the surface.
    std::optional<double> intersect(const Vec3& origin, const Vec3& dir) const;
};

struct RayHit {
    double t = 0;
    std::size_t object = 0;
};

std::optional<RayHit> first_hit(const std::vector<SynthObject>& objects, const Vec3& origin, const Vec3& dir);

/// World-to-camera transform for a camera at `eye` looking at `target`
/// (x right, y down, z forward).
Mat4 look_at_extrinsic(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// Depth (camera-frame z) of the nearest surface along each pixel-center ray; 0 on a miss.
/// With floor_half_extent set, the square z = 0 floor |x|,|y| <= extent is rendered too.
DepthMap render_depth(const std::vector<SynthObject>& objects, const CameraParams& camera,
                      std::optional<double> floor_half_extent = std::nullopt);

struct SynthSpec {
    int min_objects = 5;
    int max_objects = 10;
    /// Side of the square floor area holding object centres (meters).
    double room_extent = 2.5;
    int frame_count = 30;
    int width = 320;
    int height = 240;
    std::uint64_t seed = 0;
    double withhold_fraction = 0.5;
    /// Uniform box-corner jitter in pixels applied to ideal detections.
    double jitter_px = 0.0;
    /// Surface samples per square meter.
    double point_density = 6000.0;
    /// Floor plane under the objects, rendered and sampled but never an instance.
    bool floor = true;
    double floor_density = 2000.0;
    /// Multiplies the half-size ranges of the three size buckets.
    double size_scale = 1.0;
    /// Horizontal field of view of every camera.
    double fov_deg = 45.0;
    /// Orbit radius and height; 0 derives them from room_extent.
    double orbit_radius = 0.0;
    double camera_height = 0.0;
    /// Depth tolerance used to decide which points are visible for detections.
    double visibility_tau = 0.05;
};

struct SyntheticScene {
    ScenePointCloud cloud;
    FrameSet frames;
    std::vector<SynthObject> objects;
    /// One instance per object, in object order.
    std::vector<GroundTruthInstance> gt;
    DetectionsByFrame ideal_detections;
    /// Ground-truth masks of the objects that were not withheld.
    std::vector<BinaryMask3D> partial_point_masks;
    std::vector<std::size_t> withheld;
    /// Half side of the rendered floor square; nullopt without a floor.
    std::optional<double> floor_half_extent;
};

/// Number of distinct classes the generator can emit (shape x size bucket).
constexpr int kSynthClassCount = 6;

SyntheticScene generate_synthetic_scene(const SynthSpec& spec);

/// Writes cloud.ply, frames/, detections.jsonl, masks.txt, gt.txt and withheld.txt.
void write_scene(const SyntheticScene& scene, const std::filesystem::path& directory);

}  // namespace boxfuse
