#pragma once

#include "boxfuse/types.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace boxfuse {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Point clouds (PLY)
// ---------------------------------------------------------------------------

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Reads the vertex element of an ASCII or binary little-endian PLY file.
/// Normals are populated iff nx/ny/nz are all present.
ScenePointCloud load_point_cloud(const fs::path& path);

/// Writes x/y/z (and nx/ny/nz when present) as float64.
void write_point_cloud(const ScenePointCloud& cloud, const fs::path& path,
                       PlyFormat format = PlyFormat::BinaryLittleEndian);

// ---------------------------------------------------------------------------
// Posed depth frames
// ---------------------------------------------------------------------------

struct FrameLoadOptions {
    int stride = 10;
    /// Raw PNG units per meter.
    double depth_scale = 1000.0;
    /// Set when the extrinsic files hold camera-to-world poses.
    bool invert_extrinsics = false;
    unsigned threads = 1;
};

/// Loads `<id>.depth.png`, `<id>.intrinsic.txt` and `<id>.extrinsic.txt` for
/// every id with id % stride == 0, sorted by id.
FrameSet load_frames(const fs::path& directory, const FrameLoadOptions& options = {});

void write_frame(const fs::path& directory, const Frame& frame, double depth_scale = 1000.0);

DepthMap read_depth_png(const fs::path& path, double depth_scale = 1000.0);
void write_depth_png(const DepthMap& depth, const fs::path& path, double depth_scale = 1000.0);

/// 16-bit grayscale PNG of raw values (used for label-map dumps).
void write_u16_png(const fs::path& path, int width, int height, std::span<const std::uint16_t> values);

/// Row-major 4x4 matrix of whitespace-separated decimals.
Mat4 read_matrix4(const fs::path& path);
void write_matrix4(const fs::path& path, const Mat4& m);

// ---------------------------------------------------------------------------
// Detections (JSON Lines)
// ---------------------------------------------------------------------------

/// Parses every line; throws MalformedLine naming the 1-based line number.
std::vector<DetectionBox> read_detections(const fs::path& path);
void write_detections(const fs::path& path, std::span<const DetectionBox> boxes);

/// Clips a box to [0,W]x[0,H]; nullopt when nothing of positive area remains.
std::optional<DetectionBox> clip_box(const DetectionBox& box, int width, int height);

/// Groups boxes by loaded frame, clipping each and dropping empty ones.
/// Boxes for frames present on disk but skipped by the stride are dropped;
/// boxes for frame ids absent from disk throw UnknownFrame.
DetectionsByFrame assemble_detections(std::span<const DetectionBox> boxes, const FrameSet& frames);

// ---------------------------------------------------------------------------
// Class-agnostic masks
// ---------------------------------------------------------------------------

/// Header `n_masks n_points`, then one line of ascending indices per mask.
std::vector<BinaryMask3D> load_masks(const fs::path& path, std::size_t n_points);
void write_masks(const fs::path& path, std::span<const BinaryMask3D> masks, std::size_t n_points);

// ---------------------------------------------------------------------------
// Pipeline output (JSON Lines)
// ---------------------------------------------------------------------------

/// Output order: confidence descending, then class_id, then first member index.
void sort_for_output(std::vector<LabeledInstance>& instances);

void save_labeled_instances(std::span<const LabeledInstance> instances, const fs::path& path);
std::vector<LabeledInstance> load_labeled_instances(const fs::path& path);

}  // namespace boxfuse
