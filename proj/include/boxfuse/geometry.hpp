#pragma once

#include "boxfuse/types.hpp"

#include <span>
#include <vector>

namespace boxfuse {

/// Per-frame projections of every cloud point, stored frame-major
/// (index f * N + p). Pixel coordinates are only meaningful where cam_z > 0.
struct ProjectedPoints {
    std::size_t frame_count = 0;
    std::size_t point_count = 0;
    std::vector<double> pixel_x;
    std::vector<double> pixel_y;
    std::vector<double> cam_z;

    std::size_t at(std::size_t f, std::size_t p) const { return f * point_count + p; }
    bool usable(std::size_t f, std::size_t p) const { return cam_z[at(f, p)] > 0; }
};

/// Transforms every point by extrinsic then intrinsic and divides by the
/// camera-frame depth. Frames are independent, so the result does not depend
/// on the thread count.
ProjectedPoints project_all(const ScenePointCloud& cloud, const FrameSet& frames, unsigned threads = 1);

/// Frames x points bit matrix, one byte per entry.
class VisibilityMatrix {
public:
    VisibilityMatrix() = default;
    VisibilityMatrix(std::size_t frames, std::size_t points)
        : frames_(frames), points_(points), bits_(frames * points, 0) {}

    bool get(std::size_t f, std::size_t p) const { return bits_[f * points_ + p] != 0; }
    void set(std::size_t f, std::size_t p, bool v) { bits_[f * points_ + p] = v ? 1 : 0; }
    std::size_t frame_count() const noexcept { return frames_; }
    std::size_t point_count() const noexcept { return points_; }

    friend bool operator==(const VisibilityMatrix&, const VisibilityMatrix&) = default;

private:
    std::size_t frames_ = 0;
    std::size_t points_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct VisibilityMatrices {
    VisibilityMatrix frame_vis;
    VisibilityMatrix depth_vis;

    /// frame_vis && depth_vis
    bool visible(std::size_t f, std::size_t p) const { return frame_vis.get(f, p) && depth_vis.get(f, p); }
};

/// Set iff 0 < x < W, 0 < y < H and cam_z > 0.
VisibilityMatrix compute_frame_visibility(const ProjectedPoints& proj, const FrameSet& frames, unsigned threads = 1);

/// Set iff frame-visible, the depth sampled at the rounded pixel is valid and
/// |cam_z - depth| < tau_depth.
VisibilityMatrix compute_occlusion_visibility(const ProjectedPoints& proj, const FrameSet& frames,
                                              const VisibilityMatrix& frame_vis, double tau_depth,
                                              unsigned threads = 1);

VisibilityMatrices compute_visibility(const ProjectedPoints& proj, const FrameSet& frames, double tau_depth,
                                      unsigned threads = 1);

/// Nearest pixel index for a real coordinate, clamped to [0, extent - 1].
int sample_index(double coord, int extent);

/// Inclusive integer pixel range covered by a box: rounded corners clamped to
/// the image. Shared by label-map painting and pixel lifting.
struct PixelSpan {
    int u_begin = 0, u_end = 0;  // inclusive
    int v_begin = 0, v_end = 0;  // inclusive
};
PixelSpan pixel_span(const DetectionBox& box, int width, int height);

/// Backprojects valid-depth pixels of the box (sampled every pixel_stride
/// pixels in both axes) into world coordinates, in row-major pixel order.
/// Returns an empty vector when no sampled pixel has valid depth.
std::vector<Vec3> try_lift_box_pixels(const DetectionBox& box, const Frame& frame, int pixel_stride);

/// Same as try_lift_box_pixels but throws EmptyLift when nothing lifts.
std::vector<Vec3> lift_box_pixels(const DetectionBox& box, const Frame& frame, int pixel_stride);

struct OrientedBox3D {
    Vec3 center = Vec3::Zero();
    Mat3 axes = Mat3::Identity();  // columns are the box axes
    Vec3 half_extents = Vec3::Zero();

    static constexpr double kContainmentSlack = 1e-9;

    bool contains(const Vec3& p) const;
    double volume() const { return 8.0 * half_extents.prod(); }
};

/// PCA box: axes are covariance eigenvectors in descending eigenvalue order.
/// The first two axes are signed to have a non-negative component sum (ties
/// toward +x, then +y); the third is their cross product, so `axes` is a
/// proper rotation.
OrientedBox3D fit_oriented_box(std::span<const Vec3> points);

/// Fraction of the masked points inside the box; 0 for an empty mask.
double points_in_box_fraction(const OrientedBox3D& box, const ScenePointCloud& cloud, const BinaryMask3D& indices);

/// One flag per cloud point: 1 iff the box contains it.
std::vector<std::uint8_t> containment_flags(const OrientedBox3D& box, const ScenePointCloud& cloud);

}  // namespace boxfuse
