#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace boxfuse {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

using PointIndex = std::uint32_t;

/// Scene point cloud in world coordinates (meters). Normals are optional.
struct ScenePointCloud {
    std::vector<Vec3> points;
    std::optional<std::vector<Vec3>> normals;

    std::size_t size() const noexcept { return points.size(); }
    bool has_normals() const noexcept { return normals.has_value(); }
};

/// Checks N >= 1, finite coordinates and unit normals; throws boxfuse::Error.
void validate(const ScenePointCloud& cloud);

/// Pinhole camera. The intrinsic holds fx, fy, cx, cy in its upper-left 3x3;
/// the extrinsic maps world coordinates into the camera frame.
struct CameraParams {
    Mat4 intrinsic = Mat4::Identity();
    Mat4 extrinsic = Mat4::Identity();
    int width = 0;
    int height = 0;

    double fx() const { return intrinsic(0, 0); }
    double fy() const { return intrinsic(1, 1); }
    double cx() const { return intrinsic(0, 2); }
    double cy() const { return intrinsic(1, 2); }

    /// Camera-to-world transform.
    Mat4 pose() const;
};

Mat4 make_intrinsic(double fx, double fy, double cx, double cy);

/// Throws NonInvertibleExtrinsic unless the extrinsic is a rigid transform
/// (orthonormal rotation block within 1e-6, last row 0 0 0 1).
void validate(const CameraParams& camera);

/// Row-major depth image in meters; 0 marks an invalid pixel.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    DepthMap() = default;
    DepthMap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

    double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
    double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
};

struct Frame {
    int frame_id = 0;
    CameraParams camera;
    DepthMap depth;
    std::optional<std::string> image_path;
};

struct FrameSet {
    std::vector<Frame> frames;
    /// Every frame id found on disk, including ones skipped by the stride.
    std::vector<int> available_ids;

    std::size_t size() const noexcept { return frames.size(); }
    /// Position of a loaded frame id, or nullopt.
    std::optional<std::size_t> position_of(int frame_id) const;
};

struct DetectionBox {
    int frame_id = 0;
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    int class_id = 0;
    double confidence = 0;

    double area() const { return (x_max - x_min) * (y_max - y_min); }
};

/// Detections grouped by loaded frame position, in detection-file order.
using DetectionsByFrame = std::vector<std::vector<DetectionBox>>;

/// Sorted, duplicate-free set of point indices.
class BinaryMask3D {
public:
    BinaryMask3D() = default;

    /// Takes strictly increasing indices; throws std::invalid_argument otherwise.
    explicit BinaryMask3D(std::vector<PointIndex> sorted_indices);

    static BinaryMask3D from_unsorted(std::vector<PointIndex> indices);

    std::span<const PointIndex> indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    PointIndex front() const { return indices_.front(); }
    bool contains(PointIndex p) const;

    friend bool operator==(const BinaryMask3D&, const BinaryMask3D&) = default;

private:
    std::vector<PointIndex> indices_;
};

std::size_t intersection_size(const BinaryMask3D& a, const BinaryMask3D& b);
BinaryMask3D unite(const BinaryMask3D& a, const BinaryMask3D& b);

/// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double mask_iou(const BinaryMask3D& a, const BinaryMask3D& b);

enum class ProposalSource { PointBased, RGBDBased };

const char* to_string(ProposalSource source);

struct LabeledInstance {
    BinaryMask3D mask;
    int class_id = 0;
    double confidence = 0;
    ProposalSource source = ProposalSource::PointBased;

    friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

}  // namespace boxfuse
