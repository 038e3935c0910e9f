#include "boxfuse/geometry.hpp"

#include "boxfuse/error.hpp"
#include "boxfuse/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace boxfuse {

ProjectedPoints project_all(const ScenePointCloud& cloud, const FrameSet& frames, unsigned threads) {
    ProjectedPoints proj;
    proj.frame_count = frames.size();
    proj.point_count = cloud.size();
    const std::size_t total = proj.frame_count * proj.point_count;
    proj.pixel_x.assign(total, 0.0);
    proj.pixel_y.assign(total, 0.0);
    proj.cam_z.assign(total, 0.0);

    parallel_for(frames.size(), threads, [&](std::size_t f) {
        const CameraParams& cam = frames.frames[f].camera;
        const Mat4 full = cam.intrinsic * cam.extrinsic;
        for (std::size_t p = 0; p < cloud.size(); ++p) {
            const Eigen::Vector4d h = full * cloud.points[p].homogeneous();
            const std::size_t i = proj.at(f, p);
            proj.cam_z[i] = h.z();
            if (h.z() > 0) {
                proj.pixel_x[i] = h.x() / h.z();
                proj.pixel_y[i] = h.y() / h.z();
            } else {
                proj.pixel_x[i] = std::nan("");
                proj.pixel_y[i] = std::nan("");
            }
        }
    });
    return proj;
}

VisibilityMatrix compute_frame_visibility(const ProjectedPoints& proj, const FrameSet& frames, unsigned threads) {
    VisibilityMatrix vis(proj.frame_count, proj.point_count);
    parallel_for(proj.frame_count, threads, [&](std::size_t f) {
        const double w = frames.frames[f].camera.width;
        const double h = frames.frames[f].camera.height;
        for (std::size_t p = 0; p < proj.point_count; ++p) {
            const std::size_t i = proj.at(f, p);
            const double x = proj.pixel_x[i];
            const double y = proj.pixel_y[i];
            vis.set(f, p, proj.cam_z[i] > 0 && 0 < x && x < w && 0 < y && y < h);
        }
    });
    return vis;
}

int sample_index(double coord, int extent) {
    const long r = std::lround(coord);
    return static_cast<int>(std::clamp<long>(r, 0, extent - 1));
}

VisibilityMatrix compute_occlusion_visibility(const ProjectedPoints& proj, const FrameSet& frames,
                                              const VisibilityMatrix& frame_vis, double tau_depth,
                                              unsigned threads) {
    VisibilityMatrix vis(proj.frame_count, proj.point_count);
    parallel_for(proj.frame_count, threads, [&](std::size_t f) {
        const Frame& frame = frames.frames[f];
        const int w = frame.depth.width;
        const int h = frame.depth.height;
        for (std::size_t p = 0; p < proj.point_count; ++p) {
            if (!frame_vis.get(f, p)) continue;
            const std::size_t i = proj.at(f, p);
            const double d = frame.depth.at(sample_index(proj.pixel_x[i], w), sample_index(proj.pixel_y[i], h));
            vis.set(f, p, d > 0 && std::abs(proj.cam_z[i] - d) < tau_depth);
        }
    });
    return vis;
}

VisibilityMatrices compute_visibility(const ProjectedPoints& proj, const FrameSet& frames, double tau_depth,
                                      unsigned threads) {
    VisibilityMatrices v;
    v.frame_vis = compute_frame_visibility(proj, frames, threads);
    v.depth_vis = compute_occlusion_visibility(proj, frames, v.frame_vis, tau_depth, threads);
    return v;
}

PixelSpan pixel_span(const DetectionBox& box, int width, int height) {
    return {sample_index(box.x_min, width), sample_index(box.x_max, width), sample_index(box.y_min, height),
            sample_index(box.y_max, height)};
}

std::vector<Vec3> try_lift_box_pixels(const DetectionBox& box, const Frame& frame, int pixel_stride) {
    if (pixel_stride < 1) throw Error(ErrorKind::InvalidConfig, "pixel stride must be >= 1");
    const CameraParams& cam = frame.camera;
    const PixelSpan span = pixel_span(box, frame.depth.width, frame.depth.height);
    const Mat4 pose = cam.pose();
    const Mat3 rot = pose.topLeftCorner<3, 3>();
    const Vec3 trans = pose.topRightCorner<3, 1>();

    std::vector<Vec3> out;
    for (int v = span.v_begin; v <= span.v_end; v += pixel_stride) {
        for (int u = span.u_begin; u <= span.u_end; u += pixel_stride) {
            const double d = frame.depth.at(u, v);
            if (!(d > 0)) continue;
            const Vec3 cam_pt((u - cam.cx()) * d / cam.fx(), (v - cam.cy()) * d / cam.fy(), d);
            out.push_back(rot * cam_pt + trans);
        }
    }
    return out;
}

std::vector<Vec3> lift_box_pixels(const DetectionBox& box, const Frame& frame, int pixel_stride) {
    auto pts = try_lift_box_pixels(box, frame, pixel_stride);
    if (pts.empty())
        throw Error(ErrorKind::EmptyLift, "no valid depth inside box in frame " + std::to_string(frame.frame_id));
    return pts;
}

bool OrientedBox3D::contains(const Vec3& p) const {
    const Vec3 local = axes.transpose() * (p - center);
    return (local.cwiseAbs().array() <= half_extents.array() + kContainmentSlack).all();
}

namespace {

void fix_axis_sign(Eigen::Ref<Vec3> axis) {
    const double s = axis.sum();
    bool flip = s < 0;
    if (s == 0) flip = axis.x() < 0 || (axis.x() == 0 && axis.y() < 0);
    if (flip) axis = -axis;
}

}  // namespace

OrientedBox3D fit_oriented_box(std::span<const Vec3> points) {
    OrientedBox3D box;
    if (points.empty()) return box;

    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : points) mean += p;
    mean /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : points) {
        const Vec3 d = p - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());

    const Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    const Mat3 ascending = solver.eigenvectors();
    Mat3 axes;
    axes.col(0) = ascending.col(2);
    axes.col(1) = ascending.col(1);
    fix_axis_sign(axes.col(0));
    fix_axis_sign(axes.col(1));
    axes.col(2) = axes.col(0).cross(axes.col(1)).normalized();

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const Vec3& p : points) {
        const Vec3 local = axes.transpose() * (p - mean);
        lo = lo.cwiseMin(local);
        hi = hi.cwiseMax(local);
    }
    box.axes = axes;
    box.half_extents = (hi - lo) / 2.0;
    box.center = mean + axes * ((hi + lo) / 2.0);
    return box;
}

double points_in_box_fraction(const OrientedBox3D& box, const ScenePointCloud& cloud, const BinaryMask3D& indices) {
    if (indices.empty()) return 0.0;
    std::size_t inside = 0;
    for (PointIndex p : indices.indices())
        if (box.contains(cloud.points[p])) ++inside;
    return static_cast<double>(inside) / static_cast<double>(indices.size());
}

std::vector<std::uint8_t> containment_flags(const OrientedBox3D& box, const ScenePointCloud& cloud) {
    // Axis-aligned bound of the oriented box for a cheap rejection test; padded
    // well past the slack so contains() alone decides boundary points.
    const Vec3 reach =
        box.axes.cwiseAbs() * (box.half_extents.array() + OrientedBox3D::kContainmentSlack).matrix() +
        Vec3::Constant(1e-6);
    const Vec3 lo = box.center - reach;
    const Vec3 hi = box.center + reach;
    std::vector<std::uint8_t> flags(cloud.size(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any()) continue;
        flags[i] = box.contains(p) ? 1 : 0;
    }
    return flags;
}

}  // namespace boxfuse
