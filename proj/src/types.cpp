#include "boxfuse/types.hpp"

#include "boxfuse/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace boxfuse {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedFile: return "MalformedFile";
        case ErrorKind::EmptyCloud: return "EmptyCloud";
        case ErrorKind::NonFiniteCoordinate: return "NonFiniteCoordinate";
        case ErrorKind::MissingCameraFile: return "MissingCameraFile";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NonInvertibleExtrinsic: return "NonInvertibleExtrinsic";
        case ErrorKind::MalformedLine: return "MalformedLine";
        case ErrorKind::UnknownFrame: return "UnknownFrame";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::HeaderMismatch: return "HeaderMismatch";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::EmptyLift: return "EmptyLift";
        case ErrorKind::InfeasiblePlacement: return "InfeasiblePlacement";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

const char* to_string(ProposalSource source) {
    return source == ProposalSource::PointBased ? "point" : "rgbd";
}

void validate(const ScenePointCloud& cloud) {
    if (cloud.points.empty()) throw Error(ErrorKind::EmptyCloud, "point cloud has no points");
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (!cloud.points[i].allFinite())
            throw Error(ErrorKind::NonFiniteCoordinate, "point " + std::to_string(i));
    }
    if (cloud.normals) {
        if (cloud.normals->size() != cloud.points.size())
            throw Error(ErrorKind::MalformedFile, "normal count differs from point count");
        for (std::size_t i = 0; i < cloud.normals->size(); ++i) {
            const double len = (*cloud.normals)[i].norm();
            if (!std::isfinite(len) || std::abs(len - 1.0) > 1e-4)
                throw Error(ErrorKind::MalformedFile, "normal " + std::to_string(i) + " is not unit length");
        }
    }
}

Mat4 CameraParams::pose() const {
    Mat4 inv = Mat4::Identity();
    const Mat3 r = extrinsic.topLeftCorner<3, 3>();
    inv.topLeftCorner<3, 3>() = r.transpose();
    inv.topRightCorner<3, 1>() = -r.transpose() * extrinsic.topRightCorner<3, 1>();
    return inv;
}

Mat4 make_intrinsic(double fx, double fy, double cx, double cy) {
    Mat4 k = Mat4::Identity();
    k(0, 0) = fx;
    k(1, 1) = fy;
    k(0, 2) = cx;
    k(1, 2) = cy;
    return k;
}

void validate(const CameraParams& camera) {
    if (!(camera.fx() > 0) || !(camera.fy() > 0))
        throw Error(ErrorKind::MalformedFile, "intrinsic focal lengths must be positive");
    if (camera.width < 1 || camera.height < 1)
        throw Error(ErrorKind::DimensionMismatch, "image dimensions must be positive");
    const Mat4& e = camera.extrinsic;
    if (!e.allFinite()) throw Error(ErrorKind::NonInvertibleExtrinsic, "extrinsic has non-finite entries");
    const Mat3 r = e.topLeftCorner<3, 3>();
    const double ortho_err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
    const bool last_row_ok = e(3, 0) == 0 && e(3, 1) == 0 && e(3, 2) == 0 && e(3, 3) == 1;
    if (ortho_err > 1e-6 || !last_row_ok || std::abs(e.determinant()) < 1e-12)
        throw Error(ErrorKind::NonInvertibleExtrinsic, "extrinsic is not an invertible rigid transform");
}

std::optional<std::size_t> FrameSet::position_of(int frame_id) const {
    auto it = std::lower_bound(frames.begin(), frames.end(), frame_id,
                               [](const Frame& f, int id) { return f.frame_id < id; });
    if (it == frames.end() || it->frame_id != frame_id) return std::nullopt;
    return static_cast<std::size_t>(it - frames.begin());
}

BinaryMask3D::BinaryMask3D(std::vector<PointIndex> sorted_indices) : indices_(std::move(sorted_indices)) {
    for (std::size_t i = 1; i < indices_.size(); ++i) {
        if (indices_[i - 1] >= indices_[i])
            throw std::invalid_argument("mask indices must be strictly increasing");
    }
}

BinaryMask3D BinaryMask3D::from_unsorted(std::vector<PointIndex> indices) {
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    BinaryMask3D m;
    m.indices_ = std::move(indices);
    return m;
}

bool BinaryMask3D::contains(PointIndex p) const {
    return std::binary_search(indices_.begin(), indices_.end(), p);
}

std::size_t intersection_size(const BinaryMask3D& a, const BinaryMask3D& b) {
    auto ia = a.indices().begin();
    auto ib = b.indices().begin();
    const auto ea = a.indices().end();
    const auto eb = b.indices().end();
    std::size_t n = 0;
    while (ia != ea && ib != eb) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

BinaryMask3D unite(const BinaryMask3D& a, const BinaryMask3D& b) {
    std::vector<PointIndex> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.indices().begin(), a.indices().end(), b.indices().begin(), b.indices().end(),
                   std::back_inserter(out));
    return BinaryMask3D(std::move(out));
}

double mask_iou(const BinaryMask3D& a, const BinaryMask3D& b) {
    const std::size_t inter = intersection_size(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace boxfuse
