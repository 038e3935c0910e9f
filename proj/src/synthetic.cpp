#include "boxfuse/synthetic.hpp"

#include "boxfuse/error.hpp"
#include "boxfuse/geometry.hpp"
#include "boxfuse/scene_io.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

namespace boxfuse {

namespace {

// Draws from mt19937_64 directly so sequences do not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = gen_() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

constexpr double kHitEpsilon = 1e-12;

// Half-size ranges per size bucket (small, medium, large).
constexpr double kBucketLo[3] = {0.08, 0.13, 0.20};
constexpr double kBucketHi[3] = {0.12, 0.19, 0.28};

double footprint_radius(const SynthObject& o) {
    return o.kind == ShapeKind::Cuboid ? std::hypot(o.half_size.x(), o.half_size.y())
                                       : std::max(o.half_size.x(), o.half_size.y());
}

struct SurfaceSample {
    Vec3 point;
    Vec3 normal;
};

std::vector<SurfaceSample> sample_cuboid(const SynthObject& o, double density, Rng& rng) {
    const Vec3 h = o.half_size;
    // Side faces and the top; the face resting on the floor is never observed.
    const double areas[5] = {4 * h.y() * h.z(), 4 * h.y() * h.z(), 4 * h.x() * h.z(), 4 * h.x() * h.z(),
                             4 * h.x() * h.y()};
    const double total = areas[0] + areas[1] + areas[2] + areas[3] + areas[4];
    const auto n = static_cast<std::size_t>(std::max(100.0, std::round(total * density)));
    const Mat3 r = o.rotation();
    std::vector<SurfaceSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double pick = rng.uniform() * total;
        int face = 0;
        while (face < 4 && pick >= areas[face]) pick -= areas[face++];
        const double a = rng.uniform(-1, 1);
        const double b = rng.uniform(-1, 1);
        Vec3 local, normal;
        switch (face) {
            case 0: local = {h.x(), a * h.y(), b * h.z()}; normal = Vec3::UnitX(); break;
            case 1: local = {-h.x(), a * h.y(), b * h.z()}; normal = -Vec3::UnitX(); break;
            case 2: local = {a * h.x(), h.y(), b * h.z()}; normal = Vec3::UnitY(); break;
            case 3: local = {a * h.x(), -h.y(), b * h.z()}; normal = -Vec3::UnitY(); break;
            default: local = {a * h.x(), b * h.y(), h.z()}; normal = Vec3::UnitZ(); break;
        }
        out.push_back({o.center + r * local, r * normal});
    }
    return out;
}

double ellipsoid_area(const Vec3& s) {
    // Knud Thomsen's approximation; only used to size the sample count.
    constexpr double p = 1.6075;
    const double ab = std::pow(s.x() * s.y(), p), ac = std::pow(s.x() * s.z(), p), bc = std::pow(s.y() * s.z(), p);
    return 4 * std::numbers::pi * std::pow((ab + ac + bc) / 3.0, 1.0 / p);
}

std::vector<SurfaceSample> sample_ellipsoid(const SynthObject& o, double density, Rng& rng) {
    const Vec3 s = o.half_size;
    const auto n = static_cast<std::size_t>(std::max(100.0, std::round(ellipsoid_area(s) * density)));
    const Mat3 r = o.rotation();
    const double g_max = 1.0 / s.minCoeff();
    std::vector<SurfaceSample> out;
    out.reserve(n);
    while (out.size() < n) {
        // Uniform direction on the sphere, then rejection by the area element.
        const double z = rng.uniform(-1, 1);
        const double phi = rng.uniform(0, 2 * std::numbers::pi);
        const double rho = std::sqrt(std::max(0.0, 1 - z * z));
        const Vec3 u(rho * std::cos(phi), rho * std::sin(phi), z);
        const double g = u.cwiseQuotient(s).norm();
        if (rng.uniform() * g_max > g) continue;
        const Vec3 local = u.cwiseProduct(s);
        const Vec3 normal = local.cwiseQuotient(s.cwiseProduct(s)).normalized();
        out.push_back({o.center + r * local, r * normal});
    }
    return out;
}

}  // namespace

Mat3 SynthObject::rotation() const { return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(); }

std::optional<double> SynthObject::intersect(const Vec3& origin, const Vec3& dir) const {
    const Mat3 r = rotation();
    const Vec3 o = r.transpose() * (origin - center);
    const Vec3 d = r.transpose() * dir;
    if (kind == ShapeKind::Cuboid) {
        double t_near = -std::numeric_limits<double>::infinity();
        double t_far = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            if (d[a] == 0) {
                if (std::abs(o[a]) > half_size[a]) return std::nullopt;
                continue;
            }
            double t0 = (-half_size[a] - o[a]) / d[a];
            double t1 = (half_size[a] - o[a]) / d[a];
            if (t0 > t1) std::swap(t0, t1);
            t_near = std::max(t_near, t0);
            t_far = std::min(t_far, t1);
        }
        if (t_near > t_far || t_far <= kHitEpsilon) return std::nullopt;
        return t_near > kHitEpsilon ? t_near : t_far;
    }
    const Vec3 os = o.cwiseQuotient(half_size);
    const Vec3 ds = d.cwiseQuotient(half_size);
    const double a = ds.squaredNorm();
    const double b = 2 * os.dot(ds);
    const double c = os.squaredNorm() - 1;
    const double disc = b * b - 4 * a * c;
    if (disc < 0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // Numerically stable root pair.
    const double q = -0.5 * (b + std::copysign(sq, b));
    double t0 = q / a;
    double t1 = q != 0 ? c / q : t0;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > kHitEpsilon) return t0;
    if (t1 > kHitEpsilon) return t1;
    return std::nullopt;
}

std::optional<RayHit> first_hit(const std::vector<SynthObject>& objects, const Vec3& origin, const Vec3& dir) {
    std::optional<RayHit> best;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (auto t = objects[i].intersect(origin, dir)) {
            if (!best || *t < best->t) best = RayHit{*t, i};
        }
    }
    return best;
}

Mat4 look_at_extrinsic(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right);
    Mat4 e = Mat4::Identity();
    e.block<1, 3>(0, 0) = right.transpose();
    e.block<1, 3>(1, 0) = down.transpose();
    e.block<1, 3>(2, 0) = forward.transpose();
    e.topRightCorner<3, 1>() = -e.topLeftCorner<3, 3>() * eye;
    return e;
}

DepthMap render_depth(const std::vector<SynthObject>& objects, const CameraParams& camera,
                      std::optional<double> floor_half_extent) {
    DepthMap depth(camera.width, camera.height);
    const Mat4 pose = camera.pose();
    const Mat3 rot = pose.topLeftCorner<3, 3>();
    const Vec3 eye = pose.topRightCorner<3, 1>();
    for (int v = 0; v < camera.height; ++v) {
        for (int u = 0; u < camera.width; ++u) {
            // Direction with unit camera-frame z, so the ray parameter is the depth.
            const Vec3 d_cam((u - camera.cx()) / camera.fx(), (v - camera.cy()) / camera.fy(), 1.0);
            const Vec3 dir = rot * d_cam;
            double t = 0;
            if (auto hit = first_hit(objects, eye, dir)) t = hit->t;
            if (floor_half_extent && dir.z() < 0) {
                const double tf = -eye.z() / dir.z();
                const Vec3 p = eye + tf * dir;
                if (std::abs(p.x()) <= *floor_half_extent && std::abs(p.y()) <= *floor_half_extent &&
                    (t == 0 || tf < t))
                    t = tf;
            }
            depth.at(u, v) = t;
        }
    }
    return depth;
}

SyntheticScene generate_synthetic_scene(const SynthSpec& spec) {
    if (spec.min_objects < 1 || spec.max_objects < spec.min_objects)
        throw Error(ErrorKind::InvalidConfig, "object count range must satisfy 1 <= min <= max");
    if (spec.frame_count < 1 || spec.width < 1 || spec.height < 1)
        throw Error(ErrorKind::InvalidConfig, "frame count and image size must be positive");
    if (!(spec.withhold_fraction >= 0 && spec.withhold_fraction <= 1))
        throw Error(ErrorKind::InvalidConfig, "withhold fraction must lie in [0,1]");

    Rng rng(spec.seed);
    SyntheticScene scene;
    const int n_objects = rng.uniform_int(spec.min_objects, spec.max_objects);
    constexpr double kGap = 0.12;
    constexpr int kMaxAttempts = 500;
    constexpr int kMaxLayouts = 50;
    const double half_room = spec.room_extent / 2;

    std::vector<SynthObject> shapes(n_objects);
    for (auto& obj : shapes) {
        obj.kind = rng.uniform_int(0, 1) == 0 ? ShapeKind::Cuboid : ShapeKind::Ellipsoid;
        const int bucket = rng.uniform_int(0, 2);
        for (int a = 0; a < 3; ++a) obj.half_size[a] = spec.size_scale * rng.uniform(kBucketLo[bucket], kBucketHi[bucket]);
        obj.yaw = rng.uniform(0, std::numbers::pi);
        obj.class_id = (obj.kind == ShapeKind::Cuboid ? 0 : 3) + bucket;
    }
    // Greedy placement can box itself in; start the layout over a few times.
    for (int layout = 0; layout < kMaxLayouts && scene.objects.size() < shapes.size(); ++layout) {
        scene.objects.clear();
        for (auto obj : shapes) {
            const double radius = footprint_radius(obj);
            const double lim = half_room - radius;
            bool placed = false;
            for (int attempt = 0; attempt < kMaxAttempts && !placed && lim > 0; ++attempt) {
                obj.center = Vec3(rng.uniform(-lim, lim), rng.uniform(-lim, lim), obj.half_size.z());
                placed = std::all_of(scene.objects.begin(), scene.objects.end(), [&](const SynthObject& other) {
                    return (obj.center - other.center).head<2>().norm() >= radius + footprint_radius(other) + kGap;
                });
            }
            if (!placed) break;
            scene.objects.push_back(obj);
        }
    }
    if (scene.objects.size() < shapes.size())
        throw Error(ErrorKind::InfeasiblePlacement,
                    "could not place " + std::to_string(n_objects) + " objects without overlap");

    std::vector<SurfaceSample> samples;
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const auto& o = scene.objects[i];
        auto s = o.kind == ShapeKind::Cuboid ? sample_cuboid(o, spec.point_density, rng)
                                             : sample_ellipsoid(o, spec.point_density, rng);
        owner.insert(owner.end(), s.size(), i);
        samples.insert(samples.end(), s.begin(), s.end());
    }
    if (spec.floor) {
        scene.floor_half_extent = half_room;
        const auto n_floor = static_cast<std::size_t>(std::round(spec.room_extent * spec.room_extent * spec.floor_density));
        for (std::size_t i = 0; i < n_floor; ++i) {
            samples.push_back({Vec3(rng.uniform(-half_room, half_room), rng.uniform(-half_room, half_room), 0.0),
                               Vec3::UnitZ()});
            owner.push_back(scene.objects.size());  // belongs to no instance
        }
    }
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    scene.cloud.normals.emplace();
    std::vector<std::vector<PointIndex>> members(scene.objects.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        scene.cloud.points.push_back(samples[order[i]].point);
        scene.cloud.normals->push_back(samples[order[i]].normal);
        if (owner[order[i]] < members.size()) members[owner[order[i]]].push_back(static_cast<PointIndex>(i));
    }
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        scene.gt.push_back({BinaryMask3D(std::move(members[i])), scene.objects[i].class_id});

    // Camera orbit around the room, looking slightly above the floor centre.
    const double orbit_radius = spec.orbit_radius > 0 ? spec.orbit_radius : 1.28 * spec.room_extent;
    const double orbit_height = spec.camera_height > 0 ? spec.camera_height : 1.2 * spec.room_extent;
    const double fx = spec.width / (2.0 * std::tan(spec.fov_deg / 2 * std::numbers::pi / 180.0));
    for (int f = 0; f < spec.frame_count; ++f) {
        const double angle = 2 * std::numbers::pi * f / spec.frame_count;
        const Vec3 eye(orbit_radius * std::cos(angle), orbit_radius * std::sin(angle), orbit_height);
        Frame frame;
        frame.frame_id = f;
        frame.camera.intrinsic = make_intrinsic(fx, fx, spec.width / 2.0, spec.height / 2.0);
        frame.camera.extrinsic = look_at_extrinsic(eye, Vec3(0, 0, 0.15));
        frame.camera.width = spec.width;
        frame.camera.height = spec.height;
        frame.depth = render_depth(scene.objects, frame.camera, scene.floor_half_extent);
        scene.frames.frames.push_back(std::move(frame));
        scene.frames.available_ids.push_back(f);
    }

    // Ideal detections: tight boxes around each object's visible projected points.
    const ProjectedPoints proj = project_all(scene.cloud, scene.frames);
    const VisibilityMatrices vis = compute_visibility(proj, scene.frames, spec.visibility_tau);
    constexpr std::size_t kMinVisiblePoints = 10;
    scene.ideal_detections.resize(scene.frames.size());
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
        for (std::size_t o = 0; o < scene.objects.size(); ++o) {
            double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
            std::size_t count = 0;
            for (PointIndex p : scene.gt[o].mask.indices()) {
                if (!vis.visible(f, p)) continue;
                const std::size_t i = proj.at(f, p);
                x0 = std::min(x0, proj.pixel_x[i]);
                x1 = std::max(x1, proj.pixel_x[i]);
                y0 = std::min(y0, proj.pixel_y[i]);
                y1 = std::max(y1, proj.pixel_y[i]);
                ++count;
            }
            if (count < kMinVisiblePoints) continue;
            DetectionBox box;
            box.frame_id = scene.frames.frames[f].frame_id;
            box.class_id = scene.objects[o].class_id;
            box.confidence = 1.0;
            box.x_min = x0;
            box.y_min = y0;
            box.x_max = x1;
            box.y_max = y1;
            if (spec.jitter_px > 0) {
                box.x_min += rng.uniform(-spec.jitter_px, spec.jitter_px);
                box.y_min += rng.uniform(-spec.jitter_px, spec.jitter_px);
                box.x_max += rng.uniform(-spec.jitter_px, spec.jitter_px);
                box.y_max += rng.uniform(-spec.jitter_px, spec.jitter_px);
            }
            if (auto clipped = clip_box(box, spec.width, spec.height)) scene.ideal_detections[f].push_back(*clipped);
        }
    }

    std::vector<std::size_t> pick(scene.objects.size());
    for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
    rng.shuffle(pick);
    const auto n_withheld = static_cast<std::size_t>(std::llround(spec.withhold_fraction * scene.objects.size()));
    scene.withheld.assign(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n_withheld));
    std::sort(scene.withheld.begin(), scene.withheld.end());
    for (std::size_t o = 0; o < scene.objects.size(); ++o)
        if (!std::binary_search(scene.withheld.begin(), scene.withheld.end(), o))
            scene.partial_point_masks.push_back(scene.gt[o].mask);
    return scene;
}

void write_scene(const SyntheticScene& scene, const std::filesystem::path& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory / "frames");
    write_point_cloud(scene.cloud, directory / "cloud.ply");
    for (const Frame& frame : scene.frames.frames) write_frame(directory / "frames", frame);
    std::vector<DetectionBox> flat;
    for (const auto& per_frame : scene.ideal_detections) flat.insert(flat.end(), per_frame.begin(), per_frame.end());
    write_detections(directory / "detections.jsonl", flat);
    write_masks(directory / "masks.txt", scene.partial_point_masks, scene.cloud.size());
    write_ground_truth(directory / "gt.txt", {scene.cloud.size(), scene.gt});
    std::ofstream out(directory / "withheld.txt");
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write withheld.txt");
    for (std::size_t o : scene.withheld) out << o << '\n';
}

}  // namespace boxfuse
