#include "boxfuse/scene_io.hpp"

#include "boxfuse/error.hpp"
#include "boxfuse/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace boxfuse {

using nlohmann::json;

namespace {

std::vector<double> read_numbers(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingCameraFile, "missing camera file " + path.string());
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::MalformedFile, path.string() + ": bad number '" + token + "'");
        }
    }
    return values;
}

Mat4 to_matrix(const std::vector<double>& v, const fs::path& path) {
    if (v.size() < 16) throw Error(ErrorKind::MalformedFile, path.string() + ": expected 16 values");
    Mat4 m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = v[r * 4 + c];
    return m;
}

Frame load_one_frame(const fs::path& dir, int id, const FrameLoadOptions& options) {
    const std::string stem = std::to_string(id);
    const fs::path depth_path = dir / (stem + ".depth.png");
    const fs::path intrinsic_path = dir / (stem + ".intrinsic.txt");
    const fs::path extrinsic_path = dir / (stem + ".extrinsic.txt");
    for (const auto& p : {intrinsic_path, extrinsic_path}) {
        if (!fs::exists(p)) throw Error(ErrorKind::MissingCameraFile, "missing camera file " + p.string());
    }

    Frame frame;
    frame.frame_id = id;
    frame.depth = read_depth_png(depth_path, options.depth_scale);
    frame.camera.width = frame.depth.width;
    frame.camera.height = frame.depth.height;

    const std::vector<double> intr = read_numbers(intrinsic_path);
    frame.camera.intrinsic = to_matrix(intr, intrinsic_path);
    if (intr.size() == 18) {
        // Optional trailing "width height" line.
        if (intr[16] != frame.depth.width || intr[17] != frame.depth.height)
            throw Error(ErrorKind::DimensionMismatch,
                        intrinsic_path.string() + " declares " + std::to_string(static_cast<long>(intr[16])) + "x" +
                            std::to_string(static_cast<long>(intr[17])) + " but depth is " +
                            std::to_string(frame.depth.width) + "x" + std::to_string(frame.depth.height));
    } else if (intr.size() != 16) {
        throw Error(ErrorKind::MalformedFile, intrinsic_path.string() + ": expected 16 or 18 values");
    }

    const std::vector<double> extr = read_numbers(extrinsic_path);
    if (extr.size() != 16) throw Error(ErrorKind::MalformedFile, extrinsic_path.string() + ": expected 16 values");
    frame.camera.extrinsic = to_matrix(extr, extrinsic_path);
    try {
        validate(frame.camera);
    } catch (const Error& e) {
        throw Error(e.kind(), "frame " + stem + ": " + e.what());
    }
    if (options.invert_extrinsics) frame.camera.extrinsic = frame.camera.pose();

    for (const char* ext : {".color.jpg", ".color.png", ".jpg"}) {
        const fs::path image = dir / (stem + ext);
        if (fs::exists(image)) {
            frame.image_path = image.string();
            break;
        }
    }
    return frame;
}

}  // namespace

Mat4 read_matrix4(const fs::path& path) {
    const std::vector<double> v = read_numbers(path);
    if (v.size() != 16) throw Error(ErrorKind::MalformedFile, path.string() + ": expected 16 values");
    return to_matrix(v, path);
}

void write_matrix4(const fs::path& path, const Mat4& m) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out.precision(17);
    for (int r = 0; r < 4; ++r) out << m(r, 0) << ' ' << m(r, 1) << ' ' << m(r, 2) << ' ' << m(r, 3) << '\n';
}

FrameSet load_frames(const fs::path& directory, const FrameLoadOptions& options) {
    if (options.stride < 1) throw Error(ErrorKind::InvalidConfig, "frame stride must be >= 1");
    if (!fs::is_directory(directory))
        throw Error(ErrorKind::MissingCameraFile, "frame directory " + directory.string() + " does not exist");

    static const std::regex depth_name(R"(^(\d+)\.depth\.png$)");
    FrameSet set;
    for (const auto& entry : fs::directory_iterator(directory)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, depth_name)) set.available_ids.push_back(std::stoi(m[1].str()));
    }
    std::sort(set.available_ids.begin(), set.available_ids.end());
    if (set.available_ids.empty())
        throw Error(ErrorKind::MissingCameraFile, "no *.depth.png frames in " + directory.string());

    std::vector<int> selected;
    for (int id : set.available_ids)
        if (id % options.stride == 0) selected.push_back(id);
    if (selected.empty())
        throw Error(ErrorKind::MissingCameraFile, "no frame id is a multiple of the stride");

    set.frames.resize(selected.size());
    parallel_for(selected.size(), options.threads,
                 [&](std::size_t i) { set.frames[i] = load_one_frame(directory, selected[i], options); });
    return set;
}

void write_frame(const fs::path& directory, const Frame& frame, double depth_scale) {
    const std::string stem = std::to_string(frame.frame_id);
    write_depth_png(frame.depth, directory / (stem + ".depth.png"), depth_scale);
    {
        std::ofstream out(directory / (stem + ".intrinsic.txt"));
        if (!out) throw Error(ErrorKind::IoFailure, "cannot write intrinsic for frame " + stem);
        out.precision(17);
        const Mat4& k = frame.camera.intrinsic;
        for (int r = 0; r < 4; ++r) out << k(r, 0) << ' ' << k(r, 1) << ' ' << k(r, 2) << ' ' << k(r, 3) << '\n';
        out << frame.camera.width << ' ' << frame.camera.height << '\n';
    }
    write_matrix4(directory / (stem + ".extrinsic.txt"), frame.camera.extrinsic);
}

// ---------------------------------------------------------------------------

std::vector<DetectionBox> read_detections(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open detections " + path.string());
    std::vector<DetectionBox> boxes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fail = [&](const std::string& why) -> Error {
            return Error(ErrorKind::MalformedLine, path.string() + ":" + std::to_string(line_no) + ": " + why);
        };
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw fail(e.what());
        }
        if (!j.is_object()) throw fail("expected an object");
        for (const char* key : {"frame_id", "box", "class_id", "confidence"})
            if (!j.contains(key)) throw fail(std::string("missing field ") + key);
        const json& b = j["box"];
        if (!j["frame_id"].is_number_integer() || !j["class_id"].is_number_integer())
            throw fail("frame_id and class_id must be integers");
        if (!b.is_array() || b.size() != 4) throw fail("box must be [x_min, y_min, x_max, y_max]");
        for (const auto& v : b)
            if (!v.is_number()) throw fail("box coordinates must be numbers");
        if (!j["confidence"].is_number()) throw fail("confidence must be a number");

        DetectionBox box;
        box.frame_id = j["frame_id"].get<int>();
        box.class_id = j["class_id"].get<int>();
        box.confidence = j["confidence"].get<double>();
        box.x_min = b[0].get<double>();
        box.y_min = b[1].get<double>();
        box.x_max = b[2].get<double>();
        box.y_max = b[3].get<double>();
        if (box.frame_id < 0 || box.class_id < 0) throw fail("negative frame_id or class_id");
        if (!(box.confidence >= 0.0 && box.confidence <= 1.0)) throw fail("confidence outside [0,1]");
        if (!(box.x_min < box.x_max && box.y_min < box.y_max)) throw fail("box has non-positive extent");
        boxes.push_back(box);
    }
    return boxes;
}

void write_detections(const fs::path& path, std::span<const DetectionBox> boxes) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    for (const DetectionBox& b : boxes) {
        json j = {{"frame_id", b.frame_id},
                  {"box", {b.x_min, b.y_min, b.x_max, b.y_max}},
                  {"class_id", b.class_id},
                  {"confidence", b.confidence}};
        out << j.dump() << '\n';
    }
}

std::optional<DetectionBox> clip_box(const DetectionBox& box, int width, int height) {
    DetectionBox c = box;
    c.x_min = std::clamp(box.x_min, 0.0, static_cast<double>(width));
    c.x_max = std::clamp(box.x_max, 0.0, static_cast<double>(width));
    c.y_min = std::clamp(box.y_min, 0.0, static_cast<double>(height));
    c.y_max = std::clamp(box.y_max, 0.0, static_cast<double>(height));
    if (!(c.x_min < c.x_max && c.y_min < c.y_max)) return std::nullopt;
    return c;
}

DetectionsByFrame assemble_detections(std::span<const DetectionBox> boxes, const FrameSet& frames) {
    DetectionsByFrame grouped(frames.size());
    for (const DetectionBox& box : boxes) {
        const auto pos = frames.position_of(box.frame_id);
        if (!pos) {
            if (std::binary_search(frames.available_ids.begin(), frames.available_ids.end(), box.frame_id))
                continue;  // frame exists but is not selected by the stride
            throw Error(ErrorKind::UnknownFrame, "detection references frame " + std::to_string(box.frame_id));
        }
        const CameraParams& cam = frames.frames[*pos].camera;
        if (auto clipped = clip_box(box, cam.width, cam.height)) grouped[*pos].push_back(*clipped);
    }
    return grouped;
}

// ---------------------------------------------------------------------------

std::vector<BinaryMask3D> load_masks(const fs::path& path, std::size_t n_points) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open masks " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::MalformedFile, path.string() + ": missing header");
    long long n_masks = -1, declared_points = -1;
    {
        std::istringstream hs(line);
        std::string extra;
        if (!(hs >> n_masks >> declared_points) || (hs >> extra) || n_masks < 0 || declared_points < 0)
            throw Error(ErrorKind::MalformedFile, path.string() + ": bad header '" + line + "'");
    }
    if (static_cast<std::size_t>(declared_points) != n_points)
        throw Error(ErrorKind::HeaderMismatch, path.string() + " declares " + std::to_string(declared_points) +
                                                   " points but the cloud has " + std::to_string(n_points));
    std::vector<BinaryMask3D> masks;
    masks.reserve(static_cast<std::size_t>(n_masks));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::vector<PointIndex> indices;
        long long v;
        while (ls >> v) {
            if (v < 0 || static_cast<unsigned long long>(v) >= n_points)
                throw Error(ErrorKind::IndexOutOfRange, path.string() + ":" + std::to_string(line_no) + ": index " +
                                                            std::to_string(v) + " outside [0, " +
                                                            std::to_string(n_points) + ")");
            if (!indices.empty() && static_cast<PointIndex>(v) <= indices.back())
                throw Error(ErrorKind::MalformedFile,
                            path.string() + ":" + std::to_string(line_no) + ": indices must be strictly ascending");
            indices.push_back(static_cast<PointIndex>(v));
        }
        if (!ls.eof()) throw Error(ErrorKind::MalformedFile, path.string() + ":" + std::to_string(line_no) + ": bad token");
        masks.emplace_back(std::move(indices));
    }
    if (masks.size() != static_cast<std::size_t>(n_masks))
        throw Error(ErrorKind::MalformedFile, path.string() + ": header declares " + std::to_string(n_masks) +
                                                  " masks, found " + std::to_string(masks.size()));
    return masks;
}

void write_masks(const fs::path& path, std::span<const BinaryMask3D> masks, std::size_t n_points) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out << masks.size() << ' ' << n_points << '\n';
    for (const BinaryMask3D& m : masks) {
        if (m.empty()) throw Error(ErrorKind::IoFailure, "refusing to write an empty mask");
        bool first = true;
        for (PointIndex p : m.indices()) {
            if (!first) out << ' ';
            out << p;
            first = false;
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

void sort_for_output(std::vector<LabeledInstance>& instances) {
    std::sort(instances.begin(), instances.end(), [](const LabeledInstance& a, const LabeledInstance& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.class_id != b.class_id) return a.class_id < b.class_id;
        if (a.mask.front() != b.mask.front()) return a.mask.front() < b.mask.front();
        if (a.source != b.source) return a.source < b.source;
        return std::lexicographical_compare(a.mask.indices().begin(), a.mask.indices().end(),
                                            b.mask.indices().begin(), b.mask.indices().end());
    });
}

void save_labeled_instances(std::span<const LabeledInstance> instances, const fs::path& path) {
    std::vector<LabeledInstance> ordered(instances.begin(), instances.end());
    for (const auto& inst : ordered)
        if (inst.mask.empty()) throw Error(ErrorKind::IoFailure, "instance with empty mask");
    sort_for_output(ordered);

    // Write to a sibling file first so a failure never leaves a partial output behind.
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
        for (const LabeledInstance& inst : ordered) {
            json j = {{"class_id", inst.class_id},
                      {"confidence", inst.confidence},
                      {"source", to_string(inst.source)},
                      {"mask", std::vector<PointIndex>(inst.mask.indices().begin(), inst.mask.indices().end())}};
            out << j.dump() << '\n';
        }
        if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::IoFailure, "cannot move output into place: " + ec.message());
}

std::vector<LabeledInstance> load_labeled_instances(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    std::vector<LabeledInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            LabeledInstance inst;
            inst.class_id = j.at("class_id").get<int>();
            inst.confidence = j.at("confidence").get<double>();
            const std::string source = j.at("source").get<std::string>();
            if (source == "point") inst.source = ProposalSource::PointBased;
            else if (source == "rgbd") inst.source = ProposalSource::RGBDBased;
            else throw std::invalid_argument("unknown source '" + source + "'");
            inst.mask = BinaryMask3D(j.at("mask").get<std::vector<PointIndex>>());
            if (inst.mask.empty()) throw std::invalid_argument("empty mask");
            out.push_back(std::move(inst));
        } catch (const std::exception& e) {
            throw Error(ErrorKind::MalformedLine, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace boxfuse
