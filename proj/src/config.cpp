#include "boxfuse/config.hpp"

#include "boxfuse/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace boxfuse {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end || value.empty())
        throw Error(ErrorKind::InvalidConfig, std::string(key) + ": cannot parse '" + std::string(value) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw Error(ErrorKind::InvalidConfig, std::string(key) + ": expected true/false, got '" + std::string(value) + "'");
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void require(bool ok, const char* key, const char* what) {
    if (!ok) throw Error(ErrorKind::InvalidConfig, std::string(key) + " " + what);
}

bool unit_interval(double v) { return v >= 0 && v <= 1; }

}  // namespace

void validate(const PipelineConfig& c) {
    require(unit_interval(c.tau_box), "tau_box", "must lie in [0,1]");
    require(unit_interval(c.tau_spp), "tau_spp", "must lie in [0,1]");
    require(unit_interval(c.tau_merge), "tau_merge", "must lie in [0,1]");
    require(unit_interval(c.tau_filter), "tau_filter", "must lie in [0,1]");
    require(std::isfinite(c.tau_depth) && c.tau_depth > 0, "tau_depth", "must be positive");
    require(c.top_k >= 1, "top_k", "must be at least 1");
    require(c.frame_stride >= 1, "frame_stride", "must be at least 1");
    require(c.pixel_stride >= 1, "pixel_stride", "must be at least 1");
    require(std::isfinite(c.sp_granularity) && c.sp_granularity >= 0, "sp_granularity", "must be non-negative");
    require(c.sp_k >= 1, "sp_k", "must be at least 1");
    require(c.sp_min_size >= 1, "sp_min_size", "must be at least 1");
    require(std::isfinite(c.depth_scale) && c.depth_scale > 0, "depth_scale", "must be positive");
    require(c.min_lift_points >= 1, "min_lift_points", "must be at least 1");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "tau_box",     "tau_spp",        "tau_merge", "tau_filter",  "tau_depth",   "top_k",
        "frame_stride", "pixel_stride",  "sp_granularity", "sp_k",   "sp_min_size", "threads",
        "seed",        "depth_scale",    "invert_extrinsics", "min_lift_points"};
    return keys;
}

void apply_setting(PipelineConfig& c, std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "tau_box") c.tau_box = parse_number<double>(key, value);
    else if (key == "tau_spp") c.tau_spp = parse_number<double>(key, value);
    else if (key == "tau_merge") c.tau_merge = parse_number<double>(key, value);
    else if (key == "tau_filter") c.tau_filter = parse_number<double>(key, value);
    else if (key == "tau_depth") c.tau_depth = parse_number<double>(key, value);
    else if (key == "top_k") c.top_k = parse_number<int>(key, value);
    else if (key == "frame_stride") c.frame_stride = parse_number<int>(key, value);
    else if (key == "pixel_stride") c.pixel_stride = parse_number<int>(key, value);
    else if (key == "sp_granularity") c.sp_granularity = parse_number<double>(key, value);
    else if (key == "sp_k") c.sp_k = parse_number<int>(key, value);
    else if (key == "sp_min_size") c.sp_min_size = parse_number<int>(key, value);
    else if (key == "threads") c.threads = parse_number<unsigned>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "depth_scale") c.depth_scale = parse_number<double>(key, value);
    else if (key == "invert_extrinsics") c.invert_extrinsics = parse_bool(key, value);
    else if (key == "min_lift_points") c.min_lift_points = parse_number<std::size_t>(key, value);
    else throw Error(ErrorKind::InvalidConfig, "unknown key '" + std::string(key) + "'");
}

void apply_assignment(PipelineConfig& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw Error(ErrorKind::InvalidConfig, "expected key=value, got '" + std::string(assignment) + "'");
    apply_setting(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            apply_assignment(base, line);
        } catch (const Error& e) {
            throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), base);
}

std::string serialize_config(const PipelineConfig& c) {
    std::ostringstream out;
    out << "tau_box = " << format_double(c.tau_box) << '\n'
        << "tau_spp = " << format_double(c.tau_spp) << '\n'
        << "tau_merge = " << format_double(c.tau_merge) << '\n'
        << "tau_filter = " << format_double(c.tau_filter) << '\n'
        << "tau_depth = " << format_double(c.tau_depth) << '\n'
        << "top_k = " << c.top_k << '\n'
        << "frame_stride = " << c.frame_stride << '\n'
        << "pixel_stride = " << c.pixel_stride << '\n'
        << "sp_granularity = " << format_double(c.sp_granularity) << '\n'
        << "sp_k = " << c.sp_k << '\n'
        << "sp_min_size = " << c.sp_min_size << '\n'
        << "threads = " << c.threads << '\n'
        << "seed = " << c.seed << '\n'
        << "depth_scale = " << format_double(c.depth_scale) << '\n'
        << "invert_extrinsics = " << (c.invert_extrinsics ? "true" : "false") << '\n'
        << "min_lift_points = " << c.min_lift_points << '\n';
    return out.str();
}

}  // namespace boxfuse
