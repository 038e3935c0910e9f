#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace boxfuse {

struct PipelineConfig {
    double tau_box = 0.75;
    double tau_spp = 0.5;
    double tau_merge = 0.25;
    double tau_filter = 0.75;
    double tau_depth = 0.10;  // meters
    int top_k = 5;
    int frame_stride = 10;
    int pixel_stride = 5;
    double sp_granularity = 0.05;
    int sp_k = 10;
    int sp_min_size = 20;
    unsigned threads = 0;  // 0 = auto
    std::uint64_t seed = 0;
    double depth_scale = 1000.0;
    bool invert_extrinsics = false;
    std::size_t min_lift_points = 10;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Throws InvalidConfig naming the first offending key.
void validate(const PipelineConfig& config);

/// Key names in serialization order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form. Throws InvalidConfig on unknown keys or
/// unparsable values; range checks are left to validate().
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);

/// Applies a `key=value` string (as given to --set).
void apply_assignment(PipelineConfig& config, std::string_view assignment);

/// Flat `key = value` lines; '#' starts a comment; blank lines are ignored.
/// Unset keys keep their values from `base`.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Every key, one per line, with reals in shortest round-trip form.
std::string serialize_config(const PipelineConfig& config);

}  // namespace boxfuse
