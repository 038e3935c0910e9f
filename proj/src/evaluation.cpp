#include "boxfuse/evaluation.hpp"

#include "boxfuse/error.hpp"
#include "boxfuse/scene_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace boxfuse {

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open ground truth " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::MalformedFile, path.string() + ": missing header");
    long long n_inst = -1, n_points = -1;
    {
        std::istringstream hs(line);
        if (!(hs >> n_inst >> n_points) || n_inst < 0 || n_points < 0)
            throw Error(ErrorKind::MalformedFile, path.string() + ": bad header '" + line + "'");
    }
    GroundTruth gt;
    gt.n_points = static_cast<std::size_t>(n_points);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        long long cls = -1;
        if (!(ls >> cls) || cls < 0)
            throw Error(ErrorKind::MalformedLine, path.string() + ":" + std::to_string(line_no) + ": bad class id");
        std::vector<PointIndex> indices;
        long long v;
        while (ls >> v) {
            if (v < 0 || v >= n_points)
                throw Error(ErrorKind::IndexOutOfRange,
                            path.string() + ":" + std::to_string(line_no) + ": index " + std::to_string(v));
            indices.push_back(static_cast<PointIndex>(v));
        }
        if (!ls.eof()) throw Error(ErrorKind::MalformedLine, path.string() + ":" + std::to_string(line_no));
        if (indices.empty())
            throw Error(ErrorKind::MalformedLine, path.string() + ":" + std::to_string(line_no) + ": empty instance");
        gt.instances.push_back({BinaryMask3D::from_unsorted(std::move(indices)), static_cast<int>(cls)});
    }
    if (gt.instances.size() != static_cast<std::size_t>(n_inst))
        throw Error(ErrorKind::MalformedFile, path.string() + ": header declares " + std::to_string(n_inst) +
                                                  " instances, found " + std::to_string(gt.instances.size()));
    return gt;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out << gt.instances.size() << ' ' << gt.n_points << '\n';
    for (const auto& inst : gt.instances) {
        out << inst.class_id;
        for (PointIndex p : inst.mask.indices()) out << ' ' << p;
        out << '\n';
    }
}

std::array<double, 10> coco_thresholds() {
    std::array<double, 10> t{};
    for (int i = 0; i < 10; ++i) t[i] = (50 + 5 * i) / 100.0;
    return t;
}

std::optional<double> compute_ap(std::span<const LabeledInstance> predictions,
                                 std::span<const GroundTruthInstance> gt, int class_id, double iou_threshold) {
    std::vector<const GroundTruthInstance*> targets;
    for (const auto& g : gt)
        if (g.class_id == class_id) targets.push_back(&g);
    if (targets.empty()) return std::nullopt;

    std::vector<LabeledInstance> ranked;
    for (const auto& p : predictions)
        if (p.class_id == class_id) ranked.push_back(p);
    if (ranked.empty()) return 0.0;
    sort_for_output(ranked);

    std::vector<bool> matched(targets.size(), false);
    std::vector<double> precision(ranked.size());
    std::vector<double> recall(ranked.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        std::optional<std::size_t> best;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < targets.size(); ++g) {
            if (matched[g]) continue;
            const double iou = mask_iou(ranked[i].mask, targets[g]->mask);
            if (iou >= iou_threshold && iou > best_iou) {
                best_iou = iou;
                best = g;
            }
        }
        if (best) {
            matched[*best] = true;
            ++tp;
        }
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(targets.size());
    }

    // All-point interpolation with the usual sentinels.
    std::vector<double> mrec{0.0};
    std::vector<double> mpre{0.0};
    mrec.insert(mrec.end(), recall.begin(), recall.end());
    mpre.insert(mpre.end(), precision.begin(), precision.end());
    mrec.push_back(1.0);
    mpre.push_back(0.0);
    for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
    double ap = 0.0;
    for (std::size_t i = 0; i + 1 < mrec.size(); ++i)
        if (mrec[i + 1] != mrec[i]) ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1];
    return ap;
}

APReport compute_map_suite(std::span<const LabeledInstance> predictions, std::span<const GroundTruthInstance> gt,
                           const std::optional<std::set<int>>& class_subset) {
    APReport report;
    std::set<int> classes;
    for (const auto& g : gt)
        if (!class_subset || class_subset->count(g.class_id)) classes.insert(g.class_id);
    report.classes.assign(classes.begin(), classes.end());

    const auto coco = coco_thresholds();
    report.thresholds.push_back(0.25);
    report.thresholds.insert(report.thresholds.end(), coco.begin(), coco.end());
    if (classes.empty()) return report;

    double sum_50_95 = 0, sum_50 = 0, sum_25 = 0;
    for (int cls : classes) {
        std::vector<double> aps;
        for (double t : report.thresholds) aps.push_back(*compute_ap(predictions, gt, cls, t));
        sum_25 += aps[0];
        sum_50 += aps[1];
        sum_50_95 += std::accumulate(aps.begin() + 1, aps.end(), 0.0) / 10.0;
        report.per_class_ap[cls] = std::move(aps);
    }
    const double n = static_cast<double>(classes.size());
    report.map_50_95 = sum_50_95 / n;
    report.map_50 = sum_50 / n;
    report.map_25 = sum_25 / n;
    return report;
}

nlohmann::json to_json(const APReport& report) {
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [cls, aps] : report.per_class_ap) per_class[std::to_string(cls)] = aps;
    return {{"map_50_95", report.map_50_95}, {"map_50", report.map_50},     {"map_25", report.map_25},
            {"classes", report.classes},     {"thresholds", report.thresholds}, {"per_class_ap", per_class}};
}

void write_report(const APReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out << to_json(report).dump(2) << '\n';
}

}  // namespace boxfuse
