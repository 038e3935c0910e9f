#pragma once

#include "boxfuse/types.hpp"

#include <filesystem>
#include <vector>

namespace boxfuse {

struct GraphEdge {
    PointIndex u = 0;
    PointIndex v = 0;
    double weight = 0;

    friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct WeightedGraph {
    std::size_t node_count = 0;
    std::vector<GraphEdge> edges;
};

/// Throws std::invalid_argument on self loops, out-of-range nodes, negative or
/// non-finite weights, or duplicate undirected edges.
void validate(const WeightedGraph& graph);

/// k nearest neighbours of every point (Euclidean, ties to the lower index),
/// excluding the point itself.
std::vector<std::vector<PointIndex>> nearest_neighbors(const std::vector<Vec3>& points, std::size_t k,
                                                       unsigned threads = 1);

/// Undirected k-NN graph with edges stored as (min, max) in lexicographic
/// order. Weight is 1 - max(0, n_u . n_v) with normals, else the distance.
WeightedGraph build_knn_graph(const ScenePointCloud& cloud, std::size_t k, unsigned threads = 1);

/// Disjoint cover of [0, N). Segment ids follow ascending minimum member.
struct SuperpointPartition {
    std::vector<std::uint32_t> segment_of;
    std::vector<std::vector<PointIndex>> members;

    std::size_t segment_count() const noexcept { return members.size(); }

    /// Builds a partition from arbitrary labels, renumbering segments by
    /// their smallest member.
    static SuperpointPartition from_labels(const std::vector<std::uint32_t>& labels);
};

/// Graph-based segmentation: edges ascending by (weight, u, v); two
/// components merge when the edge weight is at most
/// min(Int(C1) + granularity/|C1|, Int(C2) + granularity/|C2|). Components
/// below min_segment_size are then absorbed along the lightest edge.
SuperpointPartition segment_graph(const WeightedGraph& graph, double granularity, std::size_t min_segment_size);

struct SuperpointParams {
    double granularity = 0.05;
    std::size_t k = 10;
    std::size_t min_segment_size = 20;
};

SuperpointPartition compute_superpoints(const ScenePointCloud& cloud, const SuperpointParams& params,
                                        unsigned threads = 1);

/// Cache format: line i holds the segment id of point i.
SuperpointPartition load_superpoints(const std::filesystem::path& path, std::size_t n_points);
void write_superpoints(const std::filesystem::path& path, const SuperpointPartition& partition);

}  // namespace boxfuse
