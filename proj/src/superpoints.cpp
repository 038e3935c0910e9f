#include "boxfuse/superpoints.hpp"

#include "boxfuse/error.hpp"
#include "boxfuse/parallel.hpp"
#include "disjoint_set.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace boxfuse {

namespace {

// Static k-d tree over a point array. Queries are exact, so the tree layout
// never affects which neighbours are returned.
class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& points) : points_(points), order_(points.size()) {
        std::iota(order_.begin(), order_.end(), PointIndex{0});
        if (!points.empty()) build(0, static_cast<int>(points.size()));
    }

    // Candidate ordering: (squared distance, index) lexicographic.
    struct Candidate {
        double d2;
        PointIndex index;
        bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
    };

    std::vector<PointIndex> query(PointIndex self, std::size_t k) const {
        std::priority_queue<Candidate> heap;  // max-heap: worst candidate on top
        if (k > 0 && !nodes_.empty()) search(0, self, k, heap);
        std::vector<PointIndex> out(heap.size());
        for (std::size_t i = out.size(); i-- > 0;) {
            out[i] = heap.top().index;
            heap.pop();
        }
        return out;
    }

private:
    static constexpr int kLeafSize = 12;

    struct Node {
        int begin, end;
        int axis = -1;  // -1 for leaves
        double split = 0;
        int left = -1, right = -1;
    };

    int build(int begin, int end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) return id;
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (int i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const int mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](PointIndex a, PointIndex b) {
                             const double ca = points_[a][axis], cb = points_[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        const double split = points_[order_[mid]][axis];
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(int node_id, PointIndex self, std::size_t k, std::priority_queue<Candidate>& heap) const {
        const Node& node = nodes_[node_id];
        const Vec3& q = points_[self];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const PointIndex idx = order_[i];
                if (idx == self) continue;
                const Candidate c{(points_[idx] - q).squaredNorm(), idx};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            return;
        }
        // Left subtree holds coordinates <= split, right holds >= split.
        const double diff = q[node.axis] - node.split;
        const int near = diff <= 0 ? node.left : node.right;
        const int far = diff <= 0 ? node.right : node.left;
        search(near, self, k, heap);
        // Equal distances must still be visited: a lower index may tie the worst.
        if (heap.size() < k || diff * diff <= heap.top().d2) search(far, self, k, heap);
    }

    const std::vector<Vec3>& points_;
    std::vector<PointIndex> order_;
    std::vector<Node> nodes_;
};

}  // namespace

void validate(const WeightedGraph& graph) {
    std::vector<std::pair<PointIndex, PointIndex>> keys;
    keys.reserve(graph.edges.size());
    for (const GraphEdge& e : graph.edges) {
        if (e.u == e.v) throw std::invalid_argument("graph has a self loop");
        if (e.u >= graph.node_count || e.v >= graph.node_count) throw std::invalid_argument("edge node out of range");
        if (!std::isfinite(e.weight) || e.weight < 0) throw std::invalid_argument("edge weight must be finite and >= 0");
        keys.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v));
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        throw std::invalid_argument("graph has a duplicate undirected edge");
}

std::vector<std::vector<PointIndex>> nearest_neighbors(const std::vector<Vec3>& points, std::size_t k,
                                                       unsigned threads) {
    const KdTree tree(points);
    std::vector<std::vector<PointIndex>> out(points.size());
    parallel_for(points.size(), threads,
                 [&](std::size_t i) { out[i] = tree.query(static_cast<PointIndex>(i), k); });
    return out;
}

WeightedGraph build_knn_graph(const ScenePointCloud& cloud, std::size_t k, unsigned threads) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const auto neighbors = nearest_neighbors(cloud.points, k, threads);

    std::vector<std::pair<PointIndex, PointIndex>> pairs;
    pairs.reserve(cloud.size() * k);
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        const auto u = static_cast<PointIndex>(i);
        for (PointIndex v : neighbors[i]) pairs.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    WeightedGraph graph;
    graph.node_count = cloud.size();
    graph.edges.resize(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        const auto [u, v] = pairs[i];
        double w;
        if (cloud.normals) {
            const double dot = (*cloud.normals)[u].dot((*cloud.normals)[v]);
            w = std::max(0.0, 1.0 - std::max(0.0, dot));
        } else {
            w = (cloud.points[u] - cloud.points[v]).norm();
        }
        graph.edges[i] = {u, v, w};
    });
    return graph;
}

SuperpointPartition SuperpointPartition::from_labels(const std::vector<std::uint32_t>& labels) {
    SuperpointPartition p;
    p.segment_of.resize(labels.size());
    // Labels may be sparse; map them lazily in first-appearance order, which is
    // ascending minimum member because points are scanned in index order.
    std::unordered_map<std::uint32_t, std::uint32_t> ids;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = ids.try_emplace(labels[i], static_cast<std::uint32_t>(p.members.size()));
        if (inserted) p.members.emplace_back();
        p.segment_of[i] = it->second;
        p.members[it->second].push_back(static_cast<PointIndex>(i));
    }
    return p;
}

SuperpointPartition segment_graph(const WeightedGraph& graph, double granularity, std::size_t min_segment_size) {
    std::vector<GraphEdge> edges = graph.edges;
    std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
        if (a.weight != b.weight) return a.weight < b.weight;
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });

    detail::DisjointSet sets(graph.node_count);
    for (const GraphEdge& e : edges) {
        const auto a = sets.find(e.u);
        const auto b = sets.find(e.v);
        if (a == b) continue;
        const double ta = sets.internal(a) + granularity / static_cast<double>(sets.size(a));
        const double tb = sets.internal(b) + granularity / static_cast<double>(sets.size(b));
        if (e.weight <= std::min(ta, tb)) sets.join(a, b, e.weight);
    }
    for (const GraphEdge& e : edges) {
        const auto a = sets.find(e.u);
        const auto b = sets.find(e.v);
        if (a != b && (sets.size(a) < min_segment_size || sets.size(b) < min_segment_size)) sets.join(a, b, e.weight);
    }

    std::vector<std::uint32_t> labels(graph.node_count);
    for (std::size_t i = 0; i < graph.node_count; ++i) labels[i] = sets.find(static_cast<std::uint32_t>(i));
    return SuperpointPartition::from_labels(labels);
}

SuperpointPartition compute_superpoints(const ScenePointCloud& cloud, const SuperpointParams& params,
                                        unsigned threads) {
    const WeightedGraph graph = build_knn_graph(cloud, params.k, threads);
    return segment_graph(graph, params.granularity, params.min_segment_size);
}

SuperpointPartition load_superpoints(const std::filesystem::path& path, std::size_t n_points) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open superpoint cache " + path.string());
    std::vector<std::uint32_t> labels;
    labels.reserve(n_points);
    long long v;
    while (in >> v) {
        if (v < 0 || v > std::numeric_limits<std::uint32_t>::max())
            throw Error(ErrorKind::MalformedFile, path.string() + ": bad segment id " + std::to_string(v));
        labels.push_back(static_cast<std::uint32_t>(v));
    }
    if (!in.eof()) throw Error(ErrorKind::MalformedFile, path.string() + ": non-numeric token");
    if (labels.size() != n_points)
        throw Error(ErrorKind::HeaderMismatch, path.string() + " has " + std::to_string(labels.size()) +
                                                   " entries but the cloud has " + std::to_string(n_points) + " points");
    return SuperpointPartition::from_labels(labels);
}

void write_superpoints(const std::filesystem::path& path, const SuperpointPartition& partition) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    for (std::uint32_t s : partition.segment_of) out << s << '\n';
}

}  // namespace boxfuse
