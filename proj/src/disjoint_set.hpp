#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace boxfuse::detail {

/// Union-find with union by size and path halving. Tracks the component size
/// and the largest edge weight merged into each component.
class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.0) {
        std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Joins two roots; returns the surviving root.
    std::uint32_t join(std::uint32_t a, std::uint32_t b, double weight) {
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        internal_[a] = std::max({internal_[a], internal_[b], weight});
        return a;
    }

    std::size_t size(std::uint32_t root) const { return size_[root]; }
    double internal(std::uint32_t root) const { return internal_[root]; }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::size_t> size_;
    std::vector<double> internal_;
};

}  // namespace boxfuse::detail
