#pragma once

// Exact Euclidean nearest-neighbour index with insertion.
//
// A static k-d tree covers the first `built_` points; later insertions sit in
// a linearly scanned buffer until it outgrows a quarter of the tree, at which
// point the whole tree is rebuilt.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "annr/errors.hpp"
#include "annr/geometry.hpp"

namespace annr {

inline constexpr double kDuplicateDistance = 1e-12;

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
};

class SpatialIndex {
public:
    using ConstPointRef = Eigen::Map<const Eigen::VectorXd>;

    explicit SpatialIndex(std::size_t dim) : dim_(dim) {
        if (dim == 0) throw InvalidInput("dimension must be at least 1");
    }

    /// Index over `points`; throws on empty input or near-duplicates.
    static SpatialIndex build(std::span<const Point> points) {
        if (points.empty()) throw InvalidInput("cannot build an index over no points");
        SpatialIndex index(static_cast<std::size_t>(points.front().size()));
        index.coords_.reserve(points.size() * index.dim_);
        for (const auto& p : points) {
            index.check_point(p);
            index.coords_.insert(index.coords_.end(), p.data(), p.data() + p.size());
        }
        index.rebuild();
        for (std::size_t i = 0; index.size() > 1 && i < index.size(); ++i) {
            const std::size_t self[1] = {i};
            if (index.nearest(points[i], self).distance < kDuplicateDistance) {
                throw DuplicatePoint("duplicate point in build input");
            }
        }
        return index;
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return coords_.size() / dim_; }
    bool empty() const { return coords_.empty(); }

    ConstPointRef point(std::size_t i) const {
        return ConstPointRef(coords_.data() + i * dim_, static_cast<Eigen::Index>(dim_));
    }

    /// Appends `p` and returns its index.
    std::size_t insert(const Point& p) {
        check_point(p);
        if (!empty() && nearest(p).distance < kDuplicateDistance) {
            throw DuplicatePoint("point duplicates an existing datapoint");
        }
        coords_.insert(coords_.end(), p.data(), p.data() + p.size());
        const std::size_t buffered = size() - built_;
        if (buffered > std::max<std::size_t>(16, built_ / 4)) rebuild();
        return size() - 1;
    }

    /// Closest non-excluded point; ties go to the lowest index.
    Neighbor nearest(const Point& q, std::span<const std::size_t> exclude = {}) const {
        if (q.size() != static_cast<Eigen::Index>(dim_)) throw InvalidInput("query dimension mismatch");
        double best_d2 = std::numeric_limits<double>::infinity();
        std::size_t best = npos;
        auto consider = [&](std::size_t i) {
            if (is_excluded(i, exclude)) return;
            const double d2 = (point(i) - q).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                best_d2 = d2;
                best = i;
            }
        };
        if (!nodes_.empty()) nearest_rec(0, q, consider, best_d2);
        for (std::size_t i = built_; i < size(); ++i) consider(i);
        if (best == npos) throw InvalidInput("no points left after exclusions");
        return {best, std::sqrt(best_d2)};
    }

    /// Best-first traversal. `bound(lo, hi)` returns a lower bound of the
    /// objective over a node's bounding box (+inf to prune); `visit(i)` scores
    /// point i and returns the current best objective. Nodes are expanded in
    /// bound order until the next bound exceeds the incumbent.
    template <class Bound, class Visit>
    void best_first(Bound&& bound, Visit&& visit) const {
        double incumbent = std::numeric_limits<double>::infinity();
        for (std::size_t i = built_; i < size(); ++i) incumbent = visit(i);
        if (nodes_.empty()) return;

        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
        auto push = [&](std::size_t n) {
            const double lb = bound(node_lo(n), node_hi(n));
            if (lb <= incumbent) open.emplace(lb, n);
        };
        push(0);
        while (!open.empty()) {
            const auto [lb, n] = open.top();
            open.pop();
            if (lb > incumbent) break;
            const Node& node = nodes_[n];
            if (node.left == npos) {
                for (std::size_t k = node.begin; k < node.end; ++k) incumbent = visit(order_[k]);
            } else {
                push(node.left);
                push(node.right);
            }
        }
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    static constexpr std::size_t kLeafSize = 8;

    struct Node {
        std::size_t begin = 0, end = 0;
        std::size_t left = npos, right = npos;
        std::size_t split_dim = 0;
        double split = 0.0;
    };

    static bool is_excluded(std::size_t i, std::span<const std::size_t> exclude) {
        return std::find(exclude.begin(), exclude.end(), i) != exclude.end();
    }

    void check_point(const Point& p) const {
        if (p.size() != static_cast<Eigen::Index>(dim_)) throw InvalidInput("point dimension mismatch");
        if (!p.allFinite()) throw InvalidInput("point has non-finite coordinates");
    }

    ConstPointRef node_lo(std::size_t n) const {
        return ConstPointRef(boxes_.data() + 2 * n * dim_, static_cast<Eigen::Index>(dim_));
    }
    ConstPointRef node_hi(std::size_t n) const {
        return ConstPointRef(boxes_.data() + (2 * n + 1) * dim_, static_cast<Eigen::Index>(dim_));
    }

    void rebuild() {
        built_ = size();
        order_.resize(built_);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.clear();
        boxes_.clear();
        nodes_.reserve(2 * built_ / kLeafSize + 2);
        if (built_ > 0) build_rec(0, built_);
    }

    std::size_t build_rec(std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back(Node{begin, end});
        Eigen::VectorXd lo = point(order_[begin]);
        Eigen::VectorXd hi = lo;
        for (std::size_t k = begin + 1; k < end; ++k) {
            lo = lo.cwiseMin(point(order_[k]));
            hi = hi.cwiseMax(point(order_[k]));
        }
        boxes_.insert(boxes_.end(), lo.data(), lo.data() + dim_);
        boxes_.insert(boxes_.end(), hi.data(), hi.data() + dim_);
        if (end - begin <= kLeafSize) return id;

        Eigen::Index axis = 0;
        (hi - lo).maxCoeff(&axis);
        const std::size_t mid = begin + (end - begin) / 2;
        const auto d = static_cast<std::size_t>(axis);
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) {
                             return coords_[a * dim_ + d] < coords_[b * dim_ + d];
                         });
        const std::size_t left = build_rec(begin, mid);
        const std::size_t right = build_rec(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        nodes_[id].split_dim = d;
        nodes_[id].split = coords_[order_[mid] * dim_ + d];
        return id;
    }

    double box_distance2(std::size_t n, const Point& q) const {
        const auto lo = node_lo(n);
        const auto hi = node_hi(n);
        double d2 = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double e = std::max({lo[i] - q[i], 0.0, q[i] - hi[i]});
            d2 += e * e;
        }
        return d2;
    }

    template <class Consider>
    void nearest_rec(std::size_t n, const Point& q, Consider& consider, const double& best_d2) const {
        if (box_distance2(n, q) > best_d2) return;
        const Node& node = nodes_[n];
        if (node.left == npos) {
            for (std::size_t k = node.begin; k < node.end; ++k) consider(order_[k]);
            return;
        }
        const bool go_left = q[node.split_dim] < node.split;
        nearest_rec(go_left ? node.left : node.right, q, consider, best_d2);
        nearest_rec(go_left ? node.right : node.left, q, consider, best_d2);
    }

    std::size_t dim_;
    std::vector<double> coords_;
    std::size_t built_ = 0;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    std::vector<double> boxes_;
};

/// Queried points with their function values.
class Dataset {
public:
    explicit Dataset(std::size_t dim) : index_(dim) {}

    std::size_t dim() const { return index_.dim(); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    SpatialIndex::ConstPointRef point(std::size_t i) const { return index_.point(i); }
    double value(std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    const SpatialIndex& index() const { return index_; }

    std::size_t insert(const Point& p, double value) {
        const std::size_t i = index_.insert(p);
        values_.push_back(value);
        return i;
    }

    Neighbor nearest(const Point& q, std::span<const std::size_t> exclude = {}) const {
        return index_.nearest(q, exclude);
    }

private:
    SpatialIndex index_;
    std::vector<double> values_;
};

/// Nearest-neighbour regression: the value stored at the closest datapoint.
inline double nnr_predict(const Dataset& data, const Point& x) {
    if (data.empty()) throw InvalidInput("cannot predict from an empty dataset");
    return data.value(data.nearest(x).index);
}

}  // namespace annr
