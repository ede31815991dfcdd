#pragma once

// Brute-force Delaunay triangulation for validating the walks on small inputs
// (m <= 3, a few dozen points): every (m+1)-subset whose circumsphere holds no
// other point. O(n^(m+2)).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "annr/delaunay_walk.hpp"
#include "annr/geometry.hpp"

namespace annr {

inline VertexKeySet exact_delaunay(std::span<const Point> points) {
    VertexKeySet out;
    if (points.empty()) return out;
    const std::size_t m = static_cast<std::size_t>(points.front().size());
    const std::size_t n = points.size();
    if (n < m + 1) return out;

    std::vector<std::size_t> combo(m + 1);
    for (std::size_t i = 0; i <= m; ++i) combo[i] = i;
    std::vector<Point> verts(m + 1);
    while (true) {
        for (std::size_t i = 0; i <= m; ++i) verts[i] = points[combo[i]];
        try {
            const Sphere s = circumsphere(verts);
            bool empty = true;
            for (std::size_t j = 0; j < n && empty; ++j) {
                if (std::find(combo.begin(), combo.end(), j) != combo.end()) continue;
                if ((points[j] - s.center).norm() < s.radius * (1.0 - 1e-9)) empty = false;
            }
            if (empty) out.insert(combo);
        } catch (const DegenerateSimplex&) {
        }

        std::size_t i = m + 1;
        while (i > 0 && combo[i - 1] == n - (m + 1) + (i - 1)) --i;
        if (i == 0) break;
        ++combo[i - 1];
        for (std::size_t j = i; j <= m; ++j) combo[j] = combo[j - 1] + 1;
    }
    return out;
}

struct RecallReport {
    std::size_t exact = 0;      // simplices in the brute-force triangulation
    std::size_t validated = 0;  // walk candidates passing validate_candidate
    std::size_t unsound = 0;    // validated but not in the exact set
    std::size_t recovered = 0;  // validated and in the exact set

    double recall() const { return exact ? static_cast<double>(recovered) / static_cast<double>(exact) : 1.0; }
};

/// One skeleton walk of `steps` steps over `n` uniform points in [0,1]^dim,
/// scored against exact_delaunay.
inline RecallReport walk_recall(std::size_t dim, std::size_t n, std::uint64_t seed, std::size_t steps) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < n; ++i) {
        Point p(static_cast<Eigen::Index>(dim));
        for (auto& c : p) c = u(rng);
        pts.push_back(std::move(p));
    }
    const auto index = SpatialIndex::build(pts);
    const auto exact = exact_delaunay(pts);
    RecallReport r;
    r.exact = exact.size();
    for (const auto& c : skeleton_walk(0, steps, rng, index)) {
        if (!validate_candidate(c, index)) continue;
        ++r.validated;
        if (exact.contains(c.vertices)) {
            ++r.recovered;
        } else {
            ++r.unsound;
        }
    }
    return r;
}

}  // namespace annr
