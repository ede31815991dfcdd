#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <vector>

#include "annr/spatial_index.hpp"

using namespace annr;

namespace {

std::vector<Point> uniform_points(std::size_t n, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i) {
        Point p(m);
        for (auto& c : p) c = u(rng);
        out.push_back(p);
    }
    return out;
}

Neighbor scan(const std::vector<Point>& pts, const Point& q, const std::vector<std::size_t>& exclude = {}) {
    Neighbor best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
        const double d = (pts[i] - q).norm();
        if (d < best.distance) best = {i, d};
    }
    return best;
}

}  // namespace

TEST(SpatialIndex, MatchesLinearScanAfterBuild) {
    for (int m : {1, 2, 3, 6}) {
        const auto pts = uniform_points(500, m, 10 + m);
        const auto index = SpatialIndex::build(pts);
        for (const auto& q : uniform_points(200, m, 99)) {
            const auto got = index.nearest(q);
            const auto want = scan(pts, q);
            EXPECT_EQ(got.index, want.index);
            EXPECT_DOUBLE_EQ(got.distance, want.distance);
        }
    }
}

TEST(SpatialIndex, MatchesLinearScanUnderInsertion) {
    const auto pts = uniform_points(1000, 3, 21);
    SpatialIndex index(3);
    std::vector<Point> seen;
    const auto queries = uniform_points(20, 3, 22);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_EQ(index.insert(pts[i]), i);
        seen.push_back(pts[i]);
        if (i % 37 == 0) {
            for (const auto& q : queries) EXPECT_EQ(index.nearest(q).index, scan(seen, q).index);
        }
    }
    EXPECT_EQ(index.size(), 1000U);
}

TEST(SpatialIndex, ExclusionSkipsPoints) {
    const auto pts = uniform_points(300, 2, 31);
    const auto index = SpatialIndex::build(pts);
    for (std::size_t i = 0; i < 50; ++i) {
        const std::vector<std::size_t> ex{i, (i + 7) % 300};
        const std::size_t ex_arr[2] = {ex[0], ex[1]};
        EXPECT_EQ(index.nearest(pts[i], ex_arr).index, scan(pts, pts[i], ex).index);
    }
}

TEST(SpatialIndex, TiesGoToLowestIndex) {
    std::vector<Point> pts;
    for (double x : {1.0, -1.0, 0.0}) {
        Point p(1);
        p << x;
        pts.push_back(p);
    }
    const auto index = SpatialIndex::build(pts);
    Point q(1);
    q << 0.0;
    const std::size_t self[1] = {2};
    EXPECT_EQ(index.nearest(q, self).index, 0U);
}

TEST(SpatialIndex, DuplicatesRejected) {
    Point a(2), b(2);
    a << 0.5, 0.5;
    b << 0.5, 0.5 + 1e-14;
    SpatialIndex index(2);
    index.insert(a);
    EXPECT_THROW(index.insert(b), DuplicatePoint);
    EXPECT_THROW(SpatialIndex::build(std::vector<Point>{a, b}), DuplicatePoint);
}

TEST(SpatialIndex, BadInputs) {
    SpatialIndex index(2);
    Point q(2);
    q << 0, 0;
    EXPECT_THROW(index.nearest(q), InvalidInput);
    Point wrong(3);
    wrong << 0, 0, 0;
    EXPECT_THROW(index.insert(wrong), InvalidInput);
    Point nan(2);
    nan << NAN, 0;
    EXPECT_THROW(index.insert(nan), InvalidInput);
    EXPECT_THROW(SpatialIndex(0), InvalidInput);
}

TEST(Dataset, NnrPredictReturnsNearestValue) {
    Dataset d(1);
    Point p(1);
    p << 0.0;
    d.insert(p, 10.0);
    p << 1.0;
    d.insert(p, 20.0);
    Point q(1);
    q << 0.4;
    EXPECT_EQ(nnr_predict(d, q), 10.0);
    q << 0.6;
    EXPECT_EQ(nnr_predict(d, q), 20.0);
    EXPECT_THROW(nnr_predict(Dataset(1), q), InvalidInput);
}
