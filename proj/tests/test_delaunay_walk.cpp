#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <vector>

#include "annr/delaunay_walk.hpp"
#include "annr/exact_delaunay.hpp"

using namespace annr;

namespace {

Point pt(std::initializer_list<double> xs) {
    Point p(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) p[i++] = x;
    return p;
}

std::vector<Point> uniform_points(std::size_t n, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i) {
        Point p(m);
        for (auto& c : p) c = u(rng);
        out.push_back(p);
    }
    return out;
}

// Smallest positive bisector crossing by scanning every point.
std::optional<RayHit> scan_hit(const std::vector<Point>& pts, const Point& x, const Point& d, std::size_t g) {
    std::optional<RayHit> best;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == g) continue;
        const double denom = 2.0 * d.dot(pts[i] - pts[g]);
        if (denom <= 0.0) continue;
        const double t = ((pts[i] - x).squaredNorm() - (pts[g] - x).squaredNorm()) / denom;
        if (!best || t < best->t) best = RayHit{std::max(t, 0.0), i};
    }
    return best;
}

}  // namespace

TEST(RayBoundaryHit, TwoPointsMeetAtTheBisector) {
    const std::vector<Point> pts{pt({0, 0}), pt({2, 0})};
    const auto index = SpatialIndex::build(pts);
    const auto hit = ray_boundary_hit(pt({0, 0}), pt({1, 0}), 0, index);
    ASSERT_TRUE(hit);
    EXPECT_NEAR(hit->t, 1.0, 1e-15);
    EXPECT_EQ(hit->index, 1U);
    EXPECT_FALSE(ray_boundary_hit(pt({0, 0}), pt({-1, 0}), 0, index));
    EXPECT_FALSE(ray_boundary_hit(pt({0, 0}), pt({0, 1}), 0, index));
}

TEST(RayBoundaryHit, MatchesLinearScan) {
    std::mt19937_64 rng(40);
    std::normal_distribution<double> g;
    for (int m : {2, 3, 6}) {
        const auto pts = uniform_points(400, m, 41 + m);
        const auto index = SpatialIndex::build(pts);
        for (int t = 0; t < 100; ++t) {
            const std::size_t gen = static_cast<std::size_t>(t) % pts.size();
            Point d(m);
            for (auto& c : d) c = g(rng);
            d.normalize();
            const auto got = ray_boundary_hit(pts[gen], d, gen, index);
            const auto want = scan_hit(pts, pts[gen], d, gen);
            ASSERT_EQ(got.has_value(), want.has_value());
            if (!got) continue;
            EXPECT_EQ(got->index, want->index);
            EXPECT_NEAR(got->t, want->t, 1e-12);
        }
    }
}

TEST(RayBoundaryHit, RejectsNonUnitDirection) {
    const auto index = SpatialIndex::build(std::vector<Point>{pt({0, 0}), pt({1, 0})});
    EXPECT_THROW(ray_boundary_hit(pt({0, 0}), pt({2, 0}), 0, index), InvalidInput);
}

TEST(DescendToVertex, LandsOnAnExactDelaunaySimplex) {
    const auto pts = uniform_points(40, 2, 50);
    const auto index = SpatialIndex::build(pts);
    const auto exact = exact_delaunay(pts);
    std::mt19937_64 rng(51);
    int found = 0;
    for (std::size_t s = 0; s < pts.size(); ++s) {
        const auto c = descend_to_vertex(s, rng, index);
        if (!c) continue;
        ++found;
        EXPECT_TRUE(exact.contains(c->vertices));
        EXPECT_TRUE(std::find(c->vertices.begin(), c->vertices.end(), s) != c->vertices.end());
        EXPECT_TRUE(validate_candidate(*c, index));
    }
    EXPECT_GT(found, 30);
}

TEST(DescendToVertex, TooFewPointsThrows) {
    const auto index = SpatialIndex::build(std::vector<Point>{pt({0, 0}), pt({1, 0})});
    std::mt19937_64 rng(1);
    EXPECT_THROW(descend_to_vertex(0, rng, index), InvalidInput);
}

TEST(SkeletonWalk, SoundAndCompleteOnSmallSets) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto r = walk_recall(2, 25, seed, 2000);
        EXPECT_EQ(r.unsound, 0U);
        EXPECT_GE(r.recall(), 0.95);
    }
    const auto r3 = walk_recall(3, 15, 7, 2000);
    EXPECT_EQ(r3.unsound, 0U);
    EXPECT_GE(r3.recall(), 0.9);
}

TEST(SkeletonWalk, SameSeedSameCandidates) {
    const auto pts = uniform_points(30, 2, 60);
    const auto index = SpatialIndex::build(pts);
    std::mt19937_64 a(61), b(61);
    const auto ca = skeleton_walk(0, 200, a, index);
    const auto cb = skeleton_walk(0, 200, b, index);
    ASSERT_EQ(ca.size(), cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(ca[i].vertices, cb[i].vertices);
}

TEST(SkeletonWalk, CandidatesAreDistinctAndSorted) {
    const auto pts = uniform_points(30, 3, 62);
    const auto index = SpatialIndex::build(pts);
    std::mt19937_64 rng(63);
    VertexKeySet seen;
    for (const auto& c : skeleton_walk(5, 500, rng, index)) {
        EXPECT_TRUE(std::is_sorted(c.vertices.begin(), c.vertices.end()));
        EXPECT_EQ(c.vertices.size(), 4U);
        EXPECT_TRUE(seen.insert(c.vertices).second);
    }
}

TEST(SkeletonWalk, CosphericalSquareCorners) {
    // Four cocircular corners plus the center: the walk must still report
    // the four triangles fanning around the center.
    const std::vector<Point> pts{pt({0, 0}), pt({1, 0}), pt({0, 1}), pt({1, 1}), pt({0.5, 0.5})};
    const auto index = SpatialIndex::build(pts);
    std::mt19937_64 rng(64);
    VertexKeySet valid;
    for (const auto& c : skeleton_walk(4, 200, rng, index)) {
        if (validate_candidate(c, index)) valid.insert(c.vertices);
    }
    EXPECT_EQ(valid, exact_delaunay(pts));
    EXPECT_EQ(valid.size(), 4U);
}

TEST(VisibilityWalk, EndsAtTheNearestDatapoint) {
    const auto pts = uniform_points(200, 2, 70);
    const auto index = SpatialIndex::build(pts);
    for (const auto& target : uniform_points(50, 2, 71)) {
        EXPECT_EQ(visibility_walk(0, target, index), index.nearest(target).index);
    }
}

TEST(ValidateCandidate, EmptyAndNonEmptyCircumspheres) {
    const std::vector<Point> pts{pt({0, 0}), pt({1, 0}), pt({0, 1}), pt({0.3, 0.3})};
    const auto index = SpatialIndex::build(pts);
    const std::size_t tri[3] = {0, 1, 2};
    const auto with_inside = detail::make_candidate(index, tri, pt({0.5, 0.5}));
    ASSERT_TRUE(with_inside);
    EXPECT_FALSE(validate_candidate(*with_inside, index));
    const std::size_t ok[3] = {1, 2, 3};
    const auto sphere = circumsphere({pts[1], pts[2], pts[3]});
    const auto empty = detail::make_candidate(index, ok, sphere.center);
    ASSERT_TRUE(empty);
    EXPECT_TRUE(validate_candidate(*empty, index));
}

TEST(ExactDelaunay, SquarePlusCenterHasFourTriangles) {
    const std::vector<Point> pts{pt({0, 0}), pt({1, 0}), pt({0, 1}), pt({1, 1}), pt({0.5, 0.5})};
    const auto tri = exact_delaunay(pts);
    EXPECT_EQ(tri.size(), 4U);
    for (const auto& k : tri) EXPECT_EQ(k.back(), 4U);
}

TEST(ExactDelaunay, EulerCountForPointsInGeneralPosition) {
    // Planar triangulation of n points with h on the hull has 2n - h - 2 triangles.
    const auto pts = uniform_points(30, 2, 80);
    std::vector<Eigen::Vector2d> p2;
    for (const auto& p : pts) p2.emplace_back(p[0], p[1]);
    std::size_t hull = 0;
    for (std::size_t i = 0; i < p2.size(); ++i) {
        for (std::size_t j = 0; j < p2.size(); ++j) {
            if (i == j) continue;
            bool all_left = true;
            for (std::size_t k = 0; k < p2.size() && all_left; ++k) {
                if (k == i || k == j) continue;
                const Eigen::Vector2d a = p2[j] - p2[i], b = p2[k] - p2[i];
                if (a.x() * b.y() - a.y() * b.x() < 0) all_left = false;
            }
            if (all_left) ++hull;  // directed hull edge i -> j, one per hull vertex
        }
    }
    EXPECT_EQ(exact_delaunay(pts).size(), 2 * pts.size() - hull - 2);
}
