#pragma once

// Stochastic discovery of Delaunay simplices by random walks on the boundary
// of Voronoi cells. A walk starts at a datapoint, casts m constrained rays to
// reach a Voronoi vertex, then hops along Voronoi edges (the 1-skeleton). Each
// vertex reached is the circumcenter of a Delaunay simplex whose vertices are
// the generators collected along the way. The full triangulation is never
// built.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include "annr/errors.hpp"
#include "annr/geometry.hpp"
#include "annr/spatial_index.hpp"

namespace annr {

using VertexKey = std::vector<std::size_t>;

struct VertexKeyHash {
    std::size_t operator()(const VertexKey& key) const noexcept {
        std::size_t h = 1469598103934665603ULL;
        for (auto v : key) {
            h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

using VertexKeySet = std::unordered_set<VertexKey, VertexKeyHash>;

struct SimplexCandidate {
    VertexKey vertices;  // sorted ascending
    Point circumcenter;
    double circumradius = 0.0;
    double base_volume = 0.0;
    double score = 0.0;
    std::size_t birth_step = 0;
};

struct RayHit {
    double t = 0.0;
    std::size_t index = 0;
};

/// Position on a Voronoi face together with the generators whose cells meet
/// there and an orthonormal basis (columns) of the directions that keep it on
/// that face.
struct WalkState {
    Point position;
    std::vector<std::size_t> generators;
    Eigen::MatrixXd tangent_basis;
};

inline constexpr std::size_t kWalkRetryBudget = 8;

/// First bisector hyperplane crossed by the ray x + t*direction, t >= 0, while
/// travelling inside the cell of `generator`.
///
/// For a datapoint q the crossing is at
///   t_q = (|q - x|^2 - |p0 - x|^2) / (2 direction . (q - p0))
/// and only q with a positive denominator can be hit. Candidates are searched
/// best-first over the k-d tree using, per node box, the lower bound
/// max(0, dist(x, box)^2 - |p0 - x|^2) / max_box(2 direction . (q - p0)).
/// Ties resolve to the lowest index. Returns nullopt if the ray never leaves
/// the cell.
inline std::optional<RayHit> ray_boundary_hit(const Point& x, const Point& direction,
                                              std::size_t generator, const SpatialIndex& index,
                                              std::span<const std::size_t> exclude = {}) {
    if (std::abs(direction.norm() - 1.0) > 1e-9) throw InvalidInput("ray direction must be unit norm");
    if (generator >= index.size()) throw InvalidInput("generator index out of range");

    const Point p0 = index.point(generator);
    const double r0_sq = (p0 - x).squaredNorm();
    const double dir_p0 = direction.dot(p0);
    const auto dim = static_cast<Eigen::Index>(index.dim());

    double best_t = std::numeric_limits<double>::infinity();
    std::size_t best = std::numeric_limits<std::size_t>::max();

    auto bound = [&](const auto& lo, const auto& hi) {
        double reach = -dir_p0;
        double gap_sq = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            reach += std::max(direction[i] * lo[i], direction[i] * hi[i]);
            const double e = std::max({lo[i] - x[i], 0.0, x[i] - hi[i]});
            gap_sq += e * e;
        }
        if (reach <= 0.0) return std::numeric_limits<double>::infinity();
        return std::max(0.0, gap_sq - r0_sq) / (2.0 * reach);
    };
    auto visit = [&](std::size_t i) {
        if (i == generator || std::find(exclude.begin(), exclude.end(), i) != exclude.end()) {
            return best_t;
        }
        const auto q = index.point(i);
        double dot = 0.0, qp_sq = 0.0, qx_sq = 0.0;
        for (Eigen::Index k = 0; k < dim; ++k) {
            const double qp = q[k] - p0[k];
            const double qx = q[k] - x[k];
            dot += direction[k] * qp;
            qp_sq += qp * qp;
            qx_sq += qx * qx;
        }
        const double denom = 2.0 * dot;
        if (!(denom > 1e-12 * std::sqrt(qp_sq))) return best_t;
        const double numer = std::max(0.0, qx_sq - r0_sq);
        const double t = numer / denom;
        if (t < best_t || (t == best_t && i < best)) {
            best_t = t;
            best = i;
        }
        return best_t;
    };
    index.best_first(bound, visit);

    if (!std::isfinite(best_t)) return std::nullopt;
    return RayHit{best_t, best};
}

namespace detail {

/// Orthonormal basis of the directions orthogonal to every (g_j - g_0).
/// Empty optional when the generators are affinely dependent.
inline std::optional<Eigen::MatrixXd> tangent_basis(const SpatialIndex& index,
                                                    std::span<const std::size_t> generators) {
    const auto m = static_cast<Eigen::Index>(index.dim());
    const auto k = static_cast<Eigen::Index>(generators.size()) - 1;
    if (k == 0) return Eigen::MatrixXd::Identity(m, m);
    if (k > m) return std::nullopt;
    Eigen::MatrixXd diffs(m, k);
    const Point g0 = index.point(generators[0]);
    for (Eigen::Index j = 0; j < k; ++j) diffs.col(j) = index.point(generators[j + 1]) - g0;

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(diffs);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const double rmax = r.diagonal().cwiseAbs().maxCoeff();
    if (!(r.diagonal().cwiseAbs().minCoeff() > 1e-10 * rmax)) return std::nullopt;
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
    return Eigen::MatrixXd(q.rightCols(m - k));
}

template <class Rng>
Point random_direction(const Eigen::MatrixXd& basis, Rng& rng) {
    std::normal_distribution<double> gauss;
    Eigen::VectorXd coeff(basis.cols());
    double n2 = 0.0;
    do {
        for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff[i] = gauss(rng);
        n2 = coeff.squaredNorm();
    } while (n2 < 1e-24);
    Point d = basis * (coeff / std::sqrt(n2));
    return d / d.norm();
}

/// Candidate for the simplex spanned by `generators`, or nullopt when it is
/// degenerate or its circumcenter disagrees with the walk position.
inline std::optional<SimplexCandidate> make_candidate(const SpatialIndex& index,
                                                      std::span<const std::size_t> generators,
                                                      const Point& position) {
    std::vector<Point> verts;
    verts.reserve(generators.size());
    for (auto g : generators) verts.emplace_back(index.point(g));
    try {
        Sphere s = circumsphere(verts);
        if ((s.center - position).norm() > 1e-6 * s.radius) return std::nullopt;
        SimplexCandidate c;
        c.vertices.assign(generators.begin(), generators.end());
        std::sort(c.vertices.begin(), c.vertices.end());
        c.circumcenter = std::move(s.center);
        c.circumradius = s.radius;
        c.base_volume = simplex_volume(verts);
        c.score = c.base_volume;
        return c;
    } catch (const DegenerateSimplex&) {
        return std::nullopt;
    } catch (const NumericalError&) {
        return std::nullopt;
    }
}

}  // namespace detail

inline WalkState start_walk(const SpatialIndex& index, std::size_t start) {
    if (start >= index.size()) throw InvalidInput("walk start index out of range");
    const auto m = static_cast<Eigen::Index>(index.dim());
    return WalkState{Point(index.point(start)), {start}, Eigen::MatrixXd::Identity(m, m)};
}

/// One constrained ray step: random direction in the tangent space, sign
/// flipped if that side escapes. On success the hit datapoint joins the
/// generators and the tangent basis shrinks by one. Returns false, leaving
/// `state` untouched, when both signs escape or the new face is degenerate.
template <class Rng>
bool advance_walk(WalkState& state, Rng& rng, const SpatialIndex& index) {
    if (state.tangent_basis.cols() == 0) return false;
    Point dir = detail::random_direction(state.tangent_basis, rng);
    auto hit = ray_boundary_hit(state.position, dir, state.generators.front(), index, state.generators);
    if (!hit) {
        dir = -dir;
        hit = ray_boundary_hit(state.position, dir, state.generators.front(), index, state.generators);
    }
    if (!hit) return false;

    std::vector<std::size_t> gens = state.generators;
    gens.push_back(hit->index);
    auto basis = detail::tangent_basis(index, gens);
    if (!basis) return false;
    state.position += hit->t * dir;
    state.generators = std::move(gens);
    state.tangent_basis = std::move(*basis);
    return true;
}

/// Walks from datapoint `start` down to a vertex of its Voronoi cell and
/// returns the dual simplex, or nullopt when the retry budget runs out or the
/// simplex is degenerate.
template <class Rng>
std::optional<SimplexCandidate> descend_to_vertex(std::size_t start, Rng& rng,
                                                  const SpatialIndex& index) {
    const std::size_t m = index.dim();
    if (index.size() < m + 1) throw InvalidInput("need at least m+1 datapoints to walk");
    WalkState state = start_walk(index, start);
    std::size_t failures = 0;
    while (state.generators.size() < m + 1) {
        if (!advance_walk(state, rng, index)) {
            if (++failures >= kWalkRetryBudget) return std::nullopt;
        }
    }
    return detail::make_candidate(index, state.generators, state.position);
}

/// Random walk on the Voronoi 1-skeleton. Starting from a vertex (a datapoint
/// is first descended to one), each step drops a random generator and follows
/// the Voronoi edge of the remaining m away from the current vertex to the
/// next one. Runs `steps` steps (the starting vertex is the first) and returns
/// the distinct simplices met, in discovery order.
template <class Rng>
std::vector<SimplexCandidate> skeleton_walk(std::optional<SimplexCandidate> start_simplex,
                                            std::size_t start_point, std::size_t steps, Rng& rng,
                                            const SpatialIndex& index) {
    if (steps == 0) throw InvalidInput("skeleton walk needs at least one step");
    const std::size_t m = index.dim();
    const std::size_t n = index.size();
    if (n < m + 1) throw InvalidInput("need at least m+1 datapoints to walk");

    std::vector<SimplexCandidate> found;
    VertexKeySet seen;
    auto emit = [&](const SimplexCandidate& c) {
        if (seen.insert(c.vertices).second) found.push_back(c);
    };
    std::uniform_int_distribution<std::size_t> pick_point(0, n - 1);

    std::optional<SimplexCandidate> current = std::move(start_simplex);
    if (!current) current = descend_to_vertex(start_point, rng, index);
    if (current) emit(*current);

    std::vector<std::size_t> drop_order(m + 1);
    for (std::size_t step = 1; step < steps; ++step) {
        if (!current) {
            current = descend_to_vertex(pick_point(rng), rng, index);
            if (current) emit(*current);
            continue;
        }
        std::iota(drop_order.begin(), drop_order.end(), std::size_t{0});
        std::shuffle(drop_order.begin(), drop_order.end(), rng);

        std::optional<SimplexCandidate> next;
        for (std::size_t drop : drop_order) {
            const auto& verts = current->vertices;
            std::vector<std::size_t> remaining;
            remaining.reserve(m);
            for (std::size_t j = 0; j <= m; ++j) {
                if (j != drop) remaining.push_back(verts[j]);
            }
            auto basis = detail::tangent_basis(index, remaining);
            if (!basis || basis->cols() != 1) continue;
            Point dir = basis->col(0);
            dir.normalize();
            const Point away = index.point(verts[drop]) - index.point(remaining.front());
            const double side = dir.dot(away);
            if (side == 0.0) continue;
            if (side > 0.0) dir = -dir;

            const auto hit = ray_boundary_hit(current->circumcenter, dir, remaining.front(), index, verts);
            if (!hit) continue;
            remaining.push_back(hit->index);
            next = detail::make_candidate(index, remaining, current->circumcenter + hit->t * dir);
            if (next) break;
        }
        current = std::move(next);
        if (current) emit(*current);
    }
    return found;
}

template <class Rng>
std::vector<SimplexCandidate> skeleton_walk(std::size_t start_point, std::size_t steps, Rng& rng,
                                            const SpatialIndex& index) {
    return skeleton_walk(std::nullopt, start_point, steps, rng, index);
}

template <class Rng>
std::vector<SimplexCandidate> skeleton_walk(const SimplexCandidate& start, std::size_t steps,
                                            Rng& rng, const SpatialIndex& index) {
    return skeleton_walk(std::optional<SimplexCandidate>(start), start.vertices.front(), steps, rng,
                         index);
}

/// Greedy hops towards `target`: from the current datapoint, probe the nearest
/// datapoints to the midpoint and to the end of the segment and move to the
/// first that is strictly closer to the target. Ends at the exact nearest
/// datapoint of `target` unless the start already ties with it.
inline std::size_t visibility_walk(std::size_t start, const Point& target, const SpatialIndex& index) {
    if (index.empty()) throw InvalidInput("visibility walk on an empty index");
    if (start >= index.size()) throw InvalidInput("walk start index out of range");
    std::size_t current = start;
    double current_d = (index.point(current) - target).norm();
    for (std::size_t hop = 0; hop < index.size(); ++hop) {
        bool moved = false;
        for (double frac : {0.5, 1.0}) {
            const Point probe = index.point(current) + frac * (target - index.point(current));
            const Neighbor nb = index.nearest(probe);
            const double d = (index.point(nb.index) - target).norm();
            if (d < current_d) {
                current = nb.index;
                current_d = d;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return current;
}

/// Empty-circumsphere test: no datapoint other than the vertices lies closer
/// to the circumcenter than (1 - 1e-9) times the circumradius.
inline bool validate_candidate(const SimplexCandidate& candidate, const SpatialIndex& index) {
    if (index.size() <= candidate.vertices.size()) return true;
    const Neighbor nb = index.nearest(candidate.circumcenter, candidate.vertices);
    return nb.distance >= candidate.circumradius - 1e-9 * candidate.circumradius;
}

}  // namespace annr
