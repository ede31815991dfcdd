#pragma once

// Numeric kernels on simplices: Cayley-Menger volumes, liftings onto a
// function graph, circumspheres, score clipping and Euler-line clamping.
// Everything here is a pure function of its arguments.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "annr/errors.hpp"

namespace annr {

using Point = Eigen::VectorXd;

struct Degrees {
    double value = 0.0;
    double radians() const { return value * std::numbers::pi / 180.0; }
};

struct Sphere {
    Point center;
    double radius = 0.0;
};

namespace detail {

inline double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

inline void require_same_dim(std::span<const Point> vertices) {
    if (vertices.empty()) throw InvalidInput("simplex has no vertices");
    const auto dim = vertices.front().size();
    for (const auto& v : vertices) {
        if (v.size() != dim) throw InvalidInput("vertices differ in dimension");
        if (!v.allFinite()) throw InvalidInput("vertex has non-finite coordinates");
    }
}

}  // namespace detail

/// k-dimensional volume of the simplex spanned by k+1 vertices (any ambient
/// dimension), from the Cayley-Menger determinant.
///
/// The bordered distance matrix is assembled and LU-factorised (partial
/// pivoting) in extended precision, with squared distances normalised by the
/// largest one so the under-root quantity is O(1) for a well-shaped simplex.
/// Negative values down to -1e-12 (normalised units) are rounding and clamp
/// to zero; anything more negative raises NumericalError.
inline double simplex_volume(std::span<const Point> vertices) {
    using Real = long double;
    using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    detail::require_same_dim(vertices);
    const int k = static_cast<int>(vertices.size()) - 1;
    if (k == 0) return 0.0;

    const int n = k + 2;
    MatrixR cm = MatrixR::Zero(n, n);
    Real scale = 0.0;
    for (int i = 0; i <= k; ++i) {
        for (int j = i + 1; j <= k; ++j) {
            const Real d2 = (vertices[i].cast<Real>() - vertices[j].cast<Real>()).squaredNorm();
            cm(i + 1, j + 1) = d2;
            cm(j + 1, i + 1) = d2;
            scale = std::max(scale, d2);
        }
    }
    if (scale == 0.0) return 0.0;
    cm.bottomRightCorner(k + 1, k + 1) /= scale;
    for (int i = 1; i < n; ++i) {
        cm(0, i) = 1.0;
        cm(i, 0) = 1.0;
    }

    const Real det = Eigen::PartialPivLU<MatrixR>(cm).determinant();
    const Real sign = (k % 2 == 0) ? -1.0 : 1.0;  // (-1)^(k+1)
    const Real kf = detail::factorial(k);
    Real under_root = sign * det / (std::ldexp(Real{1}, k) * kf * kf);
    if (!std::isfinite(under_root)) throw NumericalError("non-finite Cayley-Menger determinant");
    if (under_root < 0.0) {
        if (under_root < -1e-12L) throw NumericalError("negative squared volume beyond rounding");
        under_root = 0.0;
    }
    return static_cast<double>(std::sqrt(under_root) * std::pow(scale, Real{0.5} * k));
}

inline double simplex_volume(std::initializer_list<Point> vertices) {
    return simplex_volume(std::span<const Point>(vertices.begin(), vertices.size()));
}

/// Volume of the lifting <(v_i, lambda f(v_i))> in one dimension higher.
inline double lifted_volume(std::span<const Point> simplex, std::span<const double> f_values,
                            double lambda) {
    if (f_values.size() != simplex.size()) throw InvalidInput("one f value per vertex required");
    if (!(lambda >= 0.0)) throw InvalidInput("lambda must be non-negative");
    detail::require_same_dim(simplex);
    const auto dim = simplex.front().size();
    std::vector<Point> lifted;
    lifted.reserve(simplex.size());
    for (std::size_t i = 0; i < simplex.size(); ++i) {
        Point p(dim + 1);
        p.head(dim) = simplex[i];
        p[dim] = lambda * f_values[i];
        lifted.push_back(std::move(p));
    }
    return simplex_volume(lifted);
}

inline Point barycenter(std::span<const Point> vertices) {
    detail::require_same_dim(vertices);
    Point c = Point::Zero(vertices.front().size());
    for (const auto& v : vertices) c += v;
    return c / static_cast<double>(vertices.size());
}

/// Circumsphere of a full-dimensional simplex (m+1 vertices in R^m).
///
/// Solves 2 (v_i - v_0) . u = |v_i - v_0|^2 for the offset u = c - v_0.
/// Throws DegenerateSimplex when the system is numerically singular or when
/// some vertex misses the sphere by more than 1e-6 radius.
inline Sphere circumsphere(std::span<const Point> vertices) {
    detail::require_same_dim(vertices);
    const auto m = vertices.front().size();
    if (vertices.size() != static_cast<std::size_t>(m) + 1) {
        throw InvalidInput("circumsphere needs exactly m+1 vertices in R^m");
    }
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Point e = vertices[i + 1] - vertices[0];
        a.row(i) = 2.0 * e.transpose();
        b[i] = e.squaredNorm();
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (!(lu.rcond() > 1e-13)) throw DegenerateSimplex("ill-conditioned circumcenter system");
    const Point u = lu.solve(b);
    if (!u.allFinite()) throw DegenerateSimplex("non-finite circumcenter");

    Sphere s{vertices[0] + u, u.norm()};
    for (const auto& v : vertices) {
        if (std::abs((v - s.center).norm() - s.radius) > 1e-6 * s.radius) {
            throw DegenerateSimplex("circumcenter equidistance residual too large");
        }
    }
    return s;
}

inline Sphere circumsphere(std::initializer_list<Point> vertices) {
    return circumsphere(std::span<const Point>(vertices.begin(), vertices.size()));
}

/// min(lifted, base / cos(alpha0)); no clipping when alpha0 is absent.
inline double clipped_score(double base_volume, double lifted_volume,
                            std::optional<Degrees> alpha0) {
    if (!alpha0) return lifted_volume;
    if (!(alpha0->value > 0.0 && alpha0->value < 90.0)) {
        throw InvalidInput("clipping angle must lie in (0, 90) degrees");
    }
    return std::min(lifted_volume, base_volume / std::cos(alpha0->radians()));
}

/// Axis-aligned box prod [lo_i, hi_i].
class BoundingBox {
public:
    BoundingBox() = default;
    BoundingBox(Point lo, Point hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        if (lo_.size() != hi_.size() || lo_.size() == 0) throw InvalidInput("box corners differ in dimension");
        if (!lo_.allFinite() || !hi_.allFinite()) throw InvalidInput("box corners must be finite");
        for (Eigen::Index i = 0; i < lo_.size(); ++i) {
            if (!(lo_[i] < hi_[i])) throw InvalidInput("box needs lo < hi on every axis");
        }
    }

    static BoundingBox cube(std::size_t dim, double lo, double hi) {
        return {Point::Constant(static_cast<Eigen::Index>(dim), lo),
                Point::Constant(static_cast<Eigen::Index>(dim), hi)};
    }

    std::size_t dim() const { return static_cast<std::size_t>(lo_.size()); }
    const Point& lo() const { return lo_; }
    const Point& hi() const { return hi_; }

    double volume() const { return (hi_ - lo_).prod(); }

    bool contains(const Point& p, double tol = 0.0) const {
        for (Eigen::Index i = 0; i < lo_.size(); ++i) {
            if (p[i] < lo_[i] - tol || p[i] > hi_[i] + tol) return false;
        }
        return true;
    }

    /// All 2^m corners; bit i of the corner number selects hi on axis i.
    std::vector<Point> corners() const {
        const auto m = dim();
        std::vector<Point> out;
        out.reserve(std::size_t{1} << m);
        for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
            Point c(m);
            for (std::size_t i = 0; i < m; ++i) c[i] = (mask >> i & 1U) ? hi_[i] : lo_[i];
            out.push_back(std::move(c));
        }
        return out;
    }

    template <class Rng>
    Point sample(Rng& rng) const {
        Point p(lo_.size());
        for (Eigen::Index i = 0; i < lo_.size(); ++i) {
            p[i] = std::uniform_real_distribution<double>(lo_[i], hi_[i])(rng);
        }
        return p;
    }

    double diameter() const { return (hi_ - lo_).norm(); }

private:
    Point lo_;
    Point hi_;
};

/// Euler-line clamp: when `circumcenter` leaves the box, the point where the
/// segment barycenter -> circumcenter crosses the boundary.
inline Point clamp_to_boundary(const Point& barycenter, const Point& circumcenter,
                               const BoundingBox& box) {
    if (barycenter.size() != static_cast<Eigen::Index>(box.dim()) ||
        circumcenter.size() != barycenter.size()) {
        throw InvalidInput("dimension mismatch in clamp_to_boundary");
    }
    if (!box.contains(barycenter, 1e-12 * std::max(1.0, box.diameter()))) {
        throw InvalidInput("barycenter lies outside the bounding box");
    }
    if (box.contains(circumcenter)) return circumcenter;

    const Point d = circumcenter - barycenter;
    double t = 1.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d[i] > 0.0) {
            t = std::min(t, (box.hi()[i] - barycenter[i]) / d[i]);
        } else if (d[i] < 0.0) {
            t = std::min(t, (box.lo()[i] - barycenter[i]) / d[i]);
        }
    }
    t = std::max(t, 0.0);
    Point out = barycenter + t * d;
    return out.cwiseMax(box.lo()).cwiseMin(box.hi());
}

}  // namespace annr
