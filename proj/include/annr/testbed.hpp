#pragma once

// Ground-truth functions, test sets and error metrics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "annr/engine.hpp"
#include "annr/errors.hpp"
#include "annr/geometry.hpp"

namespace annr {

using Params = std::map<std::string, double>;

struct TargetFunction {
    std::string name;
    Params params;
    BoundingBox box;
    Objective evaluate;
    DomainPredicate domain;  // empty: the whole box

    std::size_t dim() const { return box.dim(); }

    /// "name" or "name(k=v,...)" over the explicitly given parameters.
    std::string label() const {
        if (params.empty()) return name;
        std::ostringstream os;
        os << name << '(';
        bool first = true;
        for (const auto& [k, v] : params) {
            os << (first ? "" : ",") << k << '=' << v;
            first = false;
        }
        os << ')';
        return os.str();
    }
};

namespace detail {

class ParamReader {
public:
    ParamReader(std::string fn, const Params& given) : fn_(std::move(fn)), given_(given) {}

    double get(const std::string& key, double fallback) {
        used_.push_back(key);
        const auto it = given_.find(key);
        return it == given_.end() ? fallback : it->second;
    }

    void finish() const {
        for (const auto& [k, v] : given_) {
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) {
                throw ConfigError("unknown parameter '" + k + "' for function '" + fn_ + "'");
            }
        }
    }

private:
    std::string fn_;
    const Params& given_;
    std::vector<std::string> used_;
};

inline std::size_t dim_param(ParamReader& r, double fallback) {
    const double d = r.get("dim", fallback);
    if (!(d >= 1.0) || d != std::floor(d) || d > 20.0) throw ConfigError("dim must be an integer in [1, 20]");
    return static_cast<std::size_t>(d);
}

inline BoundingBox box_param(ParamReader& r, std::size_t dim, double lo, double hi) {
    const double l = r.get("lo", lo);
    const double h = r.get("hi", hi);
    if (!(l < h)) throw ConfigError("box needs lo < hi");
    return BoundingBox::cube(dim, l, h);
}

inline void require_dim(const std::string& fn, std::size_t dim, std::size_t want) {
    if (dim != want) throw ConfigError(fn + " is defined for dim = " + std::to_string(want) + " only");
}

}  // namespace detail

/// Membership in the Archimedean band |r - a*theta| < w, theta in [0, theta_max],
/// where theta runs over every winding of the polar angle of x.
inline bool in_spiral_band(double x, double y, double a, double w, double theta_max) {
    const double r = std::hypot(x, y);
    double phi = std::atan2(y, x);
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    for (double theta = phi; theta <= theta_max; theta += 2.0 * std::numbers::pi) {
        if (std::abs(r - a * theta) < w) return true;
    }
    return false;
}

/// Built-in targets:
///   gaussian  normalised isotropic Gaussian, sigma2 = 0.1, dim = 2, box [-1,1]^dim
///   spiral    band indicator (a, w, theta_max) = (0.08, 0.06, 6 pi) on [-1,1]^2
///   ellipse   indicator of x^2 + 4 y^2 <= 1 rotated by `angle` degrees, [-1,1]^2
///   ball      indicator of |x| <= radius (1), dim = 6, box [-2,2]^dim
///   lens      |x| on the intersection of the radius-5 disks at (-3,-3) and
///             (4,4), box [-0.35,1.35]^2; zero outside the lens
///   sphere_sq |x|^2, dim = 2, box [-1,1]^dim
inline TargetFunction builtin(const std::string& name, const Params& params = {}) {
    detail::ParamReader r(name, params);
    TargetFunction fn;
    fn.name = name;
    fn.params = params;

    if (name == "gaussian") {
        const std::size_t dim = detail::dim_param(r, 2);
        const double sigma2 = r.get("sigma2", 0.1);
        if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
        fn.box = detail::box_param(r, dim, -1.0, 1.0);
        const double norm = std::pow(2.0 * std::numbers::pi * sigma2, -0.5 * static_cast<double>(dim));
        fn.evaluate = [sigma2, norm](const Point& x) { return norm * std::exp(-x.squaredNorm() / (2.0 * sigma2)); };
    } else if (name == "spiral") {
        const std::size_t dim = detail::dim_param(r, 2);
        detail::require_dim(name, dim, 2);
        const double a = r.get("a", 0.08);
        const double w = r.get("w", 0.06);
        const double theta_max = r.get("theta_max", 6.0 * std::numbers::pi);
        if (!(a > 0.0 && w > 0.0 && theta_max > 0.0)) throw ConfigError("spiral needs a, w, theta_max > 0");
        fn.box = detail::box_param(r, dim, -1.0, 1.0);
        fn.evaluate = [a, w, theta_max](const Point& x) {
            return in_spiral_band(x[0], x[1], a, w, theta_max) ? 1.0 : 0.0;
        };
    } else if (name == "ellipse") {
        const std::size_t dim = detail::dim_param(r, 2);
        detail::require_dim(name, dim, 2);
        const double angle = r.get("angle", 0.0) * std::numbers::pi / 180.0;
        fn.box = detail::box_param(r, dim, -1.0, 1.0);
        const double c = std::cos(angle), s = std::sin(angle);
        fn.evaluate = [c, s](const Point& x) {
            // Undo the rotation, then test the axis-aligned ellipse.
            const double u = c * x[0] + s * x[1];
            const double v = -s * x[0] + c * x[1];
            return u * u + 4.0 * v * v <= 1.0 ? 1.0 : 0.0;
        };
    } else if (name == "ball") {
        const std::size_t dim = detail::dim_param(r, 6);
        const double radius = r.get("radius", 1.0);
        if (!(radius > 0.0)) throw ConfigError("radius must be positive");
        fn.box = detail::box_param(r, dim, -2.0, 2.0);
        fn.evaluate = [radius](const Point& x) { return x.norm() <= radius ? 1.0 : 0.0; };
    } else if (name == "lens") {
        const std::size_t dim = detail::dim_param(r, 2);
        detail::require_dim(name, dim, 2);
        const double radius = r.get("radius", 5.0);
        fn.box = detail::box_param(r, dim, -0.35, 1.35);
        auto inside = [radius](const Point& x) {
            return std::hypot(x[0] + 3.0, x[1] + 3.0) <= radius && std::hypot(x[0] - 4.0, x[1] - 4.0) <= radius;
        };
        fn.domain = inside;
        fn.evaluate = [inside](const Point& x) { return inside(x) ? x.norm() : 0.0; };
    } else if (name == "sphere_sq") {
        const std::size_t dim = detail::dim_param(r, 2);
        fn.box = detail::box_param(r, dim, -1.0, 1.0);
        fn.evaluate = [](const Point& x) { return x.squaredNorm(); };
    } else {
        throw ConfigError("unknown function '" + name + "'");
    }
    r.finish();
    return fn;
}

enum class TestSetMode { grid, uniform };

inline TestSetMode parse_test_set_mode(const std::string& s) {
    if (s == "grid") return TestSetMode::grid;
    if (s == "uniform") return TestSetMode::uniform;
    throw ConfigError("test set mode must be grid or uniform, got '" + s + "'");
}

struct TestSet {
    std::vector<Point> points;
    std::vector<double> values;
    TestSetMode mode = TestSetMode::uniform;
    std::uint64_t seed = 0;

    std::size_t size() const { return points.size(); }

    /// FNV-1a over the raw bytes of every coordinate and value.
    std::uint64_t hash() const {
        std::uint64_t h = 14695981039346656037ULL;
        auto mix = [&h](double d) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &d, sizeof d);
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ULL;
            }
        };
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (Eigen::Index k = 0; k < points[i].size(); ++k) mix(points[i][k]);
            mix(values[i]);
        }
        return h;
    }
};

/// Grid: the ceil(sqrt(size))^2 endpoint-inclusive lattice over the box
/// (2-D only). Uniform: `size` i.i.d. points. Both honour the domain
/// predicate (grid points outside are dropped, uniform ones resampled).
inline TestSet make_test_set(const TargetFunction& fn, std::size_t size, TestSetMode mode,
                             std::uint64_t seed) {
    if (size < 1) throw ConfigError("test set size must be at least 1");
    TestSet ts;
    ts.mode = mode;
    ts.seed = seed;
    const BoundingBox& box = fn.box;
    if (mode == TestSetMode::grid) {
        if (fn.dim() != 2) throw ConfigError("grid test sets are defined for m = 2 only");
        const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(size)) - 1e-9));
        auto coord = [&](std::size_t axis, std::size_t i) {
            if (k == 1) return 0.5 * (box.lo()[axis] + box.hi()[axis]);
            return box.lo()[axis] + (box.hi()[axis] - box.lo()[axis]) * static_cast<double>(i) / static_cast<double>(k - 1);
        };
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                Point p(2);
                p << coord(0, i), coord(1, j);
                if (fn.domain && !fn.domain(p)) continue;
                ts.points.push_back(std::move(p));
            }
        }
    } else {
        std::mt19937_64 rng(seed);
        while (ts.points.size() < size) {
            Point p = box.sample(rng);
            if (fn.domain && !fn.domain(p)) continue;
            ts.points.push_back(std::move(p));
        }
    }
    ts.values.reserve(ts.points.size());
    for (const auto& p : ts.points) ts.values.push_back(fn.evaluate(p));
    return ts;
}

/// Mean absolute error of `predict` over the test set.
template <class Predict>
double mae(Predict&& predict, const TestSet& test) {
    if (test.points.empty()) throw InvalidInput("empty test set");
    double sum = 0.0;
    for (std::size_t i = 0; i < test.points.size(); ++i) {
        sum += std::abs(predict(test.points[i]) - test.values[i]);
    }
    return sum / static_cast<double>(test.points.size());
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
    std::vector<double> frequencies;
};

/// Histogram of |p| over `bins` uniform bins on [0, upper]; `upper` defaults
/// to the largest norm. Norms at or past the upper edge fall in the last bin.
inline Histogram norm_histogram(std::span<const Point> points, std::size_t bins,
                                std::optional<double> upper = std::nullopt) {
    if (bins < 1) throw InvalidInput("need at least one bin");
    Histogram h;
    h.counts.assign(bins, 0);
    h.frequencies.assign(bins, 0.0);
    double top = 0.0;
    for (const auto& p : points) top = std::max(top, p.norm());
    h.hi = upper.value_or(top);
    for (const auto& p : points) {
        std::size_t b = 0;
        if (h.hi > 0.0) {
            b = static_cast<std::size_t>(std::floor(p.norm() / h.hi * static_cast<double>(bins)));
            b = std::min(b, bins - 1);
        }
        ++h.counts[b];
    }
    if (!points.empty()) {
        for (std::size_t b = 0; b < bins; ++b) {
            h.frequencies[b] = static_cast<double>(h.counts[b]) / static_cast<double>(points.size());
        }
    }
    return h;
}

}  // namespace annr
