#pragma once

// The active learning loop. Each step runs a batch of Voronoi walks on the
// frozen dataset, merges the simplices they find into a persistent pool
// ranked by clipped lifted volume, pops the best still-Delaunay simplex and
// queries its circumcenter (Euler-line clamped into the box).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "annr/delaunay_walk.hpp"
#include "annr/errors.hpp"
#include "annr/geometry.hpp"
#include "annr/spatial_index.hpp"

namespace annr {

using Objective = std::function<double(const Point&)>;
using DomainPredicate = std::function<bool(const Point&)>;

struct EngineConfig {
    BoundingBox box;
    std::optional<double> lambda;  // nullopt: resolved from the initial data
    double epsilon = 1e-6;
    std::size_t budget = 1000;
    std::size_t walk_steps = 100;
    std::optional<Degrees> alpha0;
    std::size_t n_init = 10;
    bool include_corners = true;
    std::uint64_t seed = 0;
    DomainPredicate domain;  // queries outside it are never made
    unsigned threads = 1;

    std::size_t dim() const { return box.dim(); }

    void validate() const {
        if (box.dim() == 0) throw ConfigError("bounding box is not set");
        if (lambda && !(*lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (budget < 1) throw ConfigError("budget must be at least 1");
        if (walk_steps < 1) throw ConfigError("walk_steps must be at least 1");
        if (alpha0 && !(alpha0->value > 0.0 && alpha0->value < 90.0)) {
            throw ConfigError("alpha0 must lie in (0, 90) degrees");
        }
        if (threads < 1) throw ConfigError("threads must be at least 1");
        const std::size_t corners = include_corners ? (std::size_t{1} << dim()) : 0;
        if (n_init + corners < dim() + 1) {
            throw ConfigError("initial design has fewer than m+1 points");
        }
    }
};

struct TraceRow {
    std::size_t t = 0;
    Point point;
    double value = 0.0;
    double score = 0.0;
    bool clamped = false;
    std::size_t pool_size = 0;
    double ms = 0.0;
};

struct RunTrace {
    std::vector<TraceRow> rows;
    std::string stop_reason;  // "threshold", "budget" or the error message
};

/// Vol(A) / (max f - min f) over the given values; 1 when they are constant.
inline double resolve_lambda(std::span<const double> values, const BoundingBox& box,
                             std::string* warning = nullptr) {
    if (values.empty()) throw InvalidInput("no values to resolve lambda from");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) {
        if (warning) *warning = "initial function values are constant; using lambda = 1";
        return 1.0;
    }
    return box.volume() / range;
}

class Engine {
public:
    Engine(EngineConfig config, Objective f)
        : config_(std::move(config)), f_(std::move(f)), data_(config_.box.dim()), rng_(config_.seed) {
        config_.validate();
        if (!f_) throw ConfigError("objective is empty");
    }

    /// Uniform samples plus (optionally) the 2^m box corners, all evaluated.
    void initialize() {
        std::vector<Point> design;
        for (std::size_t i = 0; i < config_.n_init; ++i) {
            Point p = config_.box.sample(rng_);
            if (config_.domain) {
                std::size_t tries = 0;
                while (!config_.domain(p)) {
                    if (++tries > 1000000) throw ConfigError("domain predicate rejects the whole box");
                    p = config_.box.sample(rng_);
                }
            }
            design.push_back(std::move(p));
        }
        if (config_.include_corners) {
            for (auto& c : config_.box.corners()) {
                if (!config_.domain || config_.domain(c)) design.push_back(std::move(c));
            }
        }
        if (design.size() < config_.dim() + 1) throw ConfigError("initial design has fewer than m+1 points");
        for (const auto& p : design) {
            double v = 0.0;
            try {
                v = f_(p);
            } catch (const std::exception& e) {
                throw EvaluationError("initialization failed at " + format_point(p) + ": " + e.what());
            }
            if (!std::isfinite(v)) throw EvaluationError("initialization got a non-finite value at " + format_point(p));
            data_.insert(p, v);
        }
        if (config_.lambda) {
            lambda_ = *config_.lambda;
        } else {
            std::string warning;
            lambda_ = resolve_lambda(data_.values(), config_.box, &warning);
            if (!warning.empty()) warnings_.push_back(warning);
        }
        initialized_ = true;
    }

    /// One query. Returns the trace row just recorded.
    const TraceRow& step() {
        if (!initialized_) initialize();
        const auto t0 = std::chrono::steady_clock::now();

        run_walk_batch(seed_targets_);
        std::optional<Chosen> chosen = pop_best();
        for (std::size_t retry = 0; !chosen && retry < kStallRetries; ++retry) {
            run_walk_batch({});
            chosen = pop_best();
        }
        if (!chosen) {
            std::ostringstream msg;
            msg << "candidate pool exhausted after " << kStallRetries << " fresh walk batches (dataset size "
                << data_.size() << ", step " << trace_.rows.size() + 1 << ")";
            throw StalledEngine(msg.str());
        }

        if (!chosen->clamped) {
            const double nearest = data_.nearest(chosen->query).distance;
            if (nearest < (1.0 - 1e-6) * chosen->candidate.circumradius) ++violations_;
        }

        double value = 0.0;
        try {
            value = f_(chosen->query);
        } catch (const EvaluationError&) {
            throw;
        } catch (const std::exception& e) {
            throw EvaluationError(std::string("evaluation failed: ") + e.what());
        }
        if (!std::isfinite(value)) throw EvaluationError("objective returned a non-finite value");
        data_.insert(chosen->query, value);

        seed_targets_.clear();
        seed_targets_.push_back(chosen->barycenter);
        for (auto it = pool_.begin(); it != pool_.end() && seed_targets_.size() < kSeedTargets; ++it) {
            seed_targets_.push_back(vertex_barycenter(it->candidate.vertices));
        }

        TraceRow row;
        row.t = trace_.rows.size() + 1;
        row.point = chosen->query;
        row.value = value;
        row.score = chosen->candidate.score;
        row.clamped = chosen->clamped;
        row.pool_size = pool_.size();
        row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        trace_.rows.push_back(std::move(row));
        return trace_.rows.back();
    }

    /// Steps until the chosen score drops below epsilon or the budget is spent.
    /// On error the partial trace stays available through trace().
    const RunTrace& run() {
        try {
            if (!initialized_) initialize();
            while (trace_.rows.size() < config_.budget) {
                const TraceRow& row = step();
                if (row.score < config_.epsilon) {
                    trace_.stop_reason = "threshold";
                    return trace_;
                }
            }
            trace_.stop_reason = "budget";
        } catch (const std::exception& e) {
            trace_.stop_reason = e.what();
            throw;
        }
        return trace_;
    }

    const EngineConfig& config() const { return config_; }
    const Dataset& dataset() const { return data_; }
    const RunTrace& trace() const { return trace_; }
    double lambda() const { return lambda_; }
    std::size_t pool_size() const { return pool_.size(); }
    std::size_t invariant_violations() const { return violations_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    double predict(const Point& x) const { return nnr_predict(data_, x); }

    /// Score of a simplex under the current lambda and clipping angle.
    double score(const SimplexCandidate& c) const {
        std::vector<Point> verts;
        std::vector<double> vals;
        for (auto v : c.vertices) {
            verts.emplace_back(data_.point(v));
            vals.push_back(data_.value(v));
        }
        return clipped_score(c.base_volume, lifted_volume(verts, vals, lambda_), config_.alpha0);
    }

private:
    static constexpr std::size_t kSeedTargets = 4;
    static constexpr std::size_t kStallRetries = 3;

    struct PoolEntry {
        SimplexCandidate candidate;
        bool operator<(const PoolEntry& o) const {
            if (candidate.score != o.candidate.score) return candidate.score > o.candidate.score;
            return candidate.vertices < o.candidate.vertices;
        }
    };

    struct Chosen {
        SimplexCandidate candidate;
        Point query;
        Point barycenter;
        bool clamped = false;
    };

    static std::string format_point(const Point& p) {
        std::ostringstream os;
        os.precision(17);
        os << '(';
        for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
        os << ')';
        return os.str();
    }

    Point vertex_barycenter(const VertexKey& vertices) const {
        Point b = Point::Zero(static_cast<Eigen::Index>(data_.dim()));
        for (auto v : vertices) b += data_.point(v);
        return b / static_cast<double>(vertices.size());
    }

    /// kSeedTargets walks start next to the given targets (visibility walk
    /// from a random datapoint), the rest from uniformly random datapoints.
    /// Walks read the dataset only; results merge in walk order.
    void run_walk_batch(const std::vector<Point>& targets) {
        const std::size_t walks = kSeedTargets + 1;
        const std::size_t steps = std::max<std::size_t>(1, config_.walk_steps / walks);
        const SpatialIndex& index = data_.index();
        std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);

        std::vector<std::size_t> starts;
        std::vector<std::uint64_t> seeds;
        for (std::size_t w = 0; w < walks; ++w) {
            std::size_t start = pick(rng_);
            if (w < targets.size() && w < kSeedTargets) start = visibility_walk(start, targets[w], index);
            starts.push_back(start);
            seeds.push_back(rng_());
        }

        auto walk = [&index, steps](std::size_t start, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return skeleton_walk(start, steps, rng, index);
        };
        std::vector<std::vector<SimplexCandidate>> found(walks);
        if (config_.threads > 1) {
            std::vector<std::future<std::vector<SimplexCandidate>>> jobs;
            for (std::size_t w = 0; w < walks; ++w) {
                jobs.push_back(std::async(std::launch::async, walk, starts[w], seeds[w]));
            }
            for (std::size_t w = 0; w < walks; ++w) found[w] = jobs[w].get();
        } else {
            for (std::size_t w = 0; w < walks; ++w) found[w] = walk(starts[w], seeds[w]);
        }

        const std::size_t birth = trace_.rows.size() + 1;
        for (auto& batch : found) {
            for (auto& c : batch) {
                if (in_pool_.contains(c.vertices) || retired_.contains(c.vertices)) continue;
                c.score = score(c);
                c.birth_step = birth;
                in_pool_.insert(c.vertices);
                pool_.insert(PoolEntry{std::move(c)});
            }
        }
    }

    std::optional<Chosen> pop_best() {
        while (!pool_.empty()) {
            auto node = pool_.extract(pool_.begin());
            SimplexCandidate c = std::move(node.value().candidate);
            in_pool_.erase(c.vertices);
            retired_.insert(c.vertices);
            if (!validate_candidate(c, data_.index())) continue;

            Chosen chosen;
            chosen.barycenter = vertex_barycenter(c.vertices);
            chosen.clamped = !config_.box.contains(c.circumcenter);
            try {
                chosen.query = chosen.clamped
                                   ? clamp_to_boundary(chosen.barycenter, c.circumcenter, config_.box)
                                   : c.circumcenter;
            } catch (const InvalidInput&) {
                continue;
            }
            if (config_.domain && !config_.domain(chosen.query)) continue;
            if (data_.nearest(chosen.query).distance < kDuplicateDistance) continue;
            chosen.candidate = std::move(c);
            return chosen;
        }
        return std::nullopt;
    }

    EngineConfig config_;
    Objective f_;
    Dataset data_;
    std::mt19937_64 rng_;
    double lambda_ = 1.0;
    bool initialized_ = false;

    std::set<PoolEntry> pool_;
    VertexKeySet in_pool_;
    VertexKeySet retired_;
    std::vector<Point> seed_targets_;

    RunTrace trace_;
    std::size_t violations_ = 0;
    std::vector<std::string> warnings_;
};

}  // namespace annr
