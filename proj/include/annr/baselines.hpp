#pragma once

// Comparison methods.
//
// DeferPartition is a simplified rectangular-partition refiner in the spirit
// of DEFER: cells are boxes valued at their centers, the highest-scoring cell
// is trisected along its longest edge, and the middle child keeps the parent's
// center and value. It is a stand-in, not a reimplementation of the original
// method's acquisition rule.
//
// nannr_run is the non-active ablation: uniform random queries, predicted by
// nearest-neighbour regression.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "annr/engine.hpp"
#include "annr/errors.hpp"
#include "annr/geometry.hpp"
#include "annr/spatial_index.hpp"

namespace annr {

struct BoxCell {
    std::size_t id = 0;
    Point lo;
    Point hi;
    Point center;
    double value = 0.0;

    double volume() const { return (hi - lo).prod(); }
    bool contains(const Point& x) const {
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }
};

struct DeferStep {
    std::size_t split_cell = 0;
    double score = 0.0;
    Point queries[2];
    double values[2] = {0.0, 0.0};
};

class DeferPartition {
public:
    /// Root cell is the whole box; its center is evaluated immediately.
    DeferPartition(const BoundingBox& box, Objective f) : box_(box), f_(std::move(f)) {
        if (!f_) throw ConfigError("objective is empty");
        BoxCell root;
        root.id = 0;
        root.lo = box.lo();
        root.hi = box.hi();
        root.center = 0.5 * (root.lo + root.hi);
        root.value = evaluate(root.center);
        max_abs_ = std::abs(root.value);
        nodes_.push_back(Node{std::move(root), {}, true});
        leaves_.push_back(0);
    }

    /// Exploration floor eta = 1e-6 (max |value| + 1).
    double eta() const { return 1e-6 * (max_abs_ + 1.0); }

    double score(const BoxCell& c) const { return (std::abs(c.value) + eta()) * c.volume(); }

    /// Trisects the best cell (ties: lowest id) and evaluates the two new
    /// outer centers.
    DeferStep step() {
        std::size_t best_leaf = 0;
        double best_score = -1.0;
        for (std::size_t k = 0; k < leaves_.size(); ++k) {
            const BoxCell& c = nodes_[leaves_[k]].cell;
            const double s = score(c);
            if (s > best_score || (s == best_score && c.id < nodes_[leaves_[best_leaf]].cell.id)) {
                best_score = s;
                best_leaf = k;
            }
        }
        const std::size_t parent = leaves_[best_leaf];
        const BoxCell cell = nodes_[parent].cell;

        Eigen::Index axis = 0;
        (cell.hi - cell.lo).maxCoeff(&axis);
        const double width = (cell.hi[axis] - cell.lo[axis]) / 3.0;

        DeferStep out;
        out.split_cell = cell.id;
        out.score = best_score;

        std::vector<std::size_t> kids;
        for (int part = 0; part < 3; ++part) {
            BoxCell child;
            child.id = next_id_++;
            child.lo = cell.lo;
            child.hi = cell.hi;
            child.lo[axis] = part == 0 ? cell.lo[axis] : cell.lo[axis] + part * width;
            child.hi[axis] = part == 2 ? cell.hi[axis] : cell.lo[axis] + (part + 1) * width;
            if (part == 1) {
                child.center = cell.center;
                child.value = cell.value;
            } else {
                child.center = 0.5 * (child.lo + child.hi);
                child.value = evaluate(child.center);
                max_abs_ = std::max(max_abs_, std::abs(child.value));
                out.queries[part / 2] = child.center;
                out.values[part / 2] = child.value;
            }
            kids.push_back(nodes_.size());
            nodes_.push_back(Node{std::move(child), {}, true});
        }
        nodes_[parent].leaf = false;
        nodes_[parent].children = kids;
        leaves_.erase(leaves_.begin() + static_cast<std::ptrdiff_t>(best_leaf));
        leaves_.insert(leaves_.end(), kids.begin(), kids.end());
        return out;
    }

    /// Value of the cell containing x; on shared faces the lowest cell id.
    double predict(const Point& x) const {
        if (!box_.contains(x)) throw InvalidInput("prediction point outside the partition");
        const BoxCell* best = nullptr;
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            const Node& node = nodes_[stack.back()];
            stack.pop_back();
            if (!node.cell.contains(x)) continue;
            if (node.leaf) {
                if (!best || node.cell.id < best->id) best = &node.cell;
                continue;
            }
            for (auto c : node.children) stack.push_back(c);
        }
        return best->value;
    }

    std::vector<BoxCell> cells() const {
        std::vector<BoxCell> out;
        out.reserve(leaves_.size());
        for (auto k : leaves_) out.push_back(nodes_[k].cell);
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        return out;
    }

    std::size_t cell_count() const { return leaves_.size(); }
    std::size_t evaluations() const { return evaluations_; }
    const BoundingBox& box() const { return box_; }

private:
    struct Node {
        BoxCell cell;
        std::vector<std::size_t> children;
        bool leaf = true;
    };

    double evaluate(const Point& x) {
        const double v = f_(x);
        if (!std::isfinite(v)) throw EvaluationError("objective returned a non-finite value");
        ++evaluations_;
        return v;
    }

    BoundingBox box_;
    Objective f_;
    std::vector<Node> nodes_;
    std::vector<std::size_t> leaves_;
    std::size_t next_id_ = 1;
    std::size_t evaluations_ = 0;
    double max_abs_ = 0.0;
};

using DeferHook = std::function<void(const DeferPartition&, const RunTrace&)>;

/// Refines until another step would exceed `budget` evaluations. Trace rows
/// carry the split cell's score in the score column. `after_step` sees the
/// partition and trace after every step.
inline RunTrace defer_run(DeferPartition& partition, std::size_t budget, const DeferHook& after_step = {}) {
    RunTrace trace;
    try {
        while (partition.evaluations() + 2 <= budget) {
            const auto t0 = std::chrono::steady_clock::now();
            const DeferStep s = partition.step();
            const double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            for (int k = 0; k < 2; ++k) {
                TraceRow row;
                row.t = trace.rows.size() + 1;
                row.point = s.queries[k];
                row.value = s.values[k];
                row.score = s.score;
                row.pool_size = partition.cell_count();
                row.ms = ms / 2.0;
                trace.rows.push_back(std::move(row));
            }
            if (after_step) after_step(partition, trace);
        }
        trace.stop_reason = "budget";
    } catch (const std::exception& e) {
        trace.stop_reason = e.what();
        throw;
    }
    return trace;
}

struct NannrConfig {
    BoundingBox box;
    std::size_t budget = 1000;
    std::uint64_t seed = 0;
    DomainPredicate domain;
};

struct NannrResult {
    Dataset data;
    RunTrace trace;
    std::string error;  // empty on success; the dataset then holds every point
};

/// `budget` i.i.d. uniform queries (inside the domain predicate when given).
/// An evaluation failure stops the run and keeps what was collected.
inline NannrResult nannr_run(const NannrConfig& config, const Objective& f) {
    if (config.budget < 1) throw ConfigError("budget must be at least 1");
    NannrResult out{Dataset(config.box.dim()), {}, {}};
    std::mt19937_64 rng(config.seed);
    while (out.data.size() < config.budget) {
        const auto t0 = std::chrono::steady_clock::now();
        Point p = config.box.sample(rng);
        if (config.domain && !config.domain(p)) continue;
        if (!out.data.empty() && out.data.nearest(p).distance < kDuplicateDistance) continue;
        double v = 0.0;
        try {
            v = f(p);
            if (!std::isfinite(v)) throw EvaluationError("objective returned a non-finite value");
        } catch (const std::exception& e) {
            out.error = e.what();
            out.trace.stop_reason = e.what();
            return out;
        }
        out.data.insert(p, v);
        TraceRow row;
        row.t = out.data.size();
        row.point = std::move(p);
        row.value = v;
        row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        out.trace.rows.push_back(std::move(row));
    }
    out.trace.stop_reason = "budget";
    return out;
}

}  // namespace annr
