// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. `acceptance 5 6` runs a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "annr/baselines.hpp"
#include "annr/exact_delaunay.hpp"
#include "annr/external.hpp"
#include "annr/testbed.hpp"

using namespace annr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Queries that had to respect the empty-circumsphere invariant, summed over
// every ANNR run of criteria 3 to 7.
std::size_t g_violations = 0;
std::size_t g_checked_runs = 0;

void tally(const Engine& e) {
    g_violations += e.invariant_violations();
    ++g_checked_runs;
}

EngineConfig annr_config(const TargetFunction& fn, std::size_t budget, std::uint64_t seed) {
    EngineConfig c;
    c.box = fn.box;
    c.domain = fn.domain;
    c.budget = budget;
    c.walk_steps = 100;
    c.seed = seed;
    return c;
}

Outcome criterion1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_vol = 0.0, worst_res = 0.0;
    for (int m : {1, 2, 3, 6}) {
        for (int t = 0; t < 1000; ++t) {
            std::vector<Point> v;
            for (int i = 0; i <= m; ++i) v.push_back(Point::NullaryExpr(m, [&] { return u(rng); }));
            using M = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
            M e(m, m);
            for (int i = 0; i < m; ++i) e.col(i) = v[i + 1].cast<long double>() - v[0].cast<long double>();
            long double f = 1;
            for (int i = 2; i <= m; ++i) f *= i;
            const double ref = static_cast<double>(std::sqrt((e.transpose() * e).determinant()) / f);
            worst_vol = std::max(worst_vol, std::abs(simplex_volume(v) - ref) / ref);
            const Sphere s = circumsphere(v);
            for (const auto& p : v) worst_res = std::max(worst_res, std::abs((p - s.center).norm() - s.radius) / s.radius);
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "worst volume rel err " << worst_vol << ", worst circumsphere residual " << worst_res << ", " << secs << " s";
    return {worst_vol <= 1e-10 && worst_res < 1e-8 && secs < 5.0, d.str()};
}

Outcome criterion2() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::ostringstream d;
    auto suite = [&](std::size_t dim, std::size_t n, double min_recall) {
        double recall = 0.0;
        std::size_t unsound = 0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            const auto r = walk_recall(dim, n, s, 2000);
            recall += r.recall();
            unsound += r.unsound;
        }
        recall /= 10.0;
        ok = ok && unsound == 0 && recall >= min_recall;
        d << "m=" << dim << " n=" << n << " recall " << recall << " unsound " << unsound << "; ";
    };
    for (std::size_t n : {10, 25, 50}) suite(2, n, 0.95);
    suite(3, 20, 0.90);
    const double secs = seconds_since(t0);
    d << secs << " s";
    return {ok && secs < 60.0, d.str()};
}

Outcome criterion3() {
    const auto t0 = Clock::now();
    const auto g = builtin("gaussian");
    auto c = annr_config(g, 50000, 1);
    c.epsilon = 1e-3;
    Engine e(c, g.evaluate);
    const auto& trace = e.run();
    tally(e);
    double min_s = std::numeric_limits<double>::infinity();
    for (const auto& r : trace.rows) min_s = std::min(min_s, r.score);
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "stopped by " << trace.stop_reason << " after " << trace.rows.size() << " queries, min s_t " << min_s
      << ", lambda " << e.lambda() << ", " << secs << " s";
    return {trace.stop_reason == "threshold" && trace.rows.size() < 50000 && min_s < 1e-3 && secs < 300.0, d.str()};
}

Outcome criterion4() {
    const auto g = builtin("gaussian");
    const double radius = 2.0 * std::sqrt(0.1);
    std::vector<double> frac;
    std::ostringstream d;
    for (double lambda : {0.1, 1.0, 10.0}) {
        auto c = annr_config(g, 500, 1);
        c.lambda = lambda;
        Engine e(c, g.evaluate);
        e.run();
        tally(e);
        std::size_t near = 0;
        for (const auto& r : e.trace().rows) near += r.point.norm() <= radius ? 1 : 0;
        frac.push_back(static_cast<double>(near) / static_cast<double>(e.trace().rows.size()));
        d << "lambda " << lambda << ": " << frac.back() << "; ";
    }
    d << "ratio " << frac[2] / frac[0];
    return {frac[0] <= frac[1] && frac[1] <= frac[2] && frac[2] >= 1.5 * frac[0], d.str()};
}

Outcome criterion5() {
    const auto t0 = Clock::now();
    const auto sp = builtin("spiral");
    const auto test = make_test_set(sp, 10000, TestSetMode::grid, 12345);
    double annr_mae = 0.0, nannr_mae = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Engine e(annr_config(sp, 400, seed), sp.evaluate);
        e.run();
        tally(e);
        annr_mae += mae([&](const Point& x) { return e.predict(x); }, test) / 10.0;
        const auto r = nannr_run(NannrConfig{sp.box, 400, seed, {}}, sp.evaluate);
        nannr_mae += mae([&](const Point& x) { return nnr_predict(r.data, x); }, test) / 10.0;
    }
    DeferPartition p(sp.box, sp.evaluate);
    defer_run(p, 400);
    const double defer_mae = mae([&](const Point& x) { return p.predict(x); }, test);
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "MAE annr " << annr_mae << ", defer " << defer_mae << ", nannr " << nannr_mae << ", " << secs << " s";
    return {annr_mae < defer_mae && annr_mae < nannr_mae && secs < 600.0, d.str()};
}

Outcome criterion6() {
    const auto t0 = Clock::now();
    std::vector<double> annr_mae, defer_mae;
    for (double angle : {0.0, 10.0, 20.0, 30.0, 40.0}) {
        const auto el = builtin("ellipse", {{"angle", angle}});
        const auto test = make_test_set(el, 10000, TestSetMode::grid, 12345);
        double sum = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Engine e(annr_config(el, 300, seed), el.evaluate);
            e.run();
            tally(e);
            sum += mae([&](const Point& x) { return e.predict(x); }, test);
        }
        annr_mae.push_back(sum / 10.0);
        DeferPartition p(el.box, el.evaluate);
        defer_run(p, 300);
        defer_mae.push_back(mae([&](const Point& x) { return p.predict(x); }, test));
    }
    auto sd = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "std of MAE across angles: annr " << sd(annr_mae) << ", defer " << sd(defer_mae) << ", " << secs << " s";
    return {sd(annr_mae) < sd(defer_mae) && secs < 600.0, d.str()};
}

Outcome criterion7() {
    const auto t0 = Clock::now();
    const auto ball = builtin("ball");
    auto c = annr_config(ball, 10000, 1);
    // The initial design misses the ball, so lambda is set from the known [0,1] range.
    c.lambda = ball.box.volume();
    Engine e(c, ball.evaluate);
    e.run();
    tally(e);
    const auto r = nannr_run(NannrConfig{ball.box, 10000, 1, {}}, ball.evaluate);
    auto shell = [](const std::vector<TraceRow>& rows) {
        std::size_t k = 0;
        for (const auto& row : rows) {
            const double n = row.point.norm();
            k += (n >= 0.7 && n <= 1.3) ? 1 : 0;
        }
        return static_cast<double>(k) / static_cast<double>(rows.size());
    };
    const double annr_shell = shell(e.trace().rows);
    const double nannr_shell = shell(r.trace.rows);
    const auto test = make_test_set(ball, 100000, TestSetMode::uniform, 7);
    const double annr_mae = mae([&](const Point& x) { return e.predict(x); }, test);
    const double nannr_mae = mae([&](const Point& x) { return nnr_predict(r.data, x); }, test);
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "shell fraction annr " << annr_shell << " vs nannr " << nannr_shell << ", MAE annr " << annr_mae
      << " vs nannr " << nannr_mae << ", " << secs << " s";
    return {annr_shell >= 3.0 * nannr_shell && annr_mae < nannr_mae && secs < 1800.0, d.str()};
}

Outcome criterion8() {
    std::ostringstream d;
    d << g_violations << " violations over " << g_checked_runs << " runs";
    return {g_checked_runs > 0 && g_violations == 0, d.str()};
}

Outcome criterion9() {
    const auto t0 = Clock::now();
    const auto fn = builtin("gaussian");
    auto c = annr_config(fn, 100, 9);
    Engine local(c, fn.evaluate);
    Engine remote(c, external_objective(std::make_shared<ExternalEvaluator>(
                         std::vector<std::string>{STUB_EVALUATOR, "--function", "gaussian"}, 2)));
    local.run();
    remote.run();
    bool same = local.trace().rows.size() == 100 && remote.trace().rows.size() == 100;
    for (std::size_t i = 0; same && i < 100; ++i) {
        const auto &a = local.trace().rows[i], &b = remote.trace().rows[i];
        same = a.point == b.point && a.value == b.value && a.score == b.score && a.clamped == b.clamped &&
               a.pool_size == b.pool_size;
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << (same ? "traces identical" : "traces differ") << " over " << remote.trace().rows.size() << " queries, " << secs
      << " s";
    return {same && secs < 60.0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> checks{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    bool all = true;
    for (std::size_t k = 0; k < checks.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.contains(id)) continue;
        Outcome o;
        try {
            o = checks[k]();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")" << std::endl;
    }
    if (only.empty() || only.contains(10)) {
        std::cout << "criterion 10: N/A (needs the external likelihood, a trained VAE and the original baseline; "
                     "criterion 9 covers the protocol)"
                  << std::endl;
    }
    return all ? 0 : 1;
}
