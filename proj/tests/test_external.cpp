#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "annr/external.hpp"
#include "annr/testbed.hpp"

using namespace annr;

namespace {

Point pt(std::initializer_list<double> xs) {
    Point p(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) p[i++] = x;
    return p;
}

std::vector<std::string> stub(std::vector<std::string> extra = {}) {
    std::vector<std::string> argv{STUB_EVALUATOR, "--function", "sphere_sq"};
    argv.insert(argv.end(), extra.begin(), extra.end());
    return argv;
}

}  // namespace

TEST(Wire, ShortestRoundTripDecimals) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(format_double(-1.5e-7), "-1.5e-07");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(i % 40) - 20);
        EXPECT_EQ(*parse_double(format_double(v)), v);
    }
}

TEST(Wire, RequestLines) {
    EXPECT_EQ(format_hello(3), "HELLO m=3");
    EXPECT_EQ(format_eval_request(pt({0.25, -1, 3e-300})), "EVAL 0.25 -1 3e-300");
    const auto x = parse_eval_request("EVAL 0.25 -1", 2);
    ASSERT_TRUE(x);
    EXPECT_EQ(*x, pt({0.25, -1}));
    EXPECT_FALSE(parse_eval_request("EVAL 0.25", 2));
    EXPECT_FALSE(parse_eval_request("EVAL 0.25  1", 2));
    EXPECT_FALSE(parse_eval_request("EVAL a b", 2));
    EXPECT_FALSE(parse_eval_request("EVALUATE 1 2", 2));
}

TEST(Wire, ResponseLines) {
    EXPECT_EQ(parse_eval_response("2"), 2.0);
    EXPECT_EQ(parse_eval_response("-1.25e-3\r"), -1.25e-3);
    for (const std::string bad : {"nan", "inf", "", "2 3", "ERROR out of range", "READY"}) {
        try {
            parse_eval_response(bad);
            FAIL() << "accepted '" << bad << "'";
        } catch (const EvaluationError& e) {
            EXPECT_EQ(e.raw(), bad);
        }
    }
}

TEST(Wire, ServeProtocolTranscript) {
    std::istringstream in("HELLO m=2\nEVAL 1 1\nEVAL 0.5 x\nEVAL 0 0.5\n");
    std::ostringstream out;
    serve_protocol(in, out, 2, [](const Point& x) { return x.squaredNorm(); });
    EXPECT_EQ(out.str(), "READY\n2\nERROR malformed request\n0.25\n");
}

TEST(Wire, ServeProtocolRejectsWrongHello) {
    std::istringstream in("HELLO m=3\nEVAL 1 1\n");
    std::ostringstream out;
    serve_protocol(in, out, 2, [](const Point& x) { return x.squaredNorm(); });
    EXPECT_EQ(out.str(), "ERROR expected 'HELLO m=2'\n");
}

TEST(ExternalEvaluator, StubComputesSquaredNorm) {
    ExternalEvaluator ev(stub(), 2);
    EXPECT_EQ(ev.evaluate(pt({1, 1})), 2.0);
    EXPECT_EQ(ev.evaluate(pt({0.1, 0.2})), pt({0.1, 0.2}).squaredNorm());
    EXPECT_THROW(ev.evaluate(pt({1})), InvalidInput);
    EXPECT_THROW(ev.evaluate(pt({NAN, 1})), InvalidInput);
}

TEST(ExternalEvaluator, NanReplyIsAnEvaluationError) {
    ExternalEvaluator ev(stub({"--reply", "nan"}), 2);
    try {
        ev.evaluate(pt({1, 1}));
        FAIL();
    } catch (const EvaluationError& e) {
        EXPECT_EQ(e.raw(), "nan");
    }
}

TEST(ExternalEvaluator, ErrorReplyCarriesTheText) {
    ExternalEvaluator ev(stub({"--reply", "ERROR likelihood underflow"}), 2);
    try {
        ev.evaluate(pt({1, 1}));
        FAIL();
    } catch (const EvaluationError& e) {
        EXPECT_EQ(e.raw(), "ERROR likelihood underflow");
    }
}

TEST(ExternalEvaluator, ChannelClosedMidRunKeepsPartialTrace) {
    auto channel = std::make_shared<ExternalEvaluator>(stub({"--fail-after", "20"}), 2);
    EngineConfig c;
    c.box = BoundingBox::cube(2, -1, 1);
    c.budget = 50;
    c.walk_steps = 50;
    Engine e(c, external_objective(channel));
    EXPECT_THROW(e.run(), EvaluationError);
    EXPECT_EQ(e.trace().rows.size(), 20U - 14U);
    EXPECT_FALSE(e.trace().stop_reason.empty());
}

TEST(ExternalEvaluator, HandshakeFailures) {
    EXPECT_THROW(ExternalEvaluator({"/bin/cat"}, 2), EvaluationError);
    EXPECT_THROW(ExternalEvaluator({"/nonexistent/evaluator"}, 2), EvaluationError);
    EXPECT_THROW(ExternalEvaluator({STUB_EVALUATOR, "--function", "ball"}, 2), EvaluationError);
    EXPECT_THROW(ExternalEvaluator({}, 2), ConfigError);
}

TEST(ExternalEvaluator, Timeout) {
    EXPECT_THROW(ExternalEvaluator({"/bin/sleep", "5"}, 2, std::chrono::milliseconds(200)), EvaluationError);
}

TEST(ExternalEvaluator, RunMatchesInProcessTrace) {
    EngineConfig c;
    c.box = BoundingBox::cube(2, -1, 1);
    c.budget = 60;
    c.walk_steps = 50;
    c.seed = 12;
    const auto fn = builtin("sphere_sq");
    Engine local(c, fn.evaluate);
    Engine remote(c, external_objective(std::make_shared<ExternalEvaluator>(stub(), 2)));
    local.run();
    remote.run();
    ASSERT_EQ(local.trace().rows.size(), remote.trace().rows.size());
    for (std::size_t i = 0; i < local.trace().rows.size(); ++i) {
        EXPECT_EQ(local.trace().rows[i].point, remote.trace().rows[i].point);
        EXPECT_EQ(local.trace().rows[i].value, remote.trace().rows[i].value);
        EXPECT_EQ(local.trace().rows[i].score, remote.trace().rows[i].score);
    }
}
