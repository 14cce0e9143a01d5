#include <qctrl/error.hpp>
#include <qctrl/wave_expr.hpp>

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace qctrl;

TEST_CASE("parse: scaled sine call") {
    ExprPtr e = parse_expr("0.5*sine(f=1e7, phi=0)");
    REQUIRE(e->node == WaveExpr::Node::Mul);
    CHECK(e->lhs->node == WaveExpr::Node::Const);
    CHECK(e->lhs->value == 0.5);
    REQUIRE(e->rhs->node == WaveExpr::Node::Call);
    CHECK(e->rhs->kind == WaveKind::Sine);
    REQUIRE(e->rhs->args.size() == 2);
    CHECK(e->rhs->args[0].first == "f");
    CHECK(e->rhs->args[0].second->value == 1e7);
    CHECK(e->rhs->args[1].first == "phi");
    CHECK(e->rhs->args[1].second->value == 0.0);
}

TEST_CASE("parse: sum of two primitive calls") {
    ExprPtr e = parse_expr("gauss(mu=3e-6, sigma=5e-7) + dc(a=0.1)");
    REQUIRE(e->node == WaveExpr::Node::Add);
    CHECK(e->lhs->node == WaveExpr::Node::Call);
    CHECK(e->lhs->kind == WaveKind::Gaussian);
    CHECK(e->rhs->node == WaveExpr::Node::Call);
    CHECK(e->rhs->kind == WaveKind::DC);
}

TEST_CASE("parse: unclosed argument list reports a column") {
    try {
        parse_expr("sine(f=1e7");
        FAIL("expected ParseError");
    } catch (const ParseError& err) {
        // end of input right after the last token
        CHECK(err.column() == 11);
    }
}

TEST_CASE("parse: error cases") {
    CHECK_THROWS_AS(parse_expr("gaus(mu=1)"), ParseError);           // unknown primitive
    CHECK_THROWS_AS(parse_expr("sine(f=1, f=2)"), ParseError);       // duplicate argument
    CHECK_THROWS_AS(parse_expr("1 + * 2"), ParseError);              // misplaced operator
    CHECK_THROWS_AS(parse_expr("(1+2"), ParseError);                 // unclosed paren
    CHECK_THROWS_AS(parse_expr("1 2"), ParseError);                  // trailing input
    CHECK_THROWS_AS(parse_expr(""), ParseError);
    CHECK_THROWS_AS(parse_expr("sine(1=2)"), ParseError);            // argument name missing

    try {
        parse_expr("gaus(mu=1)");
    } catch (const ParseError& err) {
        CHECK(err.column() == 1);
        CHECK(std::string(err.what()).find("gaus") != std::string::npos);
    }
}

TEST_CASE("parse: precedence and associativity") {
    // a-b+c is (a-b)+c
    ExprPtr e = parse_expr("a-b+c");
    REQUIRE(e->node == WaveExpr::Node::Add);
    CHECK(e->lhs->node == WaveExpr::Node::Sub);

    // a+b*c keeps the product on the right
    e = parse_expr("a+b*c");
    REQUIRE(e->node == WaveExpr::Node::Add);
    CHECK(e->rhs->node == WaveExpr::Node::Mul);

    // unary minus folds into numeric literals, wraps everything else
    e = parse_expr("-3");
    CHECK(e->node == WaveExpr::Node::Const);
    CHECK(e->value == -3.0);
    e = parse_expr("-x");
    REQUIRE(e->node == WaveExpr::Node::Scale);
    CHECK(e->value == -1.0);
    CHECK(e->lhs->node == WaveExpr::Node::Param);
}

namespace {

// Random parser-reachable expression trees.
ExprPtr random_tree(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 7);
    std::uniform_real_distribution<double> num(-10.0, 10.0);
    std::uniform_int_distribution<int> kind_pick(0, kWaveKindCount - 1);
    switch (pick(rng)) {
        case 0:
            return expr::constant(num(rng));
        case 1:
            return expr::param(std::string(1, static_cast<char>('a' + (rng() % 26))) +
                               std::string(1, static_cast<char>('a' + (rng() % 26))));
        case 2:
            return expr::time_var();
        case 3:
            return expr::add(random_tree(rng, depth - 1), random_tree(rng, depth - 1));
        case 4:
            return expr::sub(random_tree(rng, depth - 1), random_tree(rng, depth - 1));
        case 5:
            return expr::mul(random_tree(rng, depth - 1), random_tree(rng, depth - 1));
        case 6: {
            // unary minus on a non-const child (const would have folded)
            ExprPtr child = random_tree(rng, depth - 1);
            if (child->node == WaveExpr::Node::Const) return expr::constant(-child->value);
            return expr::scale(-1.0, child);
        }
        default: {
            const WaveKind kind = static_cast<WaveKind>(kind_pick(rng));
            std::vector<std::pair<std::string, ExprPtr>> args;
            const char* names[] = {"a", "mu", "sigma"};
            std::uniform_int_distribution<int> argc(0, 3);
            int n = argc(rng);
            for (int i = 0; i < n; ++i) args.emplace_back(names[i], random_tree(rng, depth - 1));
            return expr::call(kind, std::move(args));
        }
    }
}

}  // namespace

TEST_CASE("print/parse round trip on random trees") {
    std::mt19937 rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        ExprPtr e = random_tree(rng, 4);
        const std::string text = print_expr(e);
        ExprPtr round = parse_expr(text);
        if (!expr_equal(e, round)) {
            CAPTURE(text);
            CHECK(expr_equal(e, round));
        }
    }
    CHECK(true);
}

TEST_CASE("sample: dc with bound parameter") {
    ExprPtr e = parse_expr("dc(a=x)");
    Waveform w = sample_expr(e, {{"x", 0.7}}, 100, 1e9);
    CHECK((w.samples == 0.7).all());
}

TEST_CASE("sample: sum of sines equals pointwise add bit-for-bit") {
    ExprPtr e = parse_expr("sine(f=1e7)+sine(f=2e7, phi=0.5)");
    Waveform w = sample_expr(e, {}, 2000, 1e9);
    Waveform a = generate(WaveKind::Sine, {{"f", 1e7}}, 2000, 1e9);
    Waveform b = generate(WaveKind::Sine, {{"f", 2e7}, {"phi", 0.5}}, 2000, 1e9);
    Waveform direct = pointwise(PointwiseOp::Add, a, b);
    CHECK(std::memcmp(w.samples.data(), direct.samples.data(), sizeof(double) * 2000) == 0);
}

TEST_CASE("sample: unbound parameter names the parameter") {
    ExprPtr e = parse_expr("dc(a=x)");
    try {
        sample_expr(e, {}, 16, 1e9);
        FAIL("expected Error");
    } catch (const Error& err) {
        CHECK(std::string(err.what()).find("x") != std::string::npos);
    }
}

TEST_CASE("sample: primitive argument may not depend on t") {
    ExprPtr e = parse_expr("sine(f=t)");
    CHECK_THROWS_AS(sample_expr(e, {}, 16, 1e9), Error);
}

TEST_CASE("sample: scalar algebra and time variable") {
    ExprPtr e = parse_expr("2*3+1");
    Waveform w = sample_expr(e, {}, 4, 1e9);
    CHECK((w.samples == 7.0).all());

    // t itself samples to the time axis
    Waveform tw = sample_expr(parse_expr("t"), {}, 4, 1e9);
    CHECK(tw.samples[3] == doctest::Approx(3e-9).epsilon(1e-15));
}

TEST_CASE("differentiate_expr: constants and time") {
    CHECK(differentiate_expr(expr::constant(5.0))->value == 0.0);
    CHECK(differentiate_expr(expr::time_var())->value == 1.0);
    CHECK(differentiate_expr(parse_expr("dc(a=3)"))->node == WaveExpr::Node::Const);
}

TEST_CASE("differentiate_expr: sine derivative matches the analytic form") {
    // d/dt a*sin(2 pi f t) = a*2*pi*f*cos(2 pi f t)
    ExprPtr e = parse_expr("sine(a=0.5, f=1e7)");
    ExprPtr d = differentiate_expr(e);
    Waveform got = sample_expr(d, {}, 3000, 1e9);
    const double w0 = 2.0 * std::numbers::pi * 1e7;
    Waveform expect = generate(
        WaveKind::Sine, {{"a", 0.5 * w0}, {"f", 1e7}, {"phi", std::numbers::pi / 2.0}}, 3000, 1e9);
    CHECK(((got.samples - expect.samples).abs() < 1e-6 * w0).all());
}

TEST_CASE("differentiate_expr: symbolic vs central differences") {
    struct Case {
        const char* text;
        ParamMap bindings;
    };
    const Case cases[] = {
        {"sine(a=1, f=1e7)", {}},
        {"sine(a=0.7, f=5e6, phi=0.3)", {}},
        {"gauss(a=1, mu=3e-6, sigma=5e-7)", {}},
        {"gauss(a=0.5, mu=2e-6, sigma=3e-7)+sine(f=4e6)", {}},
        {"0.25*sine(f=8e6)", {}},
        {"sine(f=3e6)*gauss(mu=3e-6, sigma=1e-6)", {}},
        {"sine(f=k)-gauss(mu=3e-6, sigma=8e-7)", {{"k", 6e6}}},
    };
    const Eigen::Index n = 6000;
    const double fs = 1e9;
    for (const auto& c : cases) {
        CAPTURE(c.text);
        ExprPtr e = parse_expr(c.text);
        Waveform base = sample_expr(e, c.bindings, n, fs);
        Waveform sym = sample_expr(differentiate_expr(e), c.bindings, n, fs);
        auto fd = oracle::central_diff(oracle::to_vec(base), fs);
        // compare per-sample slopes (derivative / sample_rate)
        double max_err = 0.0;
        for (Eigen::Index i = 1; i + 1 < n; ++i)
            max_err = std::max(max_err, std::abs(sym.samples[i] - fd[i]) / fs);
        CHECK(max_err < 1e-4);
    }
}

TEST_CASE("differentiate_expr: slope derivative is a rectangle") {
    ExprPtr e = parse_expr("slope(a=1, t0=1e-6, T=2e-6)");
    ExprPtr d = differentiate_expr(e);
    REQUIRE(d->node == WaveExpr::Node::Call);
    CHECK(d->kind == WaveKind::Rectangle);
    // inside the ramp the slope's sampled derivative is a/T
    Waveform sym = sample_expr(d, {}, 4000, 1e9);
    CHECK(sym.samples[2000] == doctest::Approx(5e5).epsilon(1e-9));
    CHECK(sym.samples[100] == 0.0);
    CHECK(sym.samples[3500] == 0.0);
}

TEST_CASE("differentiate_expr: unsupported nodes are named") {
    try {
        differentiate_expr(parse_expr("flattop(t1=0, t2=1e-6, sigma=1e-8)"));
        FAIL("expected Error");
    } catch (const Error& err) {
        CHECK(std::string(err.what()).find("flattop") != std::string::npos);
    }
    CHECK_THROWS_AS(differentiate_expr(parse_expr("a/b")), Error);
    CHECK_THROWS_AS(differentiate_expr(parse_expr("rect(t1=0, t2=1)")), Error);
    CHECK_THROWS_AS(differentiate_expr(parse_expr("triangle(t1=0, t2=1)")), Error);
}

TEST_CASE("expr structural equality") {
    CHECK(expr_equal(parse_expr("1+x*2"), parse_expr("1 + x * 2")));
    CHECK(!expr_equal(parse_expr("1+x"), parse_expr("x+1")));
    CHECK(!expr_equal(parse_expr("sine(f=1)"), parse_expr("sine(f=2)")));
    CHECK(!expr_equal(parse_expr("sine(f=1)"), parse_expr("gauss(mu=1, sigma=1)")));
}
