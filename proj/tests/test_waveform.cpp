#include <qctrl/error.hpp>
#include <qctrl/waveform.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace qctrl;

namespace {
bool bit_identical(const Samples& a, const Samples& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}
}  // namespace

TEST_CASE("generate: dc is constant") {
    Waveform w = generate(WaveKind::DC, {{"a", 0.3}}, 6000, 1e9);
    REQUIRE(w.size() == 6000);
    CHECK((w.samples == 0.3).all());
}

TEST_CASE("generate: sine hits quarter-period peak") {
    Waveform w = generate(WaveKind::Sine, {{"a", 1.0}, {"f", 1e7}, {"phi", 0.0}}, 6000, 1e9);
    CHECK(w.samples[25] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.samples[0] == 0.0);
}

TEST_CASE("generate: gaussian peak and one-sigma point") {
    Waveform w = generate(WaveKind::Gaussian, {{"a", 1.0}, {"mu", 3e-6}, {"sigma", 5e-7}}, 6000, 1e9);
    CHECK(w.samples[3000] == 1.0);
    CHECK(w.samples[3500] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("generate: flattop edge value is half amplitude") {
    Waveform w = generate(WaveKind::Flattop,
                          {{"a", 1.0}, {"sigma", 50e-9}, {"t1", 1e-6}, {"t2", 4e-6}}, 6000, 1e9);
    CHECK(w.samples[1000] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("generate: flattop plateau saturates to amplitude") {
    // t2 - t1 = 3 us >= 10 sigma
    Waveform w = generate(WaveKind::Flattop,
                          {{"a", 0.7}, {"sigma", 50e-9}, {"t1", 1e-6}, {"t2", 4e-6}}, 6000, 1e9);
    CHECK(std::abs(w.samples[2500] - 0.7) < 1e-9);
}

TEST_CASE("generate: rectangle, triangle, trapezoid, slope shapes") {
    Waveform r = generate(WaveKind::Rectangle, {{"a", 1.0}, {"t1", 1e-6}, {"t2", 2e-6}}, 3000, 1e9);
    CHECK(r.samples[999] == 0.0);
    CHECK(r.samples[1000] == 1.0);   // [t1, t2)
    CHECK(r.samples[1999] == 1.0);
    CHECK(r.samples[2000] == 0.0);

    Waveform tri = generate(WaveKind::Triangle, {{"a", 2.0}, {"t1", 0.0}, {"t2", 2e-6}}, 2001, 1e9);
    CHECK(tri.samples[0] == 0.0);
    CHECK(tri.samples[1000] == 2.0);
    CHECK(tri.samples[2000] == 0.0);
    CHECK(tri.samples[500] == doctest::Approx(1.0).epsilon(1e-12));

    Waveform tz = generate(WaveKind::IsoscelesTrapezoid,
                           {{"a", 1.0}, {"t1", 1e-6}, {"t2", 3e-6}, {"r", 5e-7}}, 4000, 1e9);
    CHECK(tz.samples[1000] == 0.0);
    CHECK(tz.samples[1250] == doctest::Approx(0.5).epsilon(1e-12));  // mid-ramp
    CHECK(tz.samples[2000] == 1.0);                                  // plateau
    CHECK(tz.samples[2750] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tz.samples[3500] == 0.0);

    Waveform sl = generate(WaveKind::Slope, {{"a", 1.0}, {"t0", 0.0}, {"T", 1e-6}}, 2000, 1e9);
    CHECK(sl.samples[500] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sl.samples[1500] == 1.0);  // clamped past the ramp
}

TEST_CASE("generate: parameter validation") {
    CHECK_THROWS_AS(generate(WaveKind::Sine, {{"a", 1.0}}, 100, 1e9), FieldError);  // missing f
    CHECK_THROWS_AS(generate(WaveKind::DC, {{"a", 1.0}, {"bogus", 2.0}}, 100, 1e9), FieldError);
    CHECK_THROWS_AS(
        generate(WaveKind::Gaussian, {{"mu", 0.0}, {"sigma", -1.0}}, 100, 1e9), FieldError);
    CHECK_THROWS_AS(generate(WaveKind::DC, {{"a", 1.0}}, 0, 1e9), Error);
    CHECK_THROWS_AS(
        generate(WaveKind::IsoscelesTrapezoid, {{"t1", 0.0}, {"t2", 1e-6}, {"r", 6e-7}}, 100, 1e9),
        FieldError);  // plateau would be negative
}

TEST_CASE("generate: determinism") {
    ParamMap p{{"a", 0.8}, {"f", 1.3e7}, {"phi", 0.4}};
    Waveform a = generate(WaveKind::Sine, p, 6000, 1e9);
    Waveform b = generate(WaveKind::Sine, p, 6000, 1e9);
    CHECK(bit_identical(a.samples, b.samples));
}

TEST_CASE("pointwise: add/mul basics") {
    Waveform a = generate(WaveKind::DC, {{"a", 0.2}}, 100, 1e9);
    Waveform b = generate(WaveKind::DC, {{"a", 0.3}}, 100, 1e9);
    Waveform sum = pointwise(PointwiseOp::Add, a, b);
    CHECK((sum.samples == 0.5).all());

    std::mt19937 rng(7);
    Waveform w = oracle::random_waveform(rng, 64, 64);
    Waveform zero = generate(WaveKind::DC, {{"a", 0.0}}, 64, 1e9);
    Waveform prod = pointwise(PointwiseOp::Mul, w, zero);
    CHECK((prod.samples == 0.0).all());
}

TEST_CASE("pointwise: zero-extension of the shorter operand") {
    Waveform a, b;
    a.sample_rate = b.sample_rate = 1e9;
    a.samples.resize(4);
    a.samples << 1, 2, 3, 4;
    b.samples.resize(6);
    b.samples << 10, 20, 30, 40, 50, 60;
    Waveform sum = pointwise(PointwiseOp::Add, a, b);
    REQUIRE(sum.size() == 6);
    CHECK(sum.samples[3] == 44.0);
    CHECK(sum.samples[4] == 50.0);
    CHECK(sum.samples[5] == 60.0);
}

TEST_CASE("pointwise: mismatched sample_rate rejected") {
    Waveform a, b;
    a.sample_rate = 1e9;
    b.sample_rate = 2e9;
    a.samples = Samples::Zero(4);
    b.samples = Samples::Zero(4);
    CHECK_THROWS_AS(pointwise(PointwiseOp::Add, a, b), Error);
}

TEST_CASE("pointwise: algebra laws") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Waveform a = oracle::random_waveform(rng, 128, 128);
        Waveform b = oracle::random_waveform(rng, 128, 128);
        Waveform c = oracle::random_waveform(rng, 128, 128);

        // add/mul commute bitwise (IEEE addition is commutative)
        CHECK(bit_identical(pointwise(PointwiseOp::Add, a, b).samples,
                            pointwise(PointwiseOp::Add, b, a).samples));
        CHECK(bit_identical(pointwise(PointwiseOp::Mul, a, b).samples,
                            pointwise(PointwiseOp::Mul, b, a).samples));

        // associativity within rounding of the intermediate sums
        Waveform ab_c = pointwise(PointwiseOp::Add, pointwise(PointwiseOp::Add, a, b), c);
        Waveform a_bc = pointwise(PointwiseOp::Add, a, pointwise(PointwiseOp::Add, b, c));
        for (Eigen::Index n = 0; n < 128; ++n) {
            const double allowance = 2.0 * std::numeric_limits<double>::epsilon() *
                                     (std::abs(a.samples[n]) + std::abs(b.samples[n]) +
                                      std::abs(c.samples[n]));
            CHECK(std::abs(ab_c.samples[n] - a_bc.samples[n]) <= allowance);
        }

        // add with zeros is the bitwise identity
        Waveform zeros;
        zeros.sample_rate = a.sample_rate;
        zeros.samples = Samples::Zero(a.size());
        CHECK(bit_identical(pointwise(PointwiseOp::Add, a, zeros).samples, a.samples));
    }
}

TEST_CASE("integrate: rectangle area") {
    Waveform r = generate(WaveKind::Rectangle, {{"a", 1.0}, {"t1", 0.0}, {"t2", 1e-3}}, 1000, 1e9);
    Waveform total = integrate(r);
    CHECK(total.samples[999] == doctest::Approx(1.0e-6).epsilon(1e-12));
}

TEST_CASE("integrate: zero input stays zero") {
    Waveform z = generate(WaveKind::DC, {{"a", 0.0}}, 256, 1e9);
    CHECK((integrate(z).samples == 0.0).all());
}

TEST_CASE("integrate: sine over integer periods sums to ~zero") {
    // 20 full periods of a 10 MHz tone at 1 GS/s
    Waveform s = generate(WaveKind::Sine, {{"a", 1.0}, {"f", 1e7}, {"phi", 0.0}}, 2000, 1e9);
    Waveform total = integrate(s);
    auto direct = oracle::integrate_direct(oracle::to_vec(s), s.sample_rate);
    CHECK(std::abs(total.samples[1999] - direct.back()) < 1e-18);
    CHECK(std::abs(total.samples[1999]) < 1e-9 * 2000);
}

TEST_CASE("integrate: linearity") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Waveform a = oracle::random_waveform(rng, 512, 512);
        Waveform b = oracle::random_waveform(rng, 512, 512);
        Waveform lhs = integrate(pointwise(PointwiseOp::Add, a, b));
        Waveform rhs = pointwise(PointwiseOp::Add, integrate(a), integrate(b));
        const double scale = rhs.samples.abs().maxCoeff();
        CHECK(((lhs.samples - rhs.samples).abs() <= 1e-12 * scale).all());
    }
}

TEST_CASE("differentiate: slope gives a constant") {
    const Eigen::Index n = 1000;
    Waveform sl = generate(WaveKind::Slope, {{"a", 1.0}, {"t0", 0.0}, {"T", 1e-6}}, n, 1e9);
    Waveform d = differentiate_numeric(sl);
    CHECK(d.samples[0] == 0.0);
    CHECK(((d.samples.tail(n - 1) - 1e9 / 1000.0).abs() < 1e-3).all());
}

TEST_CASE("differentiate: dc gives zeros") {
    Waveform w = generate(WaveKind::DC, {{"a", 0.42}}, 128, 1e9);
    Waveform d = differentiate_numeric(w);
    CHECK((d.samples == 0.0).all());
}

TEST_CASE("differentiate after integrate recovers the waveform") {
    std::mt19937 rng(31);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Waveform w = oracle::random_waveform(rng);
        Waveform back = differentiate_numeric(integrate(w));
        const double scale = w.samples.abs().maxCoeff();
        const Eigen::Index n = w.size();
        const double max_err =
            (back.samples.tail(n - 1) - w.samples.tail(n - 1)).abs().maxCoeff();
        worst = std::max(worst, max_err / scale);
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("convolve: unit-area impulse is the identity kernel") {
    std::mt19937 rng(47);
    Waveform w = oracle::random_waveform(rng, 300, 300);
    Waveform impulse;
    impulse.sample_rate = w.sample_rate;
    impulse.samples = Samples::Constant(1, w.sample_rate);  // single sample, area 1
    Waveform out = convolve(w, impulse);
    REQUIRE(out.size() == w.size());
    CHECK(((out.samples - w.samples).abs() <= 1e-12 * w.samples.abs().maxCoeff()).all());
}

TEST_CASE("convolve: rect * rect forms a triangle") {
    const double amp = 0.5, width = 1e-6;
    Waveform r = generate(WaveKind::Rectangle, {{"a", amp}, {"t1", 0.0}, {"t2", width}}, 1200, 1e9);
    Waveform out = convolve(r, r);
    auto direct = oracle::convolve_direct(oracle::to_vec(r), oracle::to_vec(r), 1e9);
    REQUIRE(out.size() == static_cast<Eigen::Index>(direct.size()));
    double max_err = 0.0;
    for (Eigen::Index n = 0; n < out.size(); ++n)
        max_err = std::max(max_err, std::abs(out.samples[n] - direct[n]));
    CHECK(max_err <= 1e-12 * out.samples.abs().maxCoeff());
    // continuous-units triangle peak: width * amp^2
    CHECK(out.samples.maxCoeff() == doctest::Approx(width * amp * amp).epsilon(1e-3));
}

TEST_CASE("convolve: mismatched sample_rate rejected") {
    Waveform a, b;
    a.sample_rate = 1e9;
    b.sample_rate = 5e8;
    a.samples = Samples::Zero(8);
    b.samples = Samples::Zero(8);
    CHECK_THROWS_AS(convolve(a, b), Error);
}

TEST_CASE("flattop generator matches gaussian-convolved rectangle") {
    // Compare the erf closed form against quadrature of the defining
    // convolution integral on the full 6000-point window.
    const double fs = 1e9, sigma = 250e-9, t1 = 1.6e-6, t2 = 4.4e-6, amp = 0.8;
    const Eigen::Index n = 6000;

    Waveform ft = generate(WaveKind::Flattop,
                           {{"a", amp}, {"sigma", sigma}, {"t1", t1}, {"t2", t2}}, n, fs);
    auto direct = oracle::gauss_rect_convolution(amp, t1, t2, sigma, fs, n);

    double max_diff = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        max_diff = std::max(max_diff, std::abs(direct[static_cast<std::size_t>(i)] - ft.samples[i]));
    CHECK(max_diff < 1e-6);
}

TEST_CASE("flattop against the module convolve of rect and sampled gaussian") {
    // Same identity through the library convolution path; the left-Riemann
    // rule carries an O(dt) edge term, so the bound is looser here.
    const double fs = 1e9, sigma = 250e-9, t1 = 1.6e-6, t2 = 4.4e-6, amp = 0.8;
    const Eigen::Index n = 6000;

    Waveform ft = generate(WaveKind::Flattop,
                           {{"a", amp}, {"sigma", sigma}, {"t1", t1}, {"t2", t2}}, n, fs);
    Waveform r = generate(WaveKind::Rectangle, {{"a", amp}, {"t1", t1}, {"t2", t2}}, n, fs);

    const Eigen::Index kn = 6001;
    Waveform g;
    g.sample_rate = fs;
    g.t0 = -3e-6;
    g.samples.resize(kn);
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    for (Eigen::Index i = 0; i < kn; ++i) {
        const double t = g.t0 + static_cast<double>(i) / fs;
        g.samples[i] = norm * std::exp(-t * t / (2.0 * sigma * sigma));
    }

    Waveform conv = convolve(r, g);
    // conv.t0 = -3 us, so flattop sample i aligns with conv sample i + 3000
    double max_diff = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        max_diff = std::max(max_diff, std::abs(conv.samples[i + 3000] - ft.samples[i]));
    // half-sample edge term: dt/2 * g_max = 0.5e-9 * 1.6e6 * amp
    CHECK(max_diff < 1e-3);
}
