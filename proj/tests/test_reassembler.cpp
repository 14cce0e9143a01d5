#include <qctrl/reassembler.hpp>

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace qctrl;

namespace {

// Deterministic fake clock for flush tests.
struct FakeClock {
    double now = 0.0;
    Reassembler::Clock fn() {
        return [this] { return now; };
    }
};

std::vector<std::int16_t> ramp(std::size_t n, std::int16_t start = 0) {
    std::vector<std::int16_t> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = static_cast<std::int16_t>((start + static_cast<int>(i)) % 2047);
    return v;
}

}  // namespace

TEST_CASE("reassembler: out-of-order arrival yields in-order samples") {
    Reassembler r;
    auto samples = ramp(3 * 100);

    std::vector<Frame> parts;
    for (int i = 0; i < 3; ++i) {
        Frame f;
        f.device_id = 1;
        f.trigger_seq = 5;
        f.frame_index = static_cast<std::uint16_t>(i);
        f.frame_count = 3;
        f.payload.assign(samples.begin() + i * 100, samples.begin() + (i + 1) * 100);
        parts.push_back(std::move(f));
    }

    CHECK(!r.ingest(parts[2]).has_value());
    CHECK(!r.ingest(parts[0]).has_value());
    auto rec = r.ingest(parts[1]);
    REQUIRE(rec.has_value());
    CHECK(rec->complete);
    CHECK(!rec->corrupt);
    CHECK(rec->samples == samples);
    CHECK(r.pending() == 0);
}

TEST_CASE("reassembler: duplicates are idempotent") {
    Reassembler r;
    std::vector<Frame> parts;
    for (int i = 0; i < 2; ++i) {
        Frame f;
        f.trigger_seq = 1;
        f.frame_index = static_cast<std::uint16_t>(i);
        f.frame_count = 2;
        f.payload = ramp(50, static_cast<std::int16_t>(100 * i));
        parts.push_back(std::move(f));
    }
    CHECK(!r.ingest(parts[0]).has_value());
    CHECK(!r.ingest(parts[0]).has_value());  // duplicate before completion
    auto rec = r.ingest(parts[1]);
    REQUIRE(rec.has_value());
    CHECK(rec->samples.size() == 100);
    CHECK(r.stats().duplicate_frames == 1);
}

TEST_CASE("reassembler: flush surfaces missing frames") {
    FakeClock clk;
    Reassembler r(clk.fn());
    Frame f;
    f.trigger_seq = 9;
    f.frame_index = 0;
    f.frame_count = 3;
    f.payload = ramp(10);
    r.ingest(f);
    f.frame_index = 1;
    r.ingest(f);

    clk.now = 0.5;
    CHECK(r.flush(1.0).empty());  // not stale yet

    clk.now = 2.0;
    auto flushed = r.flush(1.0);
    REQUIRE(flushed.size() == 1);
    CHECK(!flushed[0].complete);
    CHECK(flushed[0].missing == std::vector<std::uint16_t>{2});
    CHECK(flushed[0].samples.size() == 20);
    CHECK(r.pending() == 0);
}

TEST_CASE("reassembler: late frame after eviction starts a corrupt record") {
    FakeClock clk;
    Reassembler r(clk.fn());
    Frame f;
    f.trigger_seq = 4;
    f.frame_index = 0;
    f.frame_count = 2;
    f.payload = ramp(8);
    r.ingest(f);
    clk.now = 10.0;
    REQUIRE(r.flush(1.0).size() == 1);

    // the missing frame finally arrives
    f.frame_index = 1;
    auto none = r.ingest(f);
    CHECK(!none.has_value());
    f.frame_index = 0;
    auto rec = r.ingest(f);  // completes the fresh key
    REQUIRE(rec.has_value());
    CHECK(rec->corrupt);
    CHECK(rec->complete);
}

TEST_CASE("reassembler: conflicting frame_count poisons the key") {
    Reassembler r;
    Frame f;
    f.trigger_seq = 7;
    f.frame_index = 0;
    f.frame_count = 2;
    f.payload = ramp(4);
    r.ingest(f);
    Frame g = f;
    g.frame_index = 1;
    g.frame_count = 5;  // conflict
    auto rec = r.ingest(g);
    REQUIRE(rec.has_value());  // completes per the original count
    CHECK(rec->corrupt);
}

TEST_CASE("reassembler: permutation invariance") {
    std::mt19937 rng(2024);
    auto samples = ramp(2000);
    auto frames = fragment_record(3, 1, 77, samples);
    REQUIRE(frames.size() == 3);

    for (int trial = 0; trial < 50; ++trial) {
        std::shuffle(frames.begin(), frames.end(), rng);
        Reassembler r;
        std::optional<Record> rec;
        for (const auto& f : frames) {
            auto out = r.ingest(f);
            if (out) rec = std::move(out);
        }
        REQUIRE(rec.has_value());
        CHECK(rec->complete);
        CHECK(rec->samples == samples);
    }
}

TEST_CASE("reassembler: conservation of samples") {
    std::mt19937 rng(5150);
    FakeClock clk;
    Reassembler r(clk.fn());
    std::uniform_int_distribution<int> len(1, 3000);
    std::uniform_real_distribution<double> drop(0.0, 1.0);

    std::uint64_t ingested = 0;
    std::vector<Frame> all;
    for (std::uint32_t seq = 0; seq < 40; ++seq) {
        auto samples = ramp(static_cast<std::size_t>(len(rng)));
        for (auto& f : fragment_record(1, 0, seq, samples)) {
            if (drop(rng) < 0.2) continue;  // simulated loss
            all.push_back(std::move(f));
        }
    }
    std::shuffle(all.begin(), all.end(), rng);

    std::uint64_t emitted = 0;
    for (const auto& f : all) {
        ingested += f.payload.size();
        if (auto rec = r.ingest(f)) emitted += rec->samples.size();
    }
    clk.now = 100.0;
    for (const auto& rec : r.flush(0.5)) emitted += rec.samples.size();
    CHECK(emitted == ingested);  // no duplicates were injected
    CHECK(r.pending() == 0);
}

TEST_CASE("reassembler: randomized shuffled streams with duplication and loss") {
    std::mt19937 rng(860);
    std::uniform_int_distribution<int> len(1, 2500);
    std::uniform_real_distribution<double> p(0.0, 1.0);

    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = static_cast<std::size_t>(len(rng));
        auto samples = ramp(n, static_cast<std::int16_t>(trial));
        auto frames = fragment_record(1, 0, static_cast<std::uint32_t>(trial), samples);

        std::vector<Frame> stream;
        bool lost_any = false;
        for (auto& f : frames) {
            if (p(rng) < 0.05) {
                lost_any = true;
                continue;
            }
            stream.push_back(f);
            if (p(rng) < 0.1) stream.push_back(f);  // duplicate
        }
        std::shuffle(stream.begin(), stream.end(), rng);

        FakeClock clk;
        Reassembler r(clk.fn());
        std::optional<Record> completed;
        for (const auto& f : stream)
            if (auto rec = r.ingest(f)) completed = std::move(rec);

        if (!lost_any && !stream.empty()) {
            REQUIRE(completed.has_value());
            CHECK(completed->samples == samples);
        } else if (!stream.empty()) {
            CHECK(!completed.has_value());
            clk.now = 10.0;
            auto flushed = r.flush(1.0);
            REQUIRE(flushed.size() == 1);
            CHECK(!flushed[0].complete);
            CHECK(!flushed[0].missing.empty());
        }
    }
}
