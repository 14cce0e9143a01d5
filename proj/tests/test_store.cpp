#include <qctrl/error.hpp>
#include <qctrl/wave_store.hpp>

#include <doctest.h>

#include <atomic>
#include <cstring>
#include <random>
#include <thread>
#include <vector>

#include "oracles.hpp"

using namespace qctrl;

TEST_CASE("store: get after put is bit-identical") {
    WaveformStore store;
    std::mt19937 rng(3);
    Waveform w = oracle::random_waveform(rng, 100, 100);
    store.put(5, w);
    Waveform back = store.get(5);
    REQUIRE(back.size() == w.size());
    CHECK(std::memcmp(back.samples.data(), w.samples.data(), sizeof(double) * w.size()) == 0);
    CHECK(back.sample_rate == w.sample_rate);
}

TEST_CASE("store: put overwrites") {
    WaveformStore store;
    Waveform a = generate(WaveKind::DC, {{"a", 0.1}}, 16, 1e9);
    Waveform b = generate(WaveKind::DC, {{"a", 0.9}}, 16, 1e9);
    store.put(0, a);
    store.put(0, b);
    CHECK(store.get(0).samples[0] == 0.9);
}

TEST_CASE("store: empty slot and range errors") {
    WaveformStore store;  // capacity 256
    CHECK_THROWS_AS(store.get(7), Error);
    CHECK_THROWS_AS(store.put(256, Waveform{}), Error);
    CHECK_THROWS_AS(store.get(1000), Error);
    CHECK(!store.occupied(3));
}

TEST_CASE("store: concurrent readers with racing writers stay uncorrupted") {
    WaveformStore store(16);
    // Writers rotate a known set of waveforms through slot 0; readers must
    // always observe one of them intact.
    std::vector<Waveform> known;
    for (int i = 0; i < 4; ++i)
        known.push_back(generate(WaveKind::DC, {{"a", 0.1 * (i + 1)}}, 2048, 1e9));

    std::atomic<bool> stop{false};
    std::atomic<int> corrupt{0};

    std::vector<std::thread> readers;
    for (int r = 0; r < 3; ++r) {
        readers.emplace_back([&] {
            while (!stop.load(std::memory_order_relaxed)) {
                Waveform w;
                try {
                    w = store.get(0);
                } catch (const Error&) {
                    continue;  // not written yet
                }
                const double v = w.samples[0];
                if (!(w.samples == v).all()) corrupt.fetch_add(1);
            }
        });
    }
    std::vector<std::thread> writers;
    for (int t = 0; t < 2; ++t) {
        writers.emplace_back([&, t] {
            for (int i = 0; i < 500; ++i) store.put(0, known[(i + t) % known.size()]);
        });
    }
    for (auto& t : writers) t.join();
    stop = true;
    for (auto& t : readers) t.join();
    CHECK(corrupt.load() == 0);
}
