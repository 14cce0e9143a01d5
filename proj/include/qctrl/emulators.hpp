#pragma once

#include "qctrl/frame.hpp"
#include "qctrl/homodyne.hpp"
#include "qctrl/net.hpp"
#include "qctrl/wire.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

namespace qctrl {

// ---------------------------------------------------------------------------
// AWG / DC-source emulator: a TCP server speaking the instrument-link wire
// protocol. State mutates only through wire messages; readback returns the
// last-written bytes exactly.
// ---------------------------------------------------------------------------

struct AwgEmulatorConfig {
    std::uint16_t port = 0;             // 0 = ephemeral
    double ingress_limit_mbps = 0.0;    // 0 = unlimited ("several Mbps" mode when set)
    bool readback_enabled = true;
};

class AwgEmulator {
public:
    explicit AwgEmulator(AwgEmulatorConfig cfg = {});
    ~AwgEmulator();

    void start();
    void stop();
    std::uint16_t port() const { return port_; }

    // Stops reading from every connection while paused (stall injection).
    void pause(bool on) { paused_.store(on, std::memory_order_relaxed); }

    // State snapshots for tests and benches.
    std::vector<std::int16_t> slot_memory(std::uint16_t slot) const;
    std::int64_t dc_microvolts(std::uint8_t channel) const;
    std::int16_t offset_code(std::uint8_t channel) const;
    std::uint32_t delay_samples(std::uint8_t channel) const;
    std::uint8_t trigger_mode() const;
    std::uint16_t played_slot(std::uint8_t channel) const;
    std::uint64_t ingress_payload_bytes() const { return payload_bytes_.load(); }
    std::uint64_t messages_handled() const { return messages_.load(); }

private:
    void accept_loop();
    void serve_connection(net::TcpConn conn);
    WireMessage handle(const WireMessage& msg);
    void throttle(std::size_t bytes_read);

    AwgEmulatorConfig cfg_;
    std::uint16_t port_ = 0;
    std::unique_ptr<net::TcpListener> listener_;
    std::thread accept_thread_;
    std::vector<std::thread> conn_threads_;
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::atomic<bool> running_{false};
    std::atomic<bool> paused_{false};

    mutable std::mutex state_mutex_;
    std::map<std::uint16_t, std::vector<std::int16_t>> slots_;
    std::map<std::uint8_t, std::int64_t> dc_;
    std::map<std::uint8_t, std::int16_t> offsets_;
    std::map<std::uint8_t, std::uint32_t> delays_;
    std::map<std::uint8_t, std::uint16_t> played_;
    std::uint8_t trig_mode_ = 0;

    std::atomic<std::uint64_t> payload_bytes_{0};
    std::atomic<std::uint64_t> messages_{0};

    // rate limiter
    std::chrono::steady_clock::time_point rl_start_{};
    std::uint64_t rl_bytes_ = 0;
    std::mutex rl_mutex_;
};

// ---------------------------------------------------------------------------
// Digitizer emulator: interval-triggered synthesis of dispersive-readout
// traces, fragmented into frames and streamed as datagrams.
// ---------------------------------------------------------------------------

struct EmuDigitizerProfile {
    std::uint32_t record_length = 10'000;
    double sample_rate = 1e9;
    double carrier_freq = 50e6;
    double amplitude = 0.05;
    double phase_zero = 0.0;
    double phase_one = std::numbers::pi / 2.0;
    double noise_sigma = 0.0;          // normalized units
    double trigger_interval = 500e-6;  // seconds
    std::vector<QubitState> schedule;  // cycled per trigger; empty = all Zero
    std::uint64_t seed = 1;
    double loss_pct = 0.0;             // injected frame loss, percent
    double reorder_pct = 0.0;          // injected adjacent-frame swaps, percent
    std::uint16_t device_id = 1;
    std::uint8_t channel_id = 0;
};

// s[n] = round(2047 * clamp(A cos(2 pi f n / fs + phi_state) + noise, -1, 1)),
// noise ~ N(0, sigma), deterministic per seed.
std::vector<std::int16_t> synth_readout_trace(const EmuDigitizerProfile& profile,
                                              QubitState state, std::uint64_t seed);

struct DigitizerEmulatorStats {
    std::uint64_t triggers = 0;
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_dropped = 0;   // loss injection
    std::uint64_t bytes_sent = 0;       // frame bytes actually sent
    std::uint64_t slipped_triggers = 0; // fired more than one interval late
};

class DigitizerEmulator {
public:
    DigitizerEmulator(std::string dest_host, std::uint16_t dest_port, EmuDigitizerProfile profile);
    ~DigitizerEmulator();

    // Streams until stop(); n_triggers > 0 stops after that many triggers.
    void start(std::uint64_t n_triggers = 0);
    void stop();
    bool running() const { return running_.load(); }
    DigitizerEmulatorStats stats() const;

private:
    void run(std::uint64_t n_triggers);
    const std::vector<std::int16_t>& trace_for(QubitState state, std::uint64_t trigger_index);

    std::string host_;
    std::uint16_t port_;
    EmuDigitizerProfile profile_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    std::atomic<bool> stop_{false};

    mutable std::mutex stats_mutex_;
    DigitizerEmulatorStats stats_;

    std::vector<std::int16_t> cached_zero_, cached_one_;  // noise-free reuse
    std::vector<std::int16_t> scratch_;
};

}  // namespace qctrl
