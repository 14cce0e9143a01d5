#include "qctrl/emulators.hpp"

#include "qctrl/error.hpp"

#include <sys/prctl.h>
#include <sys/socket.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace qctrl {

// ---------------------------------------------------------------------------
// AWG emulator
// ---------------------------------------------------------------------------

AwgEmulator::AwgEmulator(AwgEmulatorConfig cfg) : cfg_(cfg) {}

AwgEmulator::~AwgEmulator() { stop(); }

void AwgEmulator::start() {
    if (running_.exchange(true)) return;
    listener_ = std::make_unique<net::TcpListener>(cfg_.port);
    port_ = listener_->port();
    rl_start_ = std::chrono::steady_clock::now();
    rl_bytes_ = 0;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void AwgEmulator::stop() {
    if (!running_.exchange(false)) return;
    if (listener_) listener_->close();
    {
        std::lock_guard lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    for (auto& t : conn_threads_) {
        if (t.joinable()) t.join();
    }
    conn_threads_.clear();
    listener_.reset();
}

void AwgEmulator::accept_loop() {
    while (running_.load()) {
        auto conn = listener_->accept(100);
        if (!conn) continue;
        std::lock_guard lock(conn_mutex_);
        conn_fds_.push_back(conn->fd());
        conn_threads_.emplace_back(
            [this, c = std::move(*conn)]() mutable { serve_connection(std::move(c)); });
    }
}

void AwgEmulator::throttle(std::size_t bytes_read) {
    if (cfg_.ingress_limit_mbps <= 0.0) return;
    std::unique_lock lock(rl_mutex_);
    rl_bytes_ += bytes_read;
    const double secs = static_cast<double>(rl_bytes_) * 8.0 / (cfg_.ingress_limit_mbps * 1e6);
    const auto target = rl_start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(secs));
    lock.unlock();
    std::this_thread::sleep_until(target);
}

void AwgEmulator::serve_connection(net::TcpConn conn) {
    std::vector<std::uint8_t> body;
    try {
        while (running_.load()) {
            while (paused_.load(std::memory_order_relaxed) && running_.load())
                std::this_thread::sleep_for(std::chrono::milliseconds(1));
            if (!running_.load()) break;

            std::uint8_t len4[4];
            conn.read_exact(len4);
            throttle(4);
            std::uint32_t total_len = 0;
            for (int i = 3; i >= 0; --i) total_len = total_len << 8 | len4[i];
            if (total_len < 4) throw Error("wire message length too small");

            body.resize(total_len);
            // Paced chunked reads so the ingress ceiling shapes large uploads.
            std::size_t off = 0;
            while (off < body.size()) {
                const std::size_t chunk = std::min<std::size_t>(64 * 1024, body.size() - off);
                conn.read_exact({body.data() + off, chunk});
                throttle(chunk);
                off += chunk;
            }

            WireMessage msg;
            ByteReader r(body);
            msg.opcode = r.u16();
            msg.request_id = r.u16();
            auto rest = r.bytes(total_len - 4);
            msg.body.assign(rest.begin(), rest.end());

            WireMessage resp = handle(msg);
            conn.write_all(encode_message(resp));
        }
    } catch (const std::exception&) {
        // connection closed or a framing failure; drop the connection
    }
}

WireMessage AwgEmulator::handle(const WireMessage& msg) {
    messages_.fetch_add(1, std::memory_order_relaxed);
    WireMessage resp;
    resp.opcode = msg.opcode | kOpResponseFlag;
    resp.request_id = msg.request_id;
    auto status = [&resp](WireStatus s) { resp.body = {static_cast<std::uint8_t>(s)}; };

    try {
        switch (msg.opcode) {
            case kOpUploadWave: {
                UploadWaveBody b = parse_upload_wave(msg.body);
                payload_bytes_.fetch_add(2 * b.codes.size(), std::memory_order_relaxed);
                std::lock_guard lock(state_mutex_);
                slots_[b.slot] = std::move(b.codes);
                status(WireStatus::Ok);
                break;
            }
            case kOpSetOffset: {
                ByteReader r(msg.body);
                const std::uint8_t ch = r.u8();
                const std::int16_t code = r.i16();
                std::lock_guard lock(state_mutex_);
                offsets_[ch] = code;
                status(WireStatus::Ok);
                break;
            }
            case kOpSetDelay: {
                ByteReader r(msg.body);
                const std::uint8_t ch = r.u8();
                const std::uint32_t samples = r.u32();
                std::lock_guard lock(state_mutex_);
                delays_[ch] = samples;
                status(WireStatus::Ok);
                break;
            }
            case kOpSetTrig: {
                ByteReader r(msg.body);
                const std::uint8_t mode = r.u8();
                std::lock_guard lock(state_mutex_);
                trig_mode_ = mode;
                status(WireStatus::Ok);
                break;
            }
            case kOpPlay: {
                ByteReader r(msg.body);
                const std::uint8_t ch = r.u8();
                const std::uint16_t slot = r.u16();
                std::lock_guard lock(state_mutex_);
                if (!slots_.count(slot)) {
                    status(WireStatus::BadSlot);
                } else {
                    played_[ch] = slot;
                    status(WireStatus::Ok);
                }
                break;
            }
            case kOpDcSet: {
                ByteReader r(msg.body);
                const std::uint8_t ch = r.u8();
                const std::int64_t uv = r.i64();
                if (std::abs(uv) > 10'000'000) {  // +-10 V emulator range
                    status(WireStatus::RangeError);
                    break;
                }
                std::lock_guard lock(state_mutex_);
                dc_[ch] = uv;
                status(WireStatus::Ok);
                break;
            }
            case kOpReadbackWave: {
                if (!cfg_.readback_enabled) {
                    status(WireStatus::BadRequest);
                    break;
                }
                ByteReader r(msg.body);
                const std::uint16_t slot = r.u16();
                std::lock_guard lock(state_mutex_);
                auto it = slots_.find(slot);
                if (it == slots_.end()) {
                    status(WireStatus::BadSlot);
                } else {
                    resp.body.reserve(1 + 2 * it->second.size());
                    resp.body.push_back(static_cast<std::uint8_t>(WireStatus::Ok));
                    ByteWriter w(resp.body);
                    for (std::int16_t c : it->second) w.i16(c);
                }
                break;
            }
            case kOpPing:
                status(WireStatus::Ok);
                break;
            default:
                status(WireStatus::BadOpcode);
                break;
        }
    } catch (const std::exception&) {
        status(WireStatus::BadRequest);  // malformed body
    }
    return resp;
}

std::vector<std::int16_t> AwgEmulator::slot_memory(std::uint16_t slot) const {
    std::lock_guard lock(state_mutex_);
    auto it = slots_.find(slot);
    if (it == slots_.end()) throw Error("emulator slot " + std::to_string(slot) + " empty");
    return it->second;
}

std::int64_t AwgEmulator::dc_microvolts(std::uint8_t channel) const {
    std::lock_guard lock(state_mutex_);
    auto it = dc_.find(channel);
    return it == dc_.end() ? 0 : it->second;
}

std::int16_t AwgEmulator::offset_code(std::uint8_t channel) const {
    std::lock_guard lock(state_mutex_);
    auto it = offsets_.find(channel);
    return it == offsets_.end() ? 0 : it->second;
}

std::uint32_t AwgEmulator::delay_samples(std::uint8_t channel) const {
    std::lock_guard lock(state_mutex_);
    auto it = delays_.find(channel);
    return it == delays_.end() ? 0 : it->second;
}

std::uint8_t AwgEmulator::trigger_mode() const {
    std::lock_guard lock(state_mutex_);
    return trig_mode_;
}

std::uint16_t AwgEmulator::played_slot(std::uint8_t channel) const {
    std::lock_guard lock(state_mutex_);
    auto it = played_.find(channel);
    if (it == played_.end()) throw Error("channel never played");
    return it->second;
}

// ---------------------------------------------------------------------------
// Digitizer emulator
// ---------------------------------------------------------------------------

std::vector<std::int16_t> synth_readout_trace(const EmuDigitizerProfile& profile, QubitState state,
                                              std::uint64_t seed) {
    const double phi = state == QubitState::Zero ? profile.phase_zero : profile.phase_one;
    const double step = 2.0 * std::numbers::pi * profile.carrier_freq / profile.sample_rate;
    std::vector<std::int16_t> out(profile.record_length);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, profile.noise_sigma > 0 ? profile.noise_sigma : 1.0);
    for (std::uint32_t n = 0; n < profile.record_length; ++n) {
        double s = profile.amplitude * std::cos(step * n + phi);
        if (profile.noise_sigma > 0) s += noise(rng);
        s = std::clamp(s, -1.0, 1.0);
        out[n] = static_cast<std::int16_t>(std::lround(2047.0 * s));
    }
    return out;
}

DigitizerEmulator::DigitizerEmulator(std::string dest_host, std::uint16_t dest_port,
                                     EmuDigitizerProfile profile)
    : host_(std::move(dest_host)), port_(dest_port), profile_(std::move(profile)) {}

DigitizerEmulator::~DigitizerEmulator() { stop(); }

void DigitizerEmulator::start(std::uint64_t n_triggers) {
    if (running_.exchange(true)) return;
    stop_.store(false);
    thread_ = std::thread([this, n_triggers] { run(n_triggers); });
}

void DigitizerEmulator::stop() {
    stop_.store(true);
    if (thread_.joinable()) thread_.join();
    running_.store(false);
}

DigitizerEmulatorStats DigitizerEmulator::stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

const std::vector<std::int16_t>& DigitizerEmulator::trace_for(QubitState state,
                                                              std::uint64_t trigger_index) {
    if (profile_.noise_sigma <= 0.0) {
        auto& cache = state == QubitState::Zero ? cached_zero_ : cached_one_;
        if (cache.empty()) cache = synth_readout_trace(profile_, state, profile_.seed);
        return cache;
    }
    scratch_ = synth_readout_trace(profile_, state, profile_.seed + trigger_index);
    return scratch_;
}

void DigitizerEmulator::run(std::uint64_t n_triggers) {
    // Tighter timer slack for the interval trigger schedule.
    prctl(PR_SET_TIMERSLACK, 1000);

    net::UdpSocket sock;
    try {
        sock = net::UdpSocket::connect(host_, port_);
    } catch (const std::exception&) {
        running_.store(false);
        return;
    }

    std::mt19937_64 inject_rng(profile_.seed ^ 0xD1697A11u);
    std::uniform_real_distribution<double> pct(0.0, 100.0);

    // Noise-free traces vary only in trigger_seq; pre-encode the datagrams
    // and patch the sequence field (header offset 6) per trigger.
    std::vector<std::vector<std::uint8_t>> encoded_zero, encoded_one;
    const bool cacheable = profile_.noise_sigma <= 0.0;
    auto encode_all = [&](QubitState st) {
        std::vector<std::vector<std::uint8_t>> out;
        const auto& trace = trace_for(st, 0);
        for (const Frame& f : fragment_record(profile_.device_id, profile_.channel_id, 0, trace))
            out.push_back(encode_frame(f));
        return out;
    };
    if (cacheable) {
        encoded_zero = encode_all(QubitState::Zero);
        encoded_one = encode_all(QubitState::One);
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(profile_.trigger_interval));

    std::vector<std::uint8_t> held;  // reorder injection holds one datagram back
    DigitizerEmulatorStats local{};

    for (std::uint64_t k = 0; !stop_.load(std::memory_order_relaxed); ++k) {
        if (n_triggers > 0 && k >= n_triggers) break;
        const auto target = t0 + interval * static_cast<std::int64_t>(k);
        std::this_thread::sleep_until(target);
        const auto now = std::chrono::steady_clock::now();
        if (now > target + interval) ++local.slipped_triggers;

        const QubitState state =
            profile_.schedule.empty()
                ? QubitState::Zero
                : profile_.schedule[static_cast<std::size_t>(k % profile_.schedule.size())];

        auto send_datagram = [&](std::span<const std::uint8_t> bytes) {
            sock.send(bytes);
            ++local.frames_sent;
            local.bytes_sent += bytes.size();
        };

        auto emit = [&](std::vector<std::uint8_t>&& datagram) {
            if (profile_.loss_pct > 0 && pct(inject_rng) < profile_.loss_pct) {
                ++local.frames_dropped;
                return;
            }
            if (profile_.reorder_pct > 0 && pct(inject_rng) < profile_.reorder_pct &&
                held.empty()) {
                held = std::move(datagram);
                return;
            }
            send_datagram(datagram);
            if (!held.empty()) {
                send_datagram(held);
                held.clear();
            }
        };

        if (cacheable) {
            auto& encoded = state == QubitState::Zero ? encoded_zero : encoded_one;
            for (auto& datagram : encoded) {
                // patch trigger_seq, little-endian at header offset 6
                for (int i = 0; i < 4; ++i)
                    datagram[6 + static_cast<std::size_t>(i)] =
                        static_cast<std::uint8_t>(static_cast<std::uint32_t>(k) >> (8 * i));
                emit(std::vector<std::uint8_t>(datagram));
            }
        } else {
            const auto& trace = trace_for(state, k);
            for (const Frame& f : fragment_record(profile_.device_id, profile_.channel_id,
                                                  static_cast<std::uint32_t>(k), trace))
                emit(encode_frame(f));
        }
        ++local.triggers;

        if ((k & 0x3F) == 0) {
            std::lock_guard lock(stats_mutex_);
            stats_ = local;
        }
    }
    if (!held.empty()) {
        sock.send(held);
        ++local.frames_sent;
        local.bytes_sent += held.size();
        held.clear();
    }
    {
        std::lock_guard lock(stats_mutex_);
        stats_ = local;
    }
    running_.store(false);
}

}  // namespace qctrl
