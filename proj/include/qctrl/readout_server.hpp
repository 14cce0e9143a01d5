#pragma once

#include "qctrl/homodyne.hpp"
#include "qctrl/reassembler.hpp"
#include "qctrl/rpc.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace qctrl {

inline constexpr std::uint16_t kDigitizerStreamPort = 9100;

struct AcquisitionBinding {
    std::uint16_t device_id = 1;
    std::uint8_t channel_id = 0;
    std::string name = "in0";
};

struct AcquisitionConfig {
    std::vector<AcquisitionBinding> bindings{AcquisitionBinding{}};
    std::uint32_t record_length = 10'000;
    double sample_rate = 1e9;
    double demod_freq = 50e6;
    std::optional<FirFilter> fir;
    double flush_age = 1.0;  // seconds before a partial record surfaces
};

struct IngestStats {
    std::uint64_t datagrams = 0;
    std::uint64_t decode_errors = 0;
    std::uint64_t records = 0;
    std::uint64_t incomplete_records = 0;
    std::uint64_t corrupt_records = 0;
    std::uint64_t unmatched_records = 0;  // no configured binding
    std::uint64_t bytes = 0;              // frame bytes ingested
    std::size_t queue_depth = 0;
    std::size_t max_queue_depth = 0;
};

// Owns the digitizer datagram socket, reassembles trigger records, and
// serves per-channel record queues to acquisition calls.
class AcquisitionEngine {
public:
    explicit AcquisitionEngine(std::uint16_t udp_port = kDigitizerStreamPort,
                               int rcvbuf_bytes = 8 << 20);
    ~AcquisitionEngine();

    void start();
    void stop();
    std::uint16_t udp_port() const { return port_; }

    void configure(AcquisitionConfig cfg);
    AcquisitionConfig config() const;

    // Pops n completed records for the named channel, in arrival order.
    // Throws on timeout, reporting how many records had arrived.
    std::vector<Record> acquire_raw(const std::string& channel, std::size_t n, int timeout_ms);
    std::vector<IQPoint> acquire_iq(const std::string& channel, std::size_t n, int timeout_ms);
    std::vector<QubitState> acquire_state(const std::string& channel, std::size_t n,
                                          int timeout_ms);

    void set_discriminator(const Discriminator& d);
    std::optional<Discriminator> discriminator() const;

    IngestStats stats() const;
    void reset_queues();

private:
    struct ChannelQueue {
        std::deque<Record> records;
    };

    void ingest_loop();
    IQPoint record_iq(const Record& rec) const;

    std::uint16_t port_;
    net::UdpSocket sock_;
    std::thread thread_;
    std::atomic<bool> running_{false};

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    AcquisitionConfig cfg_;
    std::map<std::pair<std::uint16_t, std::uint8_t>, std::string> binding_index_;
    std::map<std::string, ChannelQueue> queues_;
    std::optional<Discriminator> discriminator_;
    IngestStats stats_;
};

// RPC front end for the acquisition engine.
class ReadoutServer {
public:
    struct Options {
        std::uint16_t rpc_port = kReadoutPort;
        std::uint16_t udp_port = kDigitizerStreamPort;
    };

    explicit ReadoutServer(Options opts = {});
    ~ReadoutServer();

    void start();
    void stop();
    std::uint16_t rpc_port() const { return rpc_.port(); }
    AcquisitionEngine& engine() { return engine_; }

private:
    void register_methods();

    RpcServer rpc_;
    AcquisitionEngine engine_;
};

}  // namespace qctrl
