#pragma once

#include "qctrl/channel.hpp"
#include "qctrl/link.hpp"
#include "qctrl/rpc.hpp"
#include "qctrl/wave_store.hpp"

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace qctrl {

enum class BindingKind { Waveform, Trigger, Dc };

BindingKind binding_kind_from_name(std::string_view name);
std::string_view binding_kind_name(BindingKind kind);

struct ChannelBinding {
    std::string virtual_channel;
    std::uint16_t device_id = 0;
    std::uint8_t physical_channel = 0;
    BindingKind kind = BindingKind::Waveform;
    std::uint32_t latency_samples = 0;
};

// Parses the binding/calibration file: one binding per line,
//   virtual_name device_id physical_channel kind latency_samples
// with '#' comments and blank lines ignored.
std::vector<ChannelBinding> parse_binding_file(const std::string& path);
std::vector<ChannelBinding> parse_binding_text(const std::string& text);

// Maps separate AWG/DC devices into one virtual instrument and orchestrates
// waveform upload and playback over the instrument link.
class ControlServer {
public:
    struct Options {
        std::uint16_t rpc_port = kControlPort;
        // device_id -> endpoint; devices missing here default to
        // 127.0.0.1:9000+device_id.
        std::map<std::uint16_t, Manager::Route> device_endpoints;
        std::size_t store_capacity = 256;
        double default_sample_rate = kDefaultSampleRate;
        Eigen::Index default_length = kBenchLength;
    };

    explicit ControlServer(Options opts = {});
    ~ControlServer();

    void start();
    void stop();
    std::uint16_t rpc_port() const { return rpc_.port(); }

    // Module-level operations (exposed over RPC, usable directly in-process).
    void bind_channel(const ChannelBinding& binding);
    void bind_file(const std::string& path);
    std::vector<ChannelBinding> list_channels() const;
    void configure_channel(const std::string& name, const ChannelConfig& cfg);
    ChannelConfig channel_config(const std::string& name) const;
    std::map<std::string, std::uint32_t> align_timing();
    void define_wave(std::size_t slot, const std::string& expr_text, const ParamMap& bindings,
                     Eigen::Index length, double sample_rate);
    // Returns the rendered record that was uploaded (device_slot selects the
    // device-side slot).
    DacRecord write_wave_slot(const std::string& channel, std::size_t store_slot,
                              std::uint16_t device_slot);
    DacRecord write_wave_expr(const std::string& channel, const std::string& expr_text,
                              const ParamMap& bindings, std::uint16_t device_slot,
                              Eigen::Index length, double sample_rate);
    std::int64_t set_dc(const std::string& channel, double volts);
    std::size_t play_all(std::uint8_t trigger_mode);
    std::vector<std::int16_t> readback(const std::string& channel, std::uint16_t device_slot);

    WaveformStore& store() { return store_; }

private:
    struct Channel {
        ChannelBinding binding;
        ChannelConfig config;
        std::optional<std::uint16_t> armed_slot;
    };

    void register_methods();
    Channel& channel_ref(const std::string& name);
    const Channel& channel_ref(const std::string& name) const;
    void ensure_device(std::uint16_t device_id);
    DacRecord upload(Channel& ch, const Waveform& w, std::uint16_t device_slot);

    Options opts_;
    RpcServer rpc_;
    InstrumentLink link_;
    WaveformStore store_;

    mutable std::recursive_mutex mutex_;
    std::map<std::string, Channel> channels_;
};

}  // namespace qctrl
