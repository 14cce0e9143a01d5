#include "qctrl/control_server.hpp"

#include "qctrl/error.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qctrl {

using namespace std::chrono_literals;

BindingKind binding_kind_from_name(std::string_view name) {
    if (name == "waveform") return BindingKind::Waveform;
    if (name == "trigger") return BindingKind::Trigger;
    if (name == "dc") return BindingKind::Dc;
    throw Error("unknown channel kind '" + std::string(name) + "'");
}

std::string_view binding_kind_name(BindingKind kind) {
    switch (kind) {
        case BindingKind::Waveform: return "waveform";
        case BindingKind::Trigger: return "trigger";
        case BindingKind::Dc: return "dc";
    }
    throw Error("invalid channel kind");
}

std::vector<ChannelBinding> parse_binding_text(const std::string& text) {
    std::vector<ChannelBinding> out;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string name, kind;
        unsigned device = 0, physical = 0, latency = 0;
        if (!(fields >> name)) continue;  // blank line
        if (!(fields >> device >> physical >> kind >> latency))
            throw Error("binding file line " + std::to_string(line_no) + " malformed");
        ChannelBinding b;
        b.virtual_channel = name;
        b.device_id = static_cast<std::uint16_t>(device);
        b.physical_channel = static_cast<std::uint8_t>(physical);
        b.kind = binding_kind_from_name(kind);
        b.latency_samples = latency;
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<ChannelBinding> parse_binding_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open binding file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_binding_text(buf.str());
}

ControlServer::ControlServer(Options opts)
    : opts_(std::move(opts)), rpc_("control", opts_.rpc_port), store_(opts_.store_capacity) {
    register_methods();
}

ControlServer::~ControlServer() { stop(); }

void ControlServer::start() { rpc_.start(); }

void ControlServer::stop() {
    rpc_.stop();
    link_.disconnect_all();
}

void ControlServer::ensure_device(std::uint16_t device_id) {
    if (link_.has_device(device_id)) return;
    auto it = opts_.device_endpoints.find(device_id);
    const std::string host = it != opts_.device_endpoints.end() ? it->second.host : "127.0.0.1";
    const std::uint16_t port = it != opts_.device_endpoints.end()
                                   ? it->second.port
                                   : static_cast<std::uint16_t>(9000 + device_id);
    link_.connect_device(device_id, host, port);
}

void ControlServer::bind_channel(const ChannelBinding& binding) {
    std::lock_guard lock(mutex_);
    if (channels_.count(binding.virtual_channel))
        throw Error("virtual channel '" + binding.virtual_channel + "' already bound");
    for (const auto& [name, ch] : channels_) {
        if (ch.binding.device_id == binding.device_id &&
            ch.binding.physical_channel == binding.physical_channel &&
            ch.binding.kind == binding.kind)
            throw Error("physical assignment conflict with channel '" + name + "'");
    }
    ensure_device(binding.device_id);
    Channel ch;
    ch.binding = binding;
    channels_.emplace(binding.virtual_channel, std::move(ch));
}

void ControlServer::bind_file(const std::string& path) {
    for (const auto& b : parse_binding_file(path)) bind_channel(b);
}

std::vector<ChannelBinding> ControlServer::list_channels() const {
    std::lock_guard lock(mutex_);
    std::vector<ChannelBinding> out;
    for (const auto& [_, ch] : channels_) out.push_back(ch.binding);
    return out;
}

ControlServer::Channel& ControlServer::channel_ref(const std::string& name) {
    auto it = channels_.find(name);
    if (it == channels_.end()) throw Error("unknown channel '" + name + "'");
    return it->second;
}

const ControlServer::Channel& ControlServer::channel_ref(const std::string& name) const {
    auto it = channels_.find(name);
    if (it == channels_.end()) throw Error("unknown channel '" + name + "'");
    return it->second;
}

void ControlServer::configure_channel(const std::string& name, const ChannelConfig& cfg) {
    std::lock_guard lock(mutex_);
    channel_ref(name).config = cfg;
}

ChannelConfig ControlServer::channel_config(const std::string& name) const {
    std::lock_guard lock(mutex_);
    return channel_ref(name).config;
}

std::map<std::string, std::uint32_t> ControlServer::align_timing() {
    std::lock_guard lock(mutex_);
    // Effective latency includes any delay already folded into the config, so
    // repeated alignment is a no-op.
    std::uint64_t max_latency = 0;
    for (const auto& [_, ch] : channels_) {
        if (ch.binding.kind != BindingKind::Waveform) continue;
        max_latency = std::max<std::uint64_t>(
            max_latency, ch.binding.latency_samples + ch.config.delay_samples);
    }
    std::map<std::string, std::uint32_t> added;
    for (auto& [name, ch] : channels_) {
        if (ch.binding.kind != BindingKind::Waveform) continue;
        const std::uint64_t effective = ch.binding.latency_samples + ch.config.delay_samples;
        const auto extra = static_cast<std::uint32_t>(max_latency - effective);
        ch.config.delay_samples += extra;
        added[name] = extra;
    }
    return added;
}

void ControlServer::define_wave(std::size_t slot, const std::string& expr_text,
                                const ParamMap& bindings, Eigen::Index length,
                                double sample_rate) {
    ExprPtr e = parse_expr(expr_text);
    store_.put(slot, sample_expr(e, bindings, length, sample_rate));
}

DacRecord ControlServer::upload(Channel& ch, const Waveform& w, std::uint16_t device_slot) {
    DacRecord rec = render_dac(w, ch.config);
    Ticket t = link_.submit(ch.binding.device_id, kOpUploadWave,
                            make_upload_wave(device_slot, rec.codes));
    auto results = InstrumentLink::drain({t}, 30s);
    if (!results[0].ok)
        throw Error("upload to device " + std::to_string(ch.binding.device_id) + " failed: " +
                    (results[0].error.empty() ? "device error" : results[0].error));
    ch.armed_slot = device_slot;
    return rec;
}

DacRecord ControlServer::write_wave_slot(const std::string& channel, std::size_t store_slot,
                                         std::uint16_t device_slot) {
    std::lock_guard lock(mutex_);
    Channel& ch = channel_ref(channel);
    if (ch.binding.kind != BindingKind::Waveform)
        throw Error("channel '" + channel + "' is not a waveform channel");
    return upload(ch, store_.get(store_slot), device_slot);
}

DacRecord ControlServer::write_wave_expr(const std::string& channel, const std::string& expr_text,
                                         const ParamMap& bindings, std::uint16_t device_slot,
                                         Eigen::Index length, double sample_rate) {
    std::lock_guard lock(mutex_);
    Channel& ch = channel_ref(channel);
    if (ch.binding.kind != BindingKind::Waveform)
        throw Error("channel '" + channel + "' is not a waveform channel");
    Waveform w = sample_expr(parse_expr(expr_text), bindings, length, sample_rate);
    return upload(ch, w, device_slot);
}

std::int64_t ControlServer::set_dc(const std::string& channel, double volts) {
    std::lock_guard lock(mutex_);
    Channel& ch = channel_ref(channel);
    if (ch.binding.kind != BindingKind::Dc)
        throw Error("channel '" + channel + "' is not a dc channel");
    if (std::abs(volts) > 10.0) throw Error("dc set-point outside the +-10 V range");
    const std::int64_t microvolts = std::llround(volts * 1e6);
    Ticket t = link_.submit(ch.binding.device_id, kOpDcSet,
                            make_dc_set(ch.binding.physical_channel, microvolts));
    auto results = InstrumentLink::drain({t}, 10s);
    if (!results[0].ok) throw Error("dc set failed on channel '" + channel + "'");
    return microvolts;
}

std::size_t ControlServer::play_all(std::uint8_t trigger_mode) {
    std::lock_guard lock(mutex_);
    // all-or-nothing: every waveform channel must be armed before any task
    // is enqueued
    std::vector<std::pair<std::string, Channel*>> waveform_channels;
    for (auto& [name, ch] : channels_) {
        if (ch.binding.kind != BindingKind::Waveform) continue;
        if (!ch.armed_slot)
            throw Error("channel '" + name + "' has no uploaded waveform");
        waveform_channels.emplace_back(name, &ch);
    }
    if (waveform_channels.empty()) return 0;

    std::vector<Ticket> tickets;
    std::map<std::uint16_t, bool> trig_sent;
    for (auto& [name, ch] : waveform_channels) {
        if (!trig_sent[ch->binding.device_id]) {
            tickets.push_back(link_.submit(ch->binding.device_id, kOpSetTrig,
                                           make_set_trig(trigger_mode)));
            trig_sent[ch->binding.device_id] = true;
        }
        tickets.push_back(link_.submit(ch->binding.device_id, kOpPlay,
                                       make_play(ch->binding.physical_channel, *ch->armed_slot)));
    }
    std::size_t acks = 0;
    for (const auto& r : InstrumentLink::drain(tickets, 30s)) {
        if (!r.ok) throw Error("play failed: " + (r.error.empty() ? "device error" : r.error));
        ++acks;
    }
    return acks;
}

std::vector<std::int16_t> ControlServer::readback(const std::string& channel,
                                                  std::uint16_t device_slot) {
    std::lock_guard lock(mutex_);
    Channel& ch = channel_ref(channel);
    Ticket t = link_.submit(ch.binding.device_id, kOpReadbackWave, make_readback(device_slot));
    auto results = InstrumentLink::drain({t}, 10s);
    if (!results[0].ok) throw Error("readback failed on channel '" + channel + "'");
    return parse_code_payload(results[0].body);
}

// ---------------------------------------------------------------------------
// RPC surface
// ---------------------------------------------------------------------------

namespace {

ParamMap bindings_from_json(const Json& j) {
    ParamMap out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw RpcError("schema-error", "field 'bindings' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number())
            throw RpcError("schema-error", "binding '" + key + "' must be a number");
        out[key] = value.get<double>();
    }
    return out;
}

ChannelConfig config_from_json(const ChannelConfig& base, const Json& p) {
    ChannelConfig cfg = base;
    cfg.offset = get_double(p, "offset", cfg.offset);
    cfg.gain = get_double(p, "gain", cfg.gain);
    cfg.delay_samples = static_cast<std::uint32_t>(get_int(p, "delay_samples", cfg.delay_samples));
    cfg.full_scale_volts = get_double(p, "full_scale_volts", cfg.full_scale_volts);
    if (p.contains("role")) cfg.role = channel_role_from_name(require_string(p, "role"));
    if (p.contains("fir_taps")) {
        const Json& taps = p.at("fir_taps");
        if (!taps.is_array()) throw RpcError("schema-error", "field 'fir_taps' must be an array");
        if (taps.empty()) {
            cfg.fir.reset();
        } else {
            FirFilter f;
            f.taps.resize(static_cast<Eigen::Index>(taps.size()));
            for (std::size_t i = 0; i < taps.size(); ++i) {
                if (!taps[i].is_number())
                    throw RpcError("schema-error", "field 'fir_taps' must hold numbers");
                f.taps[static_cast<Eigen::Index>(i)] = taps[i].get<double>();
            }
            cfg.fir = std::move(f);
        }
    }
    return cfg;
}

}  // namespace

void ControlServer::register_methods() {
    rpc_.register_method("ping", [](const Json&) { return Json("pong"); });

    rpc_.register_method("bind_channel", [this](const Json& p) {
        ChannelBinding b;
        b.virtual_channel = require_string(p, "name");
        b.device_id = static_cast<std::uint16_t>(require_int(p, "device_id"));
        b.physical_channel = static_cast<std::uint8_t>(require_int(p, "physical_channel"));
        b.kind = binding_kind_from_name(require_string(p, "kind"));
        b.latency_samples = static_cast<std::uint32_t>(get_int(p, "latency_samples", 0));
        bind_channel(b);
        return Json{{"ok", true}};
    });

    rpc_.register_method("list_channels", [this](const Json&) {
        Json out = Json::array();
        for (const auto& b : list_channels()) {
            out.push_back({{"name", b.virtual_channel},
                           {"device_id", b.device_id},
                           {"physical_channel", b.physical_channel},
                           {"kind", std::string(binding_kind_name(b.kind))},
                           {"latency_samples", b.latency_samples}});
        }
        return Json{{"channels", std::move(out)}};
    });

    rpc_.register_method("configure_channel", [this](const Json& p) {
        const std::string name = require_string(p, "name");
        configure_channel(name, config_from_json(channel_config(name), p));
        return Json{{"ok", true}};
    });

    rpc_.register_method("align_timing", [this](const Json&) {
        Json added = Json::object();
        for (const auto& [name, extra] : align_timing()) added[name] = extra;
        return Json{{"added_delay_samples", std::move(added)}};
    });

    rpc_.register_method("define_wave", [this](const Json& p) {
        const auto slot = static_cast<std::size_t>(require_int(p, "slot"));
        define_wave(slot, require_string(p, "expr"),
                    bindings_from_json(p.value("bindings", Json())),
                    static_cast<Eigen::Index>(get_int(p, "length", opts_.default_length)),
                    get_double(p, "sample_rate", opts_.default_sample_rate));
        return Json{{"ok", true}, {"slot", slot}};
    });

    rpc_.register_method("write_wave", [this](const Json& p) {
        const std::string channel = require_string(p, "channel");
        const auto device_slot = static_cast<std::uint16_t>(get_int(p, "device_slot", 0));
        DacRecord rec;
        if (p.contains("slot")) {
            rec = write_wave_slot(channel, static_cast<std::size_t>(require_int(p, "slot")),
                                  device_slot);
        } else if (p.contains("expr")) {
            rec = write_wave_expr(channel, require_string(p, "expr"),
                                  bindings_from_json(p.value("bindings", Json())), device_slot,
                                  static_cast<Eigen::Index>(get_int(p, "length", opts_.default_length)),
                                  get_double(p, "sample_rate", opts_.default_sample_rate));
        } else {
            throw RpcError("schema-error", "write_wave needs 'slot' or 'expr'");
        }
        return Json{{"ok", true},
                    {"device_slot", device_slot},
                    {"samples", rec.codes.size()},
                    {"clipped", rec.clipped}};
    });

    rpc_.register_method("set_dc", [this](const Json& p) {
        const std::int64_t uv = set_dc(require_string(p, "channel"), require_double(p, "volts"));
        return Json{{"ok", true}, {"microvolts", uv}};
    });

    rpc_.register_method("play_all", [this](const Json& p) {
        const auto mode = static_cast<std::uint8_t>(get_int(p, "trigger_mode", 1));
        return Json{{"ok", true}, {"acks", play_all(mode)}};
    });

    rpc_.register_method("readback_wave", [this](const Json& p) {
        auto codes = readback(require_string(p, "channel"),
                              static_cast<std::uint16_t>(get_int(p, "device_slot", 0)));
        return Json{{"codes", std::move(codes)}};
    });
}

}  // namespace qctrl
