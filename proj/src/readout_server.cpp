#include "qctrl/readout_server.hpp"

#include "qctrl/error.hpp"

#include <chrono>

namespace qctrl {

AcquisitionEngine::AcquisitionEngine(std::uint16_t udp_port, int rcvbuf_bytes)
    : port_(udp_port), sock_(net::UdpSocket::bind(udp_port, rcvbuf_bytes)) {
    port_ = sock_.port();
    configure(AcquisitionConfig{});
}

AcquisitionEngine::~AcquisitionEngine() { stop(); }

void AcquisitionEngine::start() {
    if (running_.exchange(true)) return;
    thread_ = std::thread([this] { ingest_loop(); });
}

void AcquisitionEngine::stop() {
    if (!running_.exchange(false)) return;
    if (thread_.joinable()) thread_.join();
}

void AcquisitionEngine::configure(AcquisitionConfig cfg) {
    if (cfg.record_length < 1) throw Error("record_length must be >= 1");
    if (!(cfg.demod_freq > 0) || !(cfg.demod_freq < cfg.sample_rate / 2))
        throw Error("demod_freq must lie in (0, sample_rate/2)");
    std::lock_guard lock(mutex_);
    cfg_ = std::move(cfg);
    binding_index_.clear();
    queues_.clear();
    for (const auto& b : cfg_.bindings) {
        binding_index_[{b.device_id, b.channel_id}] = b.name;
        queues_[b.name];
    }
}

AcquisitionConfig AcquisitionEngine::config() const {
    std::lock_guard lock(mutex_);
    return cfg_;
}

void AcquisitionEngine::ingest_loop() {
    Reassembler reasm;
    std::vector<std::uint8_t> buf(kMaxFrameBytes);
    auto last_flush = std::chrono::steady_clock::now();

    while (running_.load(std::memory_order_relaxed)) {
        auto n = sock_.recv(buf, 10);
        const auto now = std::chrono::steady_clock::now();

        if (n) {
            std::optional<Record> rec;
            bool decode_ok = true;
            try {
                rec = reasm.ingest(decode_frame({buf.data(), *n}));
            } catch (const Error&) {
                decode_ok = false;
            }

            std::lock_guard lock(mutex_);
            ++stats_.datagrams;
            if (!decode_ok) ++stats_.decode_errors;
            if (rec) {
                ++stats_.records;
                if (rec->corrupt) {
                    ++stats_.corrupt_records;
                } else {
                    auto it = binding_index_.find({rec->key.device_id, rec->key.channel_id});
                    if (it == binding_index_.end()) {
                        ++stats_.unmatched_records;
                    } else {
                        auto& q = queues_[it->second];
                        q.records.push_back(std::move(*rec));
                        stats_.queue_depth = q.records.size();
                        stats_.max_queue_depth =
                            std::max(stats_.max_queue_depth, q.records.size());
                        cv_.notify_all();
                    }
                }
            }
            stats_.bytes = reasm.stats().bytes;
        }

        if (now - last_flush > std::chrono::milliseconds(100)) {
            last_flush = now;
            double age;
            {
                std::lock_guard lock(mutex_);
                age = cfg_.flush_age;
            }
            auto stale = reasm.flush(age);
            if (!stale.empty()) {
                std::lock_guard lock(mutex_);
                stats_.incomplete_records += stale.size();
            }
        }
    }
}

std::vector<Record> AcquisitionEngine::acquire_raw(const std::string& channel, std::size_t n,
                                                   int timeout_ms) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    std::vector<Record> out;
    out.reserve(n);
    std::unique_lock lock(mutex_);
    auto it = queues_.find(channel);
    if (it == queues_.end()) throw Error("unknown input channel '" + channel + "'");
    while (out.size() < n) {
        if (!it->second.records.empty()) {
            out.push_back(std::move(it->second.records.front()));
            it->second.records.pop_front();
            stats_.queue_depth = it->second.records.size();
            continue;
        }
        if (cv_.wait_until(lock, deadline) == std::cv_status::timeout &&
            it->second.records.empty()) {
            throw Error("acquisition timeout: received " + std::to_string(out.size()) + " of " +
                        std::to_string(n) + " records");
        }
    }
    return out;
}

IQPoint AcquisitionEngine::record_iq(const Record& rec) const {
    AcquisitionConfig cfg;
    {
        std::lock_guard lock(mutex_);
        cfg = cfg_;
    }
    Waveform w = preprocess(rec, cfg.fir ? &*cfg.fir : nullptr, cfg.sample_rate);
    return homodyne(w, cfg.demod_freq);
}

std::vector<IQPoint> AcquisitionEngine::acquire_iq(const std::string& channel, std::size_t n,
                                                   int timeout_ms) {
    auto records = acquire_raw(channel, n, timeout_ms);
    std::vector<IQPoint> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(record_iq(rec));
    return out;
}

std::vector<QubitState> AcquisitionEngine::acquire_state(const std::string& channel, std::size_t n,
                                                         int timeout_ms) {
    Discriminator d;
    {
        std::lock_guard lock(mutex_);
        if (!discriminator_) throw Error("no discriminator trained or loaded");
        d = *discriminator_;
    }
    auto records = acquire_raw(channel, n, timeout_ms);
    std::vector<QubitState> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(classify(d, record_iq(rec)));
    return out;
}

void AcquisitionEngine::set_discriminator(const Discriminator& d) {
    std::lock_guard lock(mutex_);
    discriminator_ = d;
}

std::optional<Discriminator> AcquisitionEngine::discriminator() const {
    std::lock_guard lock(mutex_);
    return discriminator_;
}

IngestStats AcquisitionEngine::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

void AcquisitionEngine::reset_queues() {
    std::lock_guard lock(mutex_);
    for (auto& [_, q] : queues_) q.records.clear();
    stats_.queue_depth = 0;
    stats_.max_queue_depth = 0;
}

// ---------------------------------------------------------------------------
// ReadoutServer RPC surface
// ---------------------------------------------------------------------------

namespace {

std::vector<IQPoint> points_from_json(const Json& params, const std::string& field) {
    Json arr = require_field(params, field);
    if (!arr.is_array()) throw RpcError("schema-error", "field '" + field + "' must be an array");
    std::vector<IQPoint> out;
    out.reserve(arr.size());
    for (const auto& item : arr) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_number() || !item[1].is_number())
            throw RpcError("schema-error", "field '" + field + "' must hold [i, q] pairs");
        out.push_back({item[0].get<double>(), item[1].get<double>()});
    }
    return out;
}

Json points_to_json(const std::vector<IQPoint>& pts) {
    Json out = Json::array();
    for (const auto& p : pts) out.push_back(Json::array({p.i, p.q}));
    return out;
}

}  // namespace

ReadoutServer::ReadoutServer(Options opts)
    : rpc_("readout", opts.rpc_port), engine_(opts.udp_port) {
    register_methods();
}

ReadoutServer::~ReadoutServer() { stop(); }

void ReadoutServer::start() {
    engine_.start();
    rpc_.start();
}

void ReadoutServer::stop() {
    rpc_.stop();
    engine_.stop();
}

void ReadoutServer::register_methods() {
    rpc_.register_method("ping", [](const Json&) { return Json("pong"); });

    rpc_.register_method("configure", [this](const Json& p) {
        AcquisitionConfig cfg = engine_.config();
        cfg.record_length = static_cast<std::uint32_t>(get_int(p, "record_length", cfg.record_length));
        cfg.sample_rate = get_double(p, "sample_rate", cfg.sample_rate);
        cfg.demod_freq = get_double(p, "demod_freq", cfg.demod_freq);
        cfg.flush_age = get_double(p, "flush_age", cfg.flush_age);
        if (p.contains("fir_taps")) {
            const Json& taps = p.at("fir_taps");
            if (!taps.is_array())
                throw RpcError("schema-error", "field 'fir_taps' must be an array");
            if (taps.empty()) {
                cfg.fir.reset();
            } else {
                FirFilter f;
                f.taps.resize(static_cast<Eigen::Index>(taps.size()));
                for (std::size_t i = 0; i < taps.size(); ++i)
                    f.taps[static_cast<Eigen::Index>(i)] = taps[i].get<double>();
                cfg.fir = std::move(f);
            }
        }
        if (p.contains("bindings")) {
            const Json& binds = p.at("bindings");
            if (!binds.is_array())
                throw RpcError("schema-error", "field 'bindings' must be an array");
            cfg.bindings.clear();
            for (const auto& b : binds) {
                AcquisitionBinding ab;
                ab.device_id = static_cast<std::uint16_t>(require_int(b, "device_id"));
                ab.channel_id = static_cast<std::uint8_t>(require_int(b, "channel_id"));
                ab.name = require_string(b, "name");
                cfg.bindings.push_back(std::move(ab));
            }
        }
        engine_.configure(std::move(cfg));
        return Json{{"ok", true}, {"udp_port", engine_.udp_port()}};
    });

    rpc_.register_method("acquire", [this](const Json& p) {
        const auto n = static_cast<std::size_t>(require_int(p, "n"));
        const std::string mode = get_string(p, "mode", "iq");
        const int timeout_ms = static_cast<int>(get_int(p, "timeout_ms", 10'000));
        const std::string channel = get_string(p, "channel", "");

        std::vector<std::string> names;
        if (!channel.empty()) {
            names.push_back(channel);
        } else {
            for (const auto& b : engine_.config().bindings) names.push_back(b.name);
        }

        Json channels = Json::object();
        for (const auto& name : names) {
            if (mode == "iq") {
                channels[name] = points_to_json(engine_.acquire_iq(name, n, timeout_ms));
            } else if (mode == "state") {
                Json states = Json::array();
                for (QubitState s : engine_.acquire_state(name, n, timeout_ms))
                    states.push_back(s == QubitState::One ? 1 : 0);
                channels[name] = std::move(states);
            } else if (mode == "raw") {
                Json recs = Json::array();
                for (const auto& rec : engine_.acquire_raw(name, n, timeout_ms)) {
                    recs.push_back({{"trigger_seq", rec.key.trigger_seq},
                                    {"samples", rec.samples}});
                }
                channels[name] = std::move(recs);
            } else {
                throw RpcError("schema-error", "field 'mode' must be raw, iq, or state");
            }
        }
        return Json{{"mode", mode}, {"n", n}, {"channels", std::move(channels)}};
    });

    rpc_.register_method("train", [this](const Json& p) {
        auto zeros = points_from_json(p, "points0");
        auto ones = points_from_json(p, "points1");
        Discriminator d = train_discriminator(zeros, ones);
        engine_.set_discriminator(d);
        return Json{{"w", {d.w.x(), d.w.y()}}, {"b", d.b}};
    });

    rpc_.register_method("classify", [this](const Json& p) {
        auto maybe = engine_.discriminator();
        if (!maybe) throw RpcError("error", "no discriminator trained or loaded");
        Json states = Json::array();
        for (const auto& pt : points_from_json(p, "points"))
            states.push_back(classify(*maybe, pt) == QubitState::One ? 1 : 0);
        return Json{{"states", std::move(states)}};
    });

    rpc_.register_method("save_discriminator", [this](const Json& p) {
        auto maybe = engine_.discriminator();
        if (!maybe) throw RpcError("error", "no discriminator trained or loaded");
        save_discriminator(*maybe, require_string(p, "path"));
        return Json{{"ok", true}};
    });

    rpc_.register_method("load_discriminator", [this](const Json& p) {
        Discriminator d = load_discriminator(require_string(p, "path"));
        engine_.set_discriminator(d);
        return Json{{"w", {d.w.x(), d.w.y()}}, {"b", d.b}};
    });

    rpc_.register_method("stats", [this](const Json&) {
        IngestStats s = engine_.stats();
        return Json{{"datagrams", s.datagrams},
                    {"decode_errors", s.decode_errors},
                    {"records", s.records},
                    {"incomplete_records", s.incomplete_records},
                    {"corrupt_records", s.corrupt_records},
                    {"unmatched_records", s.unmatched_records},
                    {"bytes", s.bytes},
                    {"queue_depth", s.queue_depth},
                    {"max_queue_depth", s.max_queue_depth}};
    });

    rpc_.register_method("reset_queues", [this](const Json&) {
        engine_.reset_queues();
        return Json{{"ok", true}};
    });
}

}  // namespace qctrl
