#include "qctrl/channel.hpp"

#include "qctrl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qctrl {

std::string_view channel_role_name(ChannelRole role) {
    switch (role) {
        case ChannelRole::X: return "X";
        case ChannelRole::Y: return "Y";
        case ChannelRole::Z: return "Z";
        case ChannelRole::DC: return "DC";
        case ChannelRole::ReadoutI: return "I";
        case ChannelRole::ReadoutQ: return "Q";
    }
    throw Error("invalid channel role");
}

ChannelRole channel_role_from_name(std::string_view name) {
    if (name == "X") return ChannelRole::X;
    if (name == "Y") return ChannelRole::Y;
    if (name == "Z") return ChannelRole::Z;
    if (name == "DC") return ChannelRole::DC;
    if (name == "I") return ChannelRole::ReadoutI;
    if (name == "Q") return ChannelRole::ReadoutQ;
    throw Error("unknown channel role '" + std::string(name) + "'");
}

Waveform fir_apply(const Waveform& w, const FirFilter& f) {
    const Eigen::Index taps = f.taps.size();
    if (taps < 1) throw Error("FIR filter needs at least one tap");
    if (taps > kMaxFirTaps) throw Error("FIR filter exceeds 1024 taps");
    if (!f.taps.isFinite().all()) throw Error("FIR taps must be finite");

    Waveform out;
    out.sample_rate = w.sample_rate;
    out.t0 = w.t0;
    out.samples.resize(w.size());
    for (Eigen::Index n = 0; n < w.size(); ++n) {
        const Eigen::Index k = std::min(taps - 1, n);
        // sum_{j=0..k} taps[j] * w[n-j]
        out.samples[n] =
            (f.taps.head(k + 1) * w.samples.segment(n - k, k + 1).reverse()).sum();
    }
    return out;
}

Waveform apply_channel(const Waveform& w, const ChannelConfig& cfg) {
    if (std::abs(cfg.offset) > 1.0) throw Error("channel offset out of range [-1, 1]");
    if (!(cfg.gain > 0.0)) throw Error("channel gain must be > 0");
    if (cfg.delay_samples > kMaxDelaySamples) throw Error("channel delay exceeds 1e6 samples");

    Waveform stage = cfg.fir ? fir_apply(w, *cfg.fir) : w;
    // Skip neutral stages so an all-neutral config is the bitwise identity.
    if (cfg.gain != 1.0) stage.samples *= cfg.gain;
    if (cfg.offset != 0.0) stage.samples += cfg.offset;
    if (cfg.delay_samples == 0) return stage;

    Waveform out;
    out.sample_rate = stage.sample_rate;
    out.t0 = stage.t0;
    out.samples.resize(stage.size() + cfg.delay_samples);
    out.samples.head(cfg.delay_samples).setConstant(cfg.offset);
    out.samples.tail(stage.size()) = stage.samples;
    return out;
}

DacRecord render_dac(const Waveform& w, const ChannelConfig& cfg) {
    Waveform shaped = apply_channel(w, cfg);
    DacRecord rec;
    rec.sample_rate = shaped.sample_rate;
    rec.codes.resize(static_cast<std::size_t>(shaped.size()));
    for (Eigen::Index n = 0; n < shaped.size(); ++n) {
        double s = shaped.samples[n];
        if (s > 1.0) {
            s = 1.0;
            ++rec.clipped;
        } else if (s < -1.0) {
            s = -1.0;
            ++rec.clipped;
        }
        rec.codes[static_cast<std::size_t>(n)] = static_cast<std::int16_t>(std::lround(s * 32767.0));
    }
    return rec;
}

std::pair<Waveform, Waveform> gen_iq_pair(const ParamMap& sine_params, Eigen::Index length,
                                          double sample_rate, const ChannelConfig& cfg_x,
                                          const ChannelConfig& cfg_y) {
    ParamMap py = sine_params;
    py["phi"] = (sine_params.count("phi") ? sine_params.at("phi") : 0.0) + std::numbers::pi / 2.0;
    Waveform x = generate(WaveKind::Sine, sine_params, length, sample_rate);
    Waveform y = generate(WaveKind::Sine, py, length, sample_rate);
    return {apply_channel(x, cfg_x), apply_channel(y, cfg_y)};
}

std::pair<Waveform, Waveform> gen_iq_pair(const ExprPtr& e, const ParamMap& bindings,
                                          Eigen::Index length, double sample_rate,
                                          const ChannelConfig& cfg_x, const ChannelConfig& cfg_y) {
    if (!e || e->node != WaveExpr::Node::Call || e->kind != WaveKind::Sine)
        throw Error("IQ pair generation requires a sinusoidal carrier");
    ParamMap params;
    for (const auto& [name, arg] : e->args) params[name] = eval_scalar_expr(arg, bindings);
    return gen_iq_pair(params, length, sample_rate, cfg_x, cfg_y);
}

}  // namespace qctrl
