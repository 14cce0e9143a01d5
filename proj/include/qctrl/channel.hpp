#pragma once

#include "qctrl/waveform.hpp"
#include "qctrl/wave_expr.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace qctrl {

struct FirFilter {
    Eigen::ArrayXd taps;  // length 1..1024, finite values
};

enum class ChannelRole { X, Y, Z, DC, ReadoutI, ReadoutQ };

std::string_view channel_role_name(ChannelRole role);
ChannelRole channel_role_from_name(std::string_view name);

// Per-channel hardware-defect compensation record.
struct ChannelConfig {
    ChannelRole role = ChannelRole::Z;
    std::optional<FirFilter> fir;
    double offset = 0.0;          // normalized additive bias, |offset| <= 1
    std::uint32_t delay_samples = 0;  // <= 1e6
    double gain = 1.0;            // > 0
    double full_scale_volts = 1.0;
};

inline constexpr std::uint32_t kMaxDelaySamples = 1'000'000;
inline constexpr Eigen::Index kMaxFirTaps = 1024;

// Device-facing sample codes. clipped counts samples clamped during render.
struct DacRecord {
    std::vector<std::int16_t> codes;
    double sample_rate = kDefaultSampleRate;
    std::int64_t clipped = 0;
};

// out[n] = sum_k taps[k] * w[n-k], with w[m<0] = 0; length preserved.
Waveform fir_apply(const Waveform& w, const FirFilter& f);

// Fixed pipeline order: FIR -> gain -> offset -> delay. The delay prepends
// delay_samples samples of value `offset` so a biased channel stays biased.
// Output length = len(w) + delay_samples.
Waveform apply_channel(const Waveform& w, const ChannelConfig& cfg);

// code = round(clamp(sample, -1, 1) * 32767)
DacRecord render_dac(const Waveform& w, const ChannelConfig& cfg);

// Y is X with the carrier phase advanced by pi/2; each waveform then passes
// through its own channel config (offsets null LO leakage, gain/delay balance
// the image). sine_params as for generate(WaveKind::Sine, ...).
std::pair<Waveform, Waveform> gen_iq_pair(const ParamMap& sine_params, Eigen::Index length,
                                          double sample_rate, const ChannelConfig& cfg_x,
                                          const ChannelConfig& cfg_y);

// Expression overload: e must be a sine primitive call. Throws on a
// non-sinusoidal carrier.
std::pair<Waveform, Waveform> gen_iq_pair(const ExprPtr& e, const ParamMap& bindings,
                                          Eigen::Index length, double sample_rate,
                                          const ChannelConfig& cfg_x, const ChannelConfig& cfg_y);

}  // namespace qctrl
