#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace qctrl {

using Samples = Eigen::ArrayXd;

// Uniformly sampled real-valued signal in normalized units. Sample n sits at
// time t0 + n / sample_rate.
struct Waveform {
    Samples samples;
    double sample_rate = 1e9;
    double t0 = 0.0;

    Eigen::Index size() const { return samples.size(); }
    double time_of(Eigen::Index n) const { return t0 + static_cast<double>(n) / sample_rate; }
    double dt() const { return 1.0 / sample_rate; }
};

enum class WaveKind {
    DC,
    Sine,
    Rectangle,
    Gaussian,
    IsoscelesTrapezoid,
    Triangle,
    Slope,
    Flattop,
};

inline constexpr int kWaveKindCount = 8;

// Grammar-level primitive name ("dc", "sine", "rect", ...).
std::string_view wave_kind_name(WaveKind kind);
WaveKind wave_kind_from_name(std::string_view name);  // throws Error on unknown name
bool is_wave_kind_name(std::string_view name);

using ParamMap = std::map<std::string, double>;

inline constexpr double kDefaultSampleRate = 1e9;  // matches the 1 Gsps digitizer
inline constexpr Eigen::Index kBenchLength = 6000;

// Closed-form generators:
//   dc:        a
//   sine:      a*sin(2*pi*f*t + phi)
//   rect:      a on [t1, t2), 0 elsewhere
//   gauss:     a*exp(-(t-mu)^2 / (2*sigma^2))
//   trapezoid: apex plateau [t1+r, t2-r], linear ramps of duration r
//   triangle:  symmetric rise/fall on [t1, t2], peak a at the midpoint
//   slope:     a*(t-t0)/T clamped between 0 and a
//   flattop:   (a/2)*[erf((t-t1)/(sqrt(2)*sigma)) - erf((t-t2)/(sqrt(2)*sigma))]
// samples[n] equals the closed form at t = t0 + n/sample_rate.
Waveform generate(WaveKind kind, const ParamMap& params, Eigen::Index length,
                  double sample_rate = kDefaultSampleRate, double t0 = 0.0);

enum class PointwiseOp { Add, Sub, Mul };

// out[n] = op(a[n], b[n]); the shorter operand is zero-extended on the right.
// Result keeps a's t0. Throws on mismatched sample_rate.
Waveform pointwise(PointwiseOp op, const Waveform& a, const Waveform& b);

// Cumulative left-Riemann sum: out[n] = sum_{k<=n} w[k] / sample_rate.
Waveform integrate(const Waveform& w);

// out[0] = 0; out[n] = (w[n] - w[n-1]) * sample_rate. Exact right-inverse of
// integrate for n >= 1.
Waveform differentiate_numeric(const Waveform& w);

// Full linear convolution scaled by 1/sample_rate (continuous-convolution
// approximation). Length = len(a) + len(kernel) - 1, t0 = a.t0 + kernel.t0.
Waveform convolve(const Waveform& a, const Waveform& kernel);

}  // namespace qctrl
