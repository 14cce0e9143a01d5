#include "qctrl/waveform.hpp"

#include "qctrl/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace qctrl {

namespace {

struct KindNames {
    WaveKind kind;
    std::string_view name;
};

constexpr std::array<KindNames, kWaveKindCount> kKindNames = {{
    {WaveKind::DC, "dc"},
    {WaveKind::Sine, "sine"},
    {WaveKind::Rectangle, "rect"},
    {WaveKind::Gaussian, "gauss"},
    {WaveKind::IsoscelesTrapezoid, "trapezoid"},
    {WaveKind::Triangle, "triangle"},
    {WaveKind::Slope, "slope"},
    {WaveKind::Flattop, "flattop"},
}};

// Declared parameters per kind; NaN marks a required parameter.
struct ParamSpec {
    std::string_view name;
    double default_value;
};

constexpr double kRequired = std::numeric_limits<double>::quiet_NaN();

const std::vector<ParamSpec>& param_specs(WaveKind kind) {
    static const std::vector<ParamSpec> dc = {{"a", kRequired}};
    static const std::vector<ParamSpec> sine = {{"a", 1.0}, {"f", kRequired}, {"phi", 0.0}};
    static const std::vector<ParamSpec> rect = {{"a", 1.0}, {"t1", kRequired}, {"t2", kRequired}};
    static const std::vector<ParamSpec> gauss = {{"a", 1.0}, {"mu", kRequired}, {"sigma", kRequired}};
    static const std::vector<ParamSpec> trap = {
        {"a", 1.0}, {"t1", kRequired}, {"t2", kRequired}, {"r", kRequired}};
    static const std::vector<ParamSpec> tri = {{"a", 1.0}, {"t1", kRequired}, {"t2", kRequired}};
    static const std::vector<ParamSpec> slope = {{"a", 1.0}, {"t0", 0.0}, {"T", kRequired}};
    static const std::vector<ParamSpec> flattop = {
        {"a", 1.0}, {"t1", kRequired}, {"t2", kRequired}, {"sigma", kRequired}};
    switch (kind) {
        case WaveKind::DC: return dc;
        case WaveKind::Sine: return sine;
        case WaveKind::Rectangle: return rect;
        case WaveKind::Gaussian: return gauss;
        case WaveKind::IsoscelesTrapezoid: return trap;
        case WaveKind::Triangle: return tri;
        case WaveKind::Slope: return slope;
        case WaveKind::Flattop: return flattop;
    }
    throw Error("invalid wave kind");
}

// Validates presence, rejects unknown names, fills defaults.
std::map<std::string, double> resolve_params(WaveKind kind, const ParamMap& params) {
    const auto& specs = param_specs(kind);
    std::map<std::string, double> out;
    for (const auto& [name, value] : params) {
        bool known = std::any_of(specs.begin(), specs.end(),
                                 [&](const ParamSpec& s) { return s.name == name; });
        if (!known)
            throw FieldError(name, "unknown parameter '" + name + "' for " +
                                       std::string(wave_kind_name(kind)));
        out[name] = value;
    }
    for (const auto& spec : specs) {
        if (out.count(std::string(spec.name))) continue;
        if (std::isnan(spec.default_value))
            throw FieldError(std::string(spec.name), "missing parameter '" + std::string(spec.name) +
                                                         "' for " + std::string(wave_kind_name(kind)));
        out[std::string(spec.name)] = spec.default_value;
    }
    return out;
}

// Sample n sits at t0 + n / sample_rate exactly; the division must not be
// strength-reduced to a multiply by the rounded reciprocal.
Samples time_axis(Eigen::Index length, double sample_rate, double t0) {
    Samples t(length);
    for (Eigen::Index n = 0; n < length; ++n)
        t[n] = t0 + static_cast<double>(n) / sample_rate;
    return t;
}

}  // namespace

std::string_view wave_kind_name(WaveKind kind) {
    for (const auto& kn : kKindNames)
        if (kn.kind == kind) return kn.name;
    throw Error("invalid wave kind");
}

WaveKind wave_kind_from_name(std::string_view name) {
    for (const auto& kn : kKindNames)
        if (kn.name == name) return kn.kind;
    throw Error("unknown primitive '" + std::string(name) + "'");
}

bool is_wave_kind_name(std::string_view name) {
    for (const auto& kn : kKindNames)
        if (kn.name == name) return true;
    return false;
}

Waveform generate(WaveKind kind, const ParamMap& params, Eigen::Index length, double sample_rate,
                  double t0) {
    if (length < 1) throw Error("waveform length must be >= 1");
    if (!(sample_rate > 0)) throw Error("sample_rate must be > 0");

    const auto p = resolve_params(kind, params);
    auto at = [&](const char* name) { return p.at(name); };

    Waveform w;
    w.sample_rate = sample_rate;
    w.t0 = t0;
    const Samples t = time_axis(length, sample_rate, t0);

    using std::numbers::pi;
    switch (kind) {
        case WaveKind::DC:
            w.samples = Samples::Constant(length, at("a"));
            break;
        case WaveKind::Sine: {
            const double omega = 2.0 * pi * at("f");
            w.samples = at("a") * (omega * t + at("phi")).sin();
            break;
        }
        case WaveKind::Rectangle: {
            const double a = at("a"), t1 = at("t1"), t2 = at("t2");
            w.samples = ((t >= t1) && (t < t2)).select(Samples::Constant(length, a), 0.0);
            break;
        }
        case WaveKind::Gaussian: {
            const double sigma = at("sigma");
            if (!(sigma > 0)) throw FieldError("sigma", "sigma must be > 0");
            const double mu = at("mu");
            w.samples = at("a") * (-(t - mu).square() / (2.0 * sigma * sigma)).exp();
            break;
        }
        case WaveKind::IsoscelesTrapezoid: {
            const double a = at("a"), t1 = at("t1"), t2 = at("t2"), r = at("r");
            if (!(r > 0)) throw FieldError("r", "ramp duration r must be > 0");
            if (t2 - t1 < 2.0 * r)
                throw FieldError("r", "trapezoid needs t2 - t1 >= 2r");
            w.samples = a * ((t - t1) / r).min((t2 - t) / r).min(1.0).max(0.0);
            break;
        }
        case WaveKind::Triangle: {
            const double a = at("a"), t1 = at("t1"), t2 = at("t2");
            if (!(t2 > t1)) throw FieldError("t2", "triangle needs t2 > t1");
            const double mid = 0.5 * (t1 + t2), half = 0.5 * (t2 - t1);
            w.samples = a * (1.0 - (t - mid).abs() / half).max(0.0);
            break;
        }
        case WaveKind::Slope: {
            const double a = at("a"), start = at("t0"), dur = at("T");
            if (!(dur > 0)) throw FieldError("T", "slope duration T must be > 0");
            w.samples = a * ((t - start) / dur).min(1.0).max(0.0);
            break;
        }
        case WaveKind::Flattop: {
            const double a = at("a"), t1 = at("t1"), t2 = at("t2"), sigma = at("sigma");
            if (!(sigma > 0)) throw FieldError("sigma", "sigma must be > 0");
            const double s = 1.0 / (std::numbers::sqrt2 * sigma);
            w.samples.resize(length);
            for (Eigen::Index n = 0; n < length; ++n)
                w.samples[n] = 0.5 * a * (std::erf(s * (t[n] - t1)) - std::erf(s * (t[n] - t2)));
            break;
        }
    }
    return w;
}

Waveform pointwise(PointwiseOp op, const Waveform& a, const Waveform& b) {
    if (a.sample_rate != b.sample_rate)
        throw Error("pointwise: mismatched sample_rate");
    const Eigen::Index la = a.size(), lb = b.size();
    const Eigen::Index n = std::max(la, lb);

    Waveform out;
    out.sample_rate = a.sample_rate;
    out.t0 = a.t0;
    out.samples = Samples::Zero(n);

    // Zero-extended view of each operand over the common length.
    auto ext = [n](const Samples& s) {
        Samples e = Samples::Zero(n);
        e.head(s.size()) = s;
        return e;
    };

    switch (op) {
        case PointwiseOp::Add:
            if (la == lb) {
                out.samples = a.samples + b.samples;
            } else {
                out.samples = ext(a.samples) + ext(b.samples);
            }
            break;
        case PointwiseOp::Sub:
            if (la == lb) {
                out.samples = a.samples - b.samples;
            } else {
                out.samples = ext(a.samples) - ext(b.samples);
            }
            break;
        case PointwiseOp::Mul:
            if (la == lb) {
                out.samples = a.samples * b.samples;
            } else {
                out.samples = ext(a.samples) * ext(b.samples);
            }
            break;
    }
    return out;
}

Waveform integrate(const Waveform& w) {
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.t0 = w.t0;
    out.samples.resize(w.size());
    const double dt = w.dt();
    double acc = 0.0;
    for (Eigen::Index n = 0; n < w.size(); ++n) {
        acc += w.samples[n] * dt;
        out.samples[n] = acc;
    }
    return out;
}

Waveform differentiate_numeric(const Waveform& w) {
    if (w.size() < 1) throw Error("differentiate: empty waveform");
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.t0 = w.t0;
    out.samples.resize(w.size());
    out.samples[0] = 0.0;
    if (w.size() > 1)
        out.samples.tail(w.size() - 1) =
            (w.samples.tail(w.size() - 1) - w.samples.head(w.size() - 1)) * w.sample_rate;
    return out;
}

Waveform convolve(const Waveform& a, const Waveform& kernel) {
    if (a.sample_rate != kernel.sample_rate)
        throw Error("convolve: mismatched sample_rate");
    const Eigen::Index la = a.size(), lk = kernel.size();
    Waveform out;
    out.sample_rate = a.sample_rate;
    out.t0 = a.t0 + kernel.t0;
    out.samples = Samples::Zero(la + lk - 1);
    for (Eigen::Index k = 0; k < lk; ++k)
        out.samples.segment(k, la) += kernel.samples[k] * a.samples;
    out.samples *= a.dt();
    return out;
}

}  // namespace qctrl
