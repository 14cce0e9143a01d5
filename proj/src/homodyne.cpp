#include "qctrl/homodyne.hpp"

#include "qctrl/error.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace qctrl {

Waveform preprocess(const Record& record, const FirFilter* fir, double sample_rate) {
    if (!record.complete) {
        std::string msg = "incomplete record (missing frames:";
        for (auto idx : record.missing) msg += " " + std::to_string(idx);
        throw Error(msg + ")");
    }
    if (record.corrupt) throw Error("corrupt record");
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(static_cast<Eigen::Index>(record.samples.size()));
    for (std::size_t n = 0; n < record.samples.size(); ++n)
        w.samples[static_cast<Eigen::Index>(n)] = record.samples[n] / 2048.0;
    if (fir) return fir_apply(w, *fir);
    return w;
}

IQPoint homodyne(const Waveform& w, double demod_freq) {
    const Eigen::Index n = w.size();
    if (n < 1) throw Error("homodyne needs a non-empty waveform");
    const double step = 2.0 * std::numbers::pi * demod_freq / w.sample_rate;
    Samples phase(n);
    for (Eigen::Index k = 0; k < n; ++k) phase[k] = step * static_cast<double>(k);
    const double scale = 2.0 / static_cast<double>(n);
    IQPoint p;
    p.i = scale * (w.samples * phase.cos()).sum();
    p.q = scale * (w.samples * phase.sin()).sum();
    return p;
}

Discriminator train_discriminator(std::span<const IQPoint> zeros, std::span<const IQPoint> ones) {
    if (zeros.empty() || ones.empty())
        throw Error("discriminator training needs points for both states");
    auto centroid = [](std::span<const IQPoint> pts) {
        Eigen::Vector2d c = Eigen::Vector2d::Zero();
        for (const auto& p : pts) c += Eigen::Vector2d(p.i, p.q);
        return Eigen::Vector2d(c / static_cast<double>(pts.size()));
    };
    const Eigen::Vector2d c0 = centroid(zeros);
    const Eigen::Vector2d c1 = centroid(ones);
    Discriminator d;
    d.w = c1 - c0;
    if (d.w.squaredNorm() == 0.0) throw Error("coincident centroids");
    d.b = d.w.dot(0.5 * (c0 + c1));
    return d;
}

QubitState classify(const Discriminator& d, const IQPoint& p) {
    return d.w.dot(Eigen::Vector2d(p.i, p.q)) - d.b > 0.0 ? QubitState::One : QubitState::Zero;
}

void save_discriminator(const Discriminator& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write discriminator file '" + path + "'");
    out.precision(17);
    out << d.w.x() << ' ' << d.w.y() << ' ' << d.b << '\n';
    if (!out) throw Error("write failed for '" + path + "'");
}

Discriminator load_discriminator(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read discriminator file '" + path + "'");
    Discriminator d;
    in >> d.w.x() >> d.w.y() >> d.b;
    if (!in) throw Error("malformed discriminator file '" + path + "'");
    if (d.w.squaredNorm() == 0.0) throw Error("degenerate discriminator in '" + path + "'");
    return d;
}

}  // namespace qctrl
