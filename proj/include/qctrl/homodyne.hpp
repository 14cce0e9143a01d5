#pragma once

#include "qctrl/channel.hpp"
#include "qctrl/reassembler.hpp"
#include "qctrl/waveform.hpp"

#include <Eigen/Core>

#include <span>
#include <string>

namespace qctrl {

struct IQPoint {
    double i = 0.0;
    double q = 0.0;
};

enum class QubitState { Zero, One };

// Normalizes a complete record's 12-bit codes to [-1, 1) by /2048, then
// applies the optional FIR. Throws on incomplete records, listing the
// missing frame indices.
Waveform preprocess(const Record& record, const FirFilter* fir, double sample_rate);

// I = (2/N) sum w[n] cos(2 pi f n / fs), Q = (2/N) sum w[n] sin(...).
// For w[n] = A cos(2 pi f n / fs + phi) over integer periods this yields
// (A cos phi, -A sin phi), so phi = atan2(-Q, I).
IQPoint homodyne(const Waveform& w, double demod_freq);

// Linear boundary w . p = b in the IQ plane; One lies on the positive side.
struct Discriminator {
    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    double b = 0.0;
};

// Perpendicular bisector of the class centroids: w = c1 - c0,
// b = w . (c0 + c1) / 2. Throws on an empty class or coincident centroids.
Discriminator train_discriminator(std::span<const IQPoint> zeros, std::span<const IQPoint> ones);

// One if w . p - b > 0, Zero otherwise (ties resolve to Zero).
QubitState classify(const Discriminator& d, const IQPoint& p);

// Text persistence: one line, "w_i w_q b" in decimal notation.
void save_discriminator(const Discriminator& d, const std::string& path);
Discriminator load_discriminator(const std::string& path);

}  // namespace qctrl
