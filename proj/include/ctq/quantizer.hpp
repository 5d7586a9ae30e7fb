#pragma once

#include "ctq/compander.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace ctq {

// Polar quantizer for complex vectors normalized by their strongest entry.
// Each non-reference component yields an amplitude symbol in [0, amp_levels)
// and a phase symbol in [0, ang_levels); the reference component carries the
// special symbols amp_levels / ang_levels, so the alphabets have levels+1
// symbols each.
struct QuantizerConfig {
    int n_t = 1;
    int amp_levels = 2;   // >= 2
    int ang_levels = 2;   // >= 2
    CompanderParams amp;
    CompanderParams ang;

    uint32_t amp_alphabet() const { return static_cast<uint32_t>(amp_levels) + 1; }
    uint32_t ang_alphabet() const { return static_cast<uint32_t>(ang_levels) + 1; }
};

void validate(const QuantizerConfig& cfg);

struct QuantizedFrame {
    int strongest = 0;
    std::vector<uint32_t> amp;
    std::vector<uint32_t> ang;
};

// Divides by the entry of largest magnitude (lowest index on ties).
// Throws ZeroVectorError on an all-zero frame.
std::pair<Eigen::VectorXcd, int> normalize_frame(const Eigen::VectorXcd& x);

// Argument mapped onto [0,1): arg/2pi with negative angles wrapped up.
double phase_unit(std::complex<double> v);

QuantizedFrame quantize_frame(const QuantizerConfig& cfg, const Eigen::VectorXcd& x);

// Midpoint reconstruction; the reference component becomes 1+0i. Throws
// MalformedFrameError unless exactly one component carries both special
// symbols and every symbol is within its alphabet.
Eigen::VectorXcd dequantize_frame(const QuantizerConfig& cfg, const QuantizedFrame& f);

// Pre-image midpoints expand((s+0.5)/levels) for s in [0, levels).
std::vector<double> reconstruction_levels(const CompanderParams& p, int levels);

// Columns are frames.
std::vector<QuantizedFrame> quantize_sequence(const QuantizerConfig& cfg,
                                              const Eigen::MatrixXcd& frames);
Eigen::MatrixXcd dequantize_sequence(const QuantizerConfig& cfg,
                                     const std::vector<QuantizedFrame>& frames);

// Mean squared chordal distance 1 - avg |<x,y>|^2 / (|x|^2 |y|^2) over columns.
double mscd(const Eigen::MatrixXcd& ref, const Eigen::MatrixXcd& rec);

constexpr double kUniformPhaseEnergy = 4.0 * M_PI * M_PI / 3.0;

// Splits a power-of-two level budget between amplitude and phase so that
// log2(ang/abs) tracks log2(sqrt(ang_energy) * ratio). Both sides >= 2.
std::pair<int, int> split_levels(int total_levels,
                                 double ang_energy = kUniformPhaseEnergy,
                                 double ratio = 1.0);

} // namespace ctq
