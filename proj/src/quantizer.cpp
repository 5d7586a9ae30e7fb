#include "ctq/quantizer.hpp"
#include "ctq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace ctq {

namespace {

uint32_t level_of(const CompanderParams& p, int levels, double unit_value) {
    double y = compress_value(p, std::clamp(unit_value, 0.0, 1.0));
    int s = static_cast<int>(levels * y);
    return static_cast<uint32_t>(std::clamp(s, 0, levels - 1));
}

} // namespace

double phase_unit(std::complex<double> v) {
    double a = std::arg(v);           // (-pi, pi]
    if (a < 0.0) a += 2.0 * M_PI;
    double u = a / (2.0 * M_PI);
    return u >= 1.0 ? 0.0 : u;
}

void validate(const QuantizerConfig& cfg) {
    if (cfg.n_t < 1) throw std::invalid_argument("n_t must be >= 1");
    if (cfg.amp_levels < 2 || cfg.ang_levels < 2)
        throw std::invalid_argument("need at least two levels per axis");
    validate(cfg.amp);
    validate(cfg.ang);
}

std::pair<Eigen::VectorXcd, int> normalize_frame(const Eigen::VectorXcd& x) {
    int best = -1;
    double best_mag = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double m = std::abs(x[i]);
        if (m > best_mag) { best_mag = m; best = static_cast<int>(i); }
    }
    if (best < 0)
        throw ZeroVectorError("cannot normalize an all-zero frame");
    return {x / x[best], best};
}

QuantizedFrame quantize_frame(const QuantizerConfig& cfg, const Eigen::VectorXcd& x) {
    validate(cfg);
    if (x.size() != cfg.n_t)
        throw std::invalid_argument("frame dimension mismatch");
    auto [nx, strongest] = normalize_frame(x);
    QuantizedFrame f;
    f.strongest = strongest;
    f.amp.resize(cfg.n_t);
    f.ang.resize(cfg.n_t);
    for (int i = 0; i < cfg.n_t; ++i) {
        if (i == strongest) {
            f.amp[i] = static_cast<uint32_t>(cfg.amp_levels);
            f.ang[i] = static_cast<uint32_t>(cfg.ang_levels);
            continue;
        }
        f.amp[i] = level_of(cfg.amp, cfg.amp_levels, std::abs(nx[i]));
        f.ang[i] = level_of(cfg.ang, cfg.ang_levels, phase_unit(nx[i]));
    }
    return f;
}

std::vector<double> reconstruction_levels(const CompanderParams& p, int levels) {
    std::vector<double> mid(levels);
    for (int s = 0; s < levels; ++s)
        mid[s] = expand_value(p, (s + 0.5) / levels);
    return mid;
}

namespace {

Eigen::VectorXcd dequantize_with(const QuantizerConfig& cfg, const QuantizedFrame& f,
                                 const std::vector<double>& amp_mid,
                                 const std::vector<double>& ang_mid) {
    if (static_cast<int>(f.amp.size()) != cfg.n_t || static_cast<int>(f.ang.size()) != cfg.n_t)
        throw MalformedFrameError("symbol count does not match n_t");
    const uint32_t amp_special = cfg.amp_alphabet() - 1;
    const uint32_t ang_special = cfg.ang_alphabet() - 1;
    int special = -1;
    for (int i = 0; i < cfg.n_t; ++i) {
        if (f.amp[i] > amp_special || f.ang[i] > ang_special)
            throw MalformedFrameError("symbol outside alphabet");
        bool sa = f.amp[i] == amp_special, sg = f.ang[i] == ang_special;
        if (sa != sg)
            throw MalformedFrameError("special symbol on only one axis");
        if (sa) {
            if (special >= 0)
                throw MalformedFrameError("multiple special components");
            special = i;
        }
    }
    if (special < 0)
        throw MalformedFrameError("no special component");
    Eigen::VectorXcd out(cfg.n_t);
    for (int i = 0; i < cfg.n_t; ++i) {
        if (i == special) {
            out[i] = 1.0;
            continue;
        }
        double a = amp_mid[f.amp[i]];
        double ph = 2.0 * M_PI * ang_mid[f.ang[i]];
        out[i] = std::polar(a, ph);
    }
    return out;
}

} // namespace

Eigen::VectorXcd dequantize_frame(const QuantizerConfig& cfg, const QuantizedFrame& f) {
    validate(cfg);
    return dequantize_with(cfg, f,
                           reconstruction_levels(cfg.amp, cfg.amp_levels),
                           reconstruction_levels(cfg.ang, cfg.ang_levels));
}

std::vector<QuantizedFrame> quantize_sequence(const QuantizerConfig& cfg,
                                              const Eigen::MatrixXcd& frames) {
    validate(cfg);
    std::vector<QuantizedFrame> out;
    out.reserve(frames.cols());
    for (Eigen::Index t = 0; t < frames.cols(); ++t)
        out.push_back(quantize_frame(cfg, frames.col(t)));
    return out;
}

Eigen::MatrixXcd dequantize_sequence(const QuantizerConfig& cfg,
                                     const std::vector<QuantizedFrame>& frames) {
    validate(cfg);
    auto amp_mid = reconstruction_levels(cfg.amp, cfg.amp_levels);
    auto ang_mid = reconstruction_levels(cfg.ang, cfg.ang_levels);
    Eigen::MatrixXcd out(cfg.n_t, static_cast<Eigen::Index>(frames.size()));
    for (size_t t = 0; t < frames.size(); ++t)
        out.col(static_cast<Eigen::Index>(t)) = dequantize_with(cfg, frames[t], amp_mid, ang_mid);
    return out;
}

double mscd(const Eigen::MatrixXcd& ref, const Eigen::MatrixXcd& rec) {
    if (ref.rows() != rec.rows() || ref.cols() != rec.cols())
        throw std::invalid_argument("shape mismatch");
    if (ref.cols() == 0)
        throw std::invalid_argument("no frames");
    double acc = 0.0;
    for (Eigen::Index t = 0; t < ref.cols(); ++t) {
        double nx = ref.col(t).squaredNorm();
        double ny = rec.col(t).squaredNorm();
        if (nx <= 0.0 || ny <= 0.0)
            throw ZeroVectorError("zero-norm frame in distortion computation");
        double ip = std::norm(ref.col(t).dot(rec.col(t)));
        acc += ip / (nx * ny);
    }
    return 1.0 - acc / static_cast<double>(ref.cols());
}

std::pair<int, int> split_levels(int total_levels, double ang_energy, double ratio) {
    if (total_levels < 4 || (total_levels & (total_levels - 1)) != 0)
        throw std::invalid_argument("total levels must be a power of two >= 4");
    if (!(ang_energy > 0.0) || !(ratio > 0.0))
        throw std::invalid_argument("energy and ratio must be positive");
    int bits = 0;
    while ((1 << (bits + 1)) <= total_levels) ++bits;
    double target = std::log2(std::sqrt(ang_energy) * ratio);
    int best_abs_bits = 1;
    double best_err = std::numeric_limits<double>::infinity();
    for (int ab = 1; ab <= bits - 1; ++ab) {
        double err = std::fabs((bits - 2.0 * ab) - target);
        if (err < best_err) { best_err = err; best_abs_bits = ab; }
    }
    return {1 << best_abs_bits, total_levels >> best_abs_bits};
}

} // namespace ctq
