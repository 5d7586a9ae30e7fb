#include "ctq/channel_sim.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

namespace ctq {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

void validate(const FadingConfig& cfg) {
    if (cfg.n_t < 1)
        throw std::invalid_argument("fading: antenna count must be positive");
    if (cfg.n_frames < 1)
        throw std::invalid_argument("fading: frame count must be positive");
    if (cfg.doppler_hz < 0.0)
        throw std::invalid_argument("fading: Doppler frequency must be non-negative");
    if (!(cfg.sample_period_s > 0.0))
        throw std::invalid_argument("fading: sample period must be positive");
    if (!(cfg.rho >= 0.0 && cfg.rho < 1.0))
        throw std::invalid_argument("fading: rho must lie in [0,1)");
    if (cfg.n_sinusoids < 8)
        throw std::invalid_argument("fading: at least 8 sinusoids required");
    if (cfg.correlation.size() != 0 &&
        (cfg.correlation.rows() != cfg.n_t || cfg.correlation.cols() != cfg.n_t))
        throw std::invalid_argument("fading: correlation matrix must be n_t x n_t");
}

Eigen::MatrixXcd mixing_root(const FadingConfig& cfg) {
    Eigen::MatrixXcd r;
    if (cfg.correlation.size() != 0) {
        r = cfg.correlation;
        if (!r.isApprox(r.adjoint(), 1e-12))
            throw std::invalid_argument("fading: correlation matrix must be Hermitian");
    } else {
        r.resize(cfg.n_t, cfg.n_t);
        for (int i = 0; i < cfg.n_t; ++i)
            for (int j = 0; j < cfg.n_t; ++j)
                r(i, j) = std::pow(cfg.rho, std::abs(i - j));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("fading: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-9)
            throw std::invalid_argument("fading: correlation matrix must be positive semidefinite");
        ev[i] = std::max(ev[i], 0.0);
    }
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

Eigen::MatrixXcd generate_fading(const FadingConfig& cfg) {
    validate(cfg);
    const int n = cfg.n_sinusoids;
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    Eigen::MatrixXcd h(cfg.n_t, cfg.n_frames);

    uint64_t seq = cfg.seed;
    for (int a = 0; a < cfg.n_t; ++a) {
        std::mt19937_64 rng(splitmix64(seq));
        std::uniform_real_distribution<double> u(0.0, kTwoPi);
        const double theta = u(rng);
        std::vector<double> freq(static_cast<size_t>(n));
        std::vector<double> phase(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            const double alpha = kTwoPi * (k + 0.5) / n + theta;
            freq[static_cast<size_t>(k)] = kTwoPi * cfg.doppler_hz * std::cos(alpha) *
                                           cfg.sample_period_s;
            phase[static_cast<size_t>(k)] = u(rng);
        }
        for (Eigen::Index t = 0; t < cfg.n_frames; ++t) {
            std::complex<double> acc(0.0, 0.0);
            for (int k = 0; k < n; ++k) {
                const double arg = freq[static_cast<size_t>(k)] * static_cast<double>(t) +
                                   phase[static_cast<size_t>(k)];
                acc += std::complex<double>(std::cos(arg), std::sin(arg));
            }
            h(a, t) = amp * acc;
        }
    }

    if (cfg.correlation.size() != 0 || cfg.rho > 0.0)
        h = mixing_root(cfg) * h;

    for (int a = 0; a < cfg.n_t; ++a) {
        const double p = h.row(a).squaredNorm() / static_cast<double>(cfg.n_frames);
        if (p > 0.0) h.row(a) /= std::sqrt(p);
    }
    return h;
}

Eigen::MatrixXcd add_noise(const Eigen::MatrixXcd& frames, double snr_db, uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0.0) return frames;
    if (!std::isfinite(snr_db))
        throw std::invalid_argument("noise: SNR must be finite or +infinity");
    if (frames.size() == 0) return frames;
    const double signal = frames.squaredNorm() / static_cast<double>(frames.size());
    const double var = signal / std::pow(10.0, snr_db / 10.0);
    const double scale = std::sqrt(var / 2.0);
    uint64_t seq = seed;
    std::mt19937_64 rng(splitmix64(seq));
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd out = frames;
    for (Eigen::Index c = 0; c < out.cols(); ++c)
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            out(r, c) += std::complex<double>(scale * g(rng), scale * g(rng));
    return out;
}

} // namespace ctq
