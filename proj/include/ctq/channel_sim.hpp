#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace ctq {

// Sum-of-sinusoids flat-fading generator. Arrival angles are equispaced with
// a random rotation per antenna, so the time autocorrelation converges to the
// zeroth-order Bessel function of the Doppler lag. Antennas are spatially
// mixed with the Hermitian square root of the correlation matrix and then
// rescaled to unit average power per antenna.
struct FadingConfig {
    int n_t = 1;
    Eigen::Index n_frames = 1;
    double doppler_hz = 0.0;
    double sample_period_s = 1e-3;
    double rho = 0.0;                 // exponential spatial correlation
    Eigen::MatrixXcd correlation;     // optional explicit n_t x n_t PSD matrix
    int n_sinusoids = 16;
    uint64_t seed = 0;
};

// Rows are antennas, columns are time samples.
Eigen::MatrixXcd generate_fading(const FadingConfig& cfg);

// Adds circularly symmetric complex Gaussian noise at the given SNR relative
// to the average entry power. An infinite SNR returns the input unchanged.
Eigen::MatrixXcd add_noise(const Eigen::MatrixXcd& frames, double snr_db, uint64_t seed);

} // namespace ctq
