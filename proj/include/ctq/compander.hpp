#pragma once

#include <Eigen/Core>
#include <string>

namespace ctq {

// Monotone warps of [0,1] used to shape quantizer level densities.
// MuLaw:   g(x) = ln(1 + mu*x) / ln(1 + mu)
// BetaLaw: g(x) = regularized incomplete beta I_x(alpha, beta)
enum class CompanderFamily { Identity, MuLaw, BetaLaw };

struct CompanderParams {
    CompanderFamily family = CompanderFamily::Identity;
    double mu = 1.0;
    double alpha = 1.0;
    double beta = 1.0;

    static CompanderParams identity() { return {}; }
    static CompanderParams mu_law(double mu) {
        return {CompanderFamily::MuLaw, mu, 1.0, 1.0};
    }
    static CompanderParams beta_law(double alpha, double beta) {
        return {CompanderFamily::BetaLaw, 1.0, alpha, beta};
    }
};

void validate(const CompanderParams& p);  // positive parameters

// x and y live in [0,1]; inputs beyond a 1e-12 tolerance throw std::domain_error.
double compress_value(const CompanderParams& p, double x);
double expand_value(const CompanderParams& p, double y);

// Natural log of the matched density g'(x). Infinite at endpoints where the
// density diverges or vanishes.
double log_density(const CompanderParams& p, double x);

struct FitConfig {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;
    double mu_min = 1e-2;    // parameter box, strictly positive
    double mu_max = 1e5;
    double ab_min = 0.1;     // shared box for alpha and beta
    double ab_max = 50.0;
    bool adjustment_enabled = false;
};

// Maximum-likelihood fit of the chosen family on samples clamped to
// [1e-9, 1-1e-9]. MuLaw uses bracketed golden-section search, BetaLaw damped
// Newton ascent on the concave log-likelihood.
CompanderParams fit_compander(CompanderFamily family, const Eigen::ArrayXd& samples,
                              const FitConfig& cfg = {});

// Mean log-density of the samples under p (the fit objective), after clamping.
double fit_objective(const CompanderParams& p, const Eigen::ArrayXd& samples);

// Shrinks parameters toward the identity (mu *= 0.9, (alpha,beta) stepped
// toward (1,1)) until the smallest pre-image cell is no longer starved:
// N_small * len_small^2 >= N_large * len_large^2 over `levels` cells.
CompanderParams adjust_compander(const CompanderParams& p, const Eigen::ArrayXd& samples,
                                 int levels);

// Text records, round-trip exact:
//   family=identity
//   family=mu mu=<value>
//   family=beta alpha=<value> beta=<value>
std::string serialize_compander(const CompanderParams& p);
CompanderParams parse_compander(const std::string& record);

} // namespace ctq
