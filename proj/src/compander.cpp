#include "ctq/compander.hpp"
#include "ctq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ctq {

namespace {

constexpr double kDomainTol = 1e-12;
constexpr double kSampleClamp = 1e-9;

double checked_unit(double v, const char* what) {
    if (v < -kDomainTol || v > 1.0 + kDomainTol)
        throw std::domain_error(std::string(what) + " outside [0,1]");
    return std::clamp(v, 0.0, 1.0);
}

// Continued fraction for the regularized incomplete beta function.
double betacf(double a, double b, double x) {
    const int max_it = 400;
    const double eps = 1e-16, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_it; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NonConvergenceError("incomplete beta continued fraction stalled");
}

double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double lnbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
                + a * std::log(x) + b * std::log1p(-x);
    double bt = std::exp(lnbt);
    // Symmetry switch keeps the continued fraction in its convergent region.
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double digamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r -= 1.0 / x;
        x += 1.0;
    }
    double inv = 1.0 / x, inv2 = inv * inv;
    return r + std::log(x) - 0.5 * inv
         - inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 / 252));
}

double trigamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r += 1.0 / (x * x);
        x += 1.0;
    }
    double inv = 1.0 / x, inv2 = inv * inv;
    return r + inv * (1.0 + inv * (0.5 + inv * (1.0 / 6 - inv2 * (1.0 / 30 - inv2 / 42))));
}

Eigen::ArrayXd clamped(const Eigen::ArrayXd& samples) {
    return samples.min(1.0 - kSampleClamp).max(kSampleClamp);
}

double mu_objective(double mu, const Eigen::ArrayXd& x) {
    return std::log(mu) - std::log(std::log1p(mu)) - (1.0 + mu * x).log().mean();
}

double beta_objective(double a, double b, double s_lx, double s_l1mx) {
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
         + (a - 1.0) * s_lx + (b - 1.0) * s_l1mx;
}

CompanderParams fit_mu(const Eigen::ArrayXd& x, const FitConfig& cfg) {
    // Coarse log-spaced scan to bracket the peak, then golden section.
    const int scan = 96;
    double tlo = std::log(cfg.mu_min), thi = std::log(cfg.mu_max);
    int best = 0;
    double best_f = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < scan; ++i) {
        double t = tlo + (thi - tlo) * i / (scan - 1);
        double f = mu_objective(std::exp(t), x);
        if (f > best_f) { best_f = f; best = i; }
    }
    double a = tlo + (thi - tlo) * std::max(best - 1, 0) / (scan - 1);
    double b = tlo + (thi - tlo) * std::min(best + 1, scan - 1) / (scan - 1);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = mu_objective(std::exp(c), x), fd = mu_objective(std::exp(d), x);
    for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = mu_objective(std::exp(c), x);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = mu_objective(std::exp(d), x);
        }
    }
    return CompanderParams::mu_law(std::exp(0.5 * (a + b)));
}

CompanderParams fit_beta(const Eigen::ArrayXd& x, const FitConfig& cfg) {
    double s_lx = x.log().mean();
    double s_l1mx = (1.0 - x).log().mean();

    // Method-of-moments start, clamped into the box.
    double mean = x.mean();
    double var = (x - mean).square().mean();
    double a, b;
    if (var > 1e-12 && mean * (1.0 - mean) > var) {
        double k = mean * (1.0 - mean) / var - 1.0;
        a = mean * k;
        b = (1.0 - mean) * k;
    } else {
        a = b = 1.0;
    }
    a = std::clamp(a, cfg.ab_min, cfg.ab_max);
    b = std::clamp(b, cfg.ab_min, cfg.ab_max);

    double f = beta_objective(a, b, s_lx, s_l1mx);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        double dab = digamma(a + b);
        double ga = dab - digamma(a) + s_lx;
        double gb = dab - digamma(b) + s_l1mx;
        bool a_lo = a <= cfg.ab_min && ga < 0, a_hi = a >= cfg.ab_max && ga > 0;
        bool b_lo = b <= cfg.ab_min && gb < 0, b_hi = b >= cfg.ab_max && gb > 0;
        double ga_eff = (a_lo || a_hi) ? 0.0 : ga;
        double gb_eff = (b_lo || b_hi) ? 0.0 : gb;
        if (std::max(std::fabs(ga_eff), std::fabs(gb_eff)) <= cfg.gradient_tolerance)
            return CompanderParams::beta_law(a, b);

        double tab = trigamma(a + b);
        double haa = tab - trigamma(a);   // negative definite Hessian
        double hbb = tab - trigamma(b);
        double det = haa * hbb - tab * tab;
        double da, db;
        if (det > 0) {
            da = -(hbb * ga - tab * gb) / det;
            db = -(haa * gb - tab * ga) / det;
        } else {
            da = ga; db = gb;   // fall back to plain ascent
        }
        double step = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            double na = std::clamp(a + step * da, cfg.ab_min, cfg.ab_max);
            double nb = std::clamp(b + step * db, cfg.ab_min, cfg.ab_max);
            double nf = beta_objective(na, nb, s_lx, s_l1mx);
            if (nf >= f) {
                a = na; b = nb; f = nf;
                break;
            }
            step *= 0.5;
        }
    }
    throw NonConvergenceError("beta fit did not reach gradient tolerance");
}

} // namespace

void validate(const CompanderParams& p) {
    switch (p.family) {
    case CompanderFamily::Identity:
        return;
    case CompanderFamily::MuLaw:
        if (!(p.mu > 0.0) || !std::isfinite(p.mu))
            throw std::invalid_argument("mu must be positive");
        return;
    case CompanderFamily::BetaLaw:
        if (!(p.alpha > 0.0) || !(p.beta > 0.0)
            || !std::isfinite(p.alpha) || !std::isfinite(p.beta))
            throw std::invalid_argument("alpha and beta must be positive");
        return;
    }
    throw std::invalid_argument("unknown compander family");
}

double compress_value(const CompanderParams& p, double x) {
    validate(p);
    x = checked_unit(x, "compress input");
    switch (p.family) {
    case CompanderFamily::Identity:
        return x;
    case CompanderFamily::MuLaw:
        return std::log1p(p.mu * x) / std::log1p(p.mu);
    case CompanderFamily::BetaLaw:
        return reg_inc_beta(p.alpha, p.beta, x);
    }
    return x;
}

double expand_value(const CompanderParams& p, double y) {
    validate(p);
    y = checked_unit(y, "expand input");
    switch (p.family) {
    case CompanderFamily::Identity:
        return y;
    case CompanderFamily::MuLaw:
        return std::expm1(y * std::log1p(p.mu)) / p.mu;
    case CompanderFamily::BetaLaw: {
        if (y <= 0.0) return 0.0;
        if (y >= 1.0) return 1.0;
        // Invert on the thin side: for y > 1/2 solve the mirrored cdf at 1-y,
        // which keeps relative precision where the density vanishes. Stop on
        // both residual and interval width: a small residual alone can leave
        // a large pre-image error in flat regions.
        const bool flip = y > 0.5;
        const double a = flip ? p.beta : p.alpha;
        const double b = flip ? p.alpha : p.beta;
        const double target = flip ? 1.0 - y : y;
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 300; ++it) {
            double mid = 0.5 * (lo + hi);
            double g = reg_inc_beta(a, b, mid);
            if (std::fabs(g - target) <= 1e-10 && hi - lo <= 1e-12)
                return flip ? 1.0 - mid : mid;
            if (g < target) lo = mid; else hi = mid;
            if (hi - lo < 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, mid)) {
                double v = 0.5 * (lo + hi);
                return flip ? 1.0 - v : v;
            }
        }
        throw NonConvergenceError("beta expand bisection stalled");
    }
    }
    return y;
}

double log_density(const CompanderParams& p, double x) {
    validate(p);
    x = checked_unit(x, "density input");
    const double inf = std::numeric_limits<double>::infinity();
    switch (p.family) {
    case CompanderFamily::Identity:
        return 0.0;
    case CompanderFamily::MuLaw:
        return std::log(p.mu) - std::log1p(p.mu * x) - std::log(std::log1p(p.mu));
    case CompanderFamily::BetaLaw: {
        if ((x == 0.0 && p.alpha < 1.0) || (x == 1.0 && p.beta < 1.0))
            throw std::domain_error("density unbounded at this endpoint");
        double c = std::lgamma(p.alpha + p.beta) - std::lgamma(p.alpha) - std::lgamma(p.beta);
        double tx = x == 0.0 ? (p.alpha == 1.0 ? 0.0 : -inf) : (p.alpha - 1.0) * std::log(x);
        double t1mx =
            x == 1.0 ? (p.beta == 1.0 ? 0.0 : -inf) : (p.beta - 1.0) * std::log1p(-x);
        return c + tx + t1mx;
    }
    }
    return 0.0;
}

CompanderParams fit_compander(CompanderFamily family, const Eigen::ArrayXd& samples,
                              const FitConfig& cfg) {
    if (samples.size() < 2)
        throw DegenerateSampleError("need at least two samples");
    Eigen::ArrayXd x = clamped(samples);
    if (x.maxCoeff() - x.minCoeff() <= 0.0)
        throw DegenerateSampleError("all samples identical after clamping");

    switch (family) {
    case CompanderFamily::Identity:
        return CompanderParams::identity();
    case CompanderFamily::MuLaw:
        return fit_mu(x, cfg);
    case CompanderFamily::BetaLaw:
        return fit_beta(x, cfg);
    }
    throw std::invalid_argument("unknown compander family");
}

double fit_objective(const CompanderParams& p, const Eigen::ArrayXd& samples) {
    Eigen::ArrayXd x = clamped(samples);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        acc += log_density(p, x[i]);
    return acc / static_cast<double>(x.size());
}

CompanderParams adjust_compander(const CompanderParams& p, const Eigen::ArrayXd& samples,
                                 int levels) {
    validate(p);
    if (levels < 2)
        throw std::invalid_argument("need at least two levels");
    Eigen::ArrayXd x = clamped(samples);
    CompanderParams cur = p;
    for (int it = 0; it < 200; ++it) {
        std::vector<double> edge(levels + 1);
        for (int i = 0; i <= levels; ++i)
            edge[i] = expand_value(cur, static_cast<double>(i) / levels);
        std::vector<long> count(levels, 0);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            int s = static_cast<int>(levels * compress_value(cur, x[i]));
            count[std::clamp(s, 0, levels - 1)]++;
        }
        int small = 0, large = 0;
        for (int i = 1; i < levels; ++i) {
            double len = edge[i + 1] - edge[i];
            if (len < edge[small + 1] - edge[small]) small = i;
            if (len > edge[large + 1] - edge[large]) large = i;
        }
        double ds = edge[small + 1] - edge[small];
        double dl = edge[large + 1] - edge[large];
        if (count[small] * ds * ds >= count[large] * dl * dl)
            return cur;
        switch (cur.family) {
        case CompanderFamily::Identity:
            return cur;
        case CompanderFamily::MuLaw:
            cur.mu *= 0.9;
            break;
        case CompanderFamily::BetaLaw:
            cur.alpha = 1.0 + 0.9 * (cur.alpha - 1.0);
            cur.beta = 1.0 + 0.9 * (cur.beta - 1.0);
            break;
        }
    }
    return cur;
}

std::string serialize_compander(const CompanderParams& p) {
    validate(p);
    char buf[160];
    switch (p.family) {
    case CompanderFamily::Identity:
        return "family=identity";
    case CompanderFamily::MuLaw:
        std::snprintf(buf, sizeof buf, "family=mu mu=%.17g", p.mu);
        return buf;
    case CompanderFamily::BetaLaw:
        std::snprintf(buf, sizeof buf, "family=beta alpha=%.17g beta=%.17g", p.alpha, p.beta);
        return buf;
    }
    return "family=identity";
}

CompanderParams parse_compander(const std::string& record) {
    std::istringstream in(record);
    std::string tok, family;
    double mu = 0, alpha = 0, beta = 0;
    bool has_mu = false, has_a = false, has_b = false;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw FormatError("bad compander record token: " + tok);
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "family") family = val;
        else if (key == "mu") { mu = std::stod(val); has_mu = true; }
        else if (key == "alpha") { alpha = std::stod(val); has_a = true; }
        else if (key == "beta") { beta = std::stod(val); has_b = true; }
        else throw FormatError("unknown compander record key: " + key);
    }
    if (family == "identity") return CompanderParams::identity();
    if (family == "mu") {
        if (!has_mu) throw FormatError("mu record missing mu=");
        return CompanderParams::mu_law(mu);
    }
    if (family == "beta") {
        if (!has_a || !has_b) throw FormatError("beta record missing parameters");
        return CompanderParams::beta_law(alpha, beta);
    }
    throw FormatError("unknown compander family: " + family);
}

} // namespace ctq
