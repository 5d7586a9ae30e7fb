// Acceptance gate: ten checks, one line of output each, nonzero exit if any
// fails. Reference values are computed independently inside this binary.
#include "ctq/channel_sim.hpp"
#include "ctq/codec.hpp"
#include "ctq/compander.hpp"
#include "ctq/context_tree.hpp"
#include "ctq/multistream.hpp"
#include "ctq/pipeline.hpp"
#include "ctq/quantizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace ctq;

namespace {

constexpr double kLn2 = 0.69314718055994530941723212145818;

int g_failures = 0;

void report(int idx, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", idx, detail.c_str());
    if (!pass) ++g_failures;
}

void guarded(int idx, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [pass, detail] = body();
        report(idx, pass, detail);
    } catch (const std::exception& e) {
        report(idx, false, std::string("unexpected exception: ") + e.what());
    }
}

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---- independent model-class oracle (binary alphabet, depth 2) ----

using RefModel = std::vector<Context>;

std::vector<RefModel> five_binary_models() {
    return {
        {{}},
        {{0}, {1}},
        {{0, 0}, {0, 1}, {1}},
        {{0}, {1, 0}, {1, 1}},
        {{0, 0}, {0, 1}, {1, 0}, {1, 1}},
    };
}

double ref_kt(const std::vector<double>& counts) {
    double m = static_cast<double>(counts.size());
    double total = 0.0;
    double acc = 0.0;
    for (double c : counts) {
        acc += std::lgamma(c + 0.5) - std::lgamma(0.5);
        total += c;
    }
    acc -= std::lgamma(m / 2.0 + total) - std::lgamma(m / 2.0);
    return acc / kLn2;
}

double ref_prior(const RefModel& model, uint32_t m, int depth, double gamma) {
    double leaves = static_cast<double>(model.size());
    double at_full = 0.0;
    for (const auto& l : model)
        if (static_cast<int>(l.size()) == depth) at_full += 1.0;
    return (leaves - 1.0) / (m - 1.0) * std::log2(1.0 - gamma) +
           (leaves - at_full) * std::log2(gamma);
}

double ref_model_score(const RefModel& model, const std::vector<Symbol>& seq, uint32_t m,
                       int depth, double gamma) {
    std::map<Context, std::vector<double>> counts;
    for (const auto& l : model) counts[l].assign(m, 0.0);
    for (size_t t = 0; t < seq.size(); ++t) {
        Context ctx;
        for (int k = 1; k <= depth; ++k)
            ctx.push_back(t >= static_cast<size_t>(k) ? seq[t - static_cast<size_t>(k)] : 0);
        for (const auto& l : model) {
            if (std::equal(l.begin(), l.end(), ctx.begin())) {
                counts[l][seq[t]] += 1.0;
                break;
            }
        }
    }
    double score = ref_prior(model, m, depth, gamma);
    for (const auto& [leaf, c] : counts) score += ref_kt(c);
    return score;
}

ContextTree drive(const std::vector<Symbol>& seq, uint32_t m, int depth, double gamma) {
    ContextTree tree(m, depth, gamma);
    for (Symbol s : seq) tree.observe(s);
    return tree;
}

std::vector<Symbol> random_bits(std::mt19937& rng, size_t max_len) {
    std::uniform_int_distribution<size_t> len(1, max_len);
    std::uniform_int_distribution<int> bit(0, 1);
    std::vector<Symbol> seq(len(rng));
    for (auto& s : seq) s = static_cast<Symbol>(bit(rng));
    return seq;
}

// ---- criteria ----

std::pair<bool, std::string> lemma_pair(bool maximizing) {
    Stopwatch clock;
    std::mt19937 rng(maximizing ? 54321 : 12345);
    double worst = 0.0;
    for (double gamma : {0.3, 0.5, 0.7}) {
        for (int trial = 0; trial < 200; ++trial) {
            auto seq = random_bits(rng, 12);
            auto tree = drive(seq, 2, 2, gamma);
            double best = -1e300;
            double mix = 0.0;
            for (const auto& model : five_binary_models()) {
                double s = ref_model_score(model, seq, 2, 2, gamma);
                best = std::max(best, s);
                mix += std::exp2(s);
            }
            double err;
            if (maximizing) {
                err = std::abs(tree.ctm_log_prob() - best);
                Model map = tree.map_model();
                RefModel as_ref(map.leaves.begin(), map.leaves.end());
                err = std::max(err,
                               std::abs(ref_model_score(as_ref, seq, 2, 2, gamma) - best));
            } else {
                err = std::abs(tree.ctw_log_prob() - std::log2(mix));
            }
            worst = std::max(worst, err);
        }
    }
    double secs = clock.seconds();
    bool pass = worst <= 1e-9 && secs < 5.0;
    const char* what = maximizing ? "maximized probability and pruning match brute force"
                                  : "weighted probability matches brute force";
    return {pass, fmt("%s over 600 runs (max err %.2e <= 1e-9, %.2fs < 5s)", what, worst,
                      secs)};
}

std::pair<bool, std::string> criterion_normalization() {
    double worst = 0.0;
    for (size_t n = 1; n <= 3; ++n) {
        double acc = 0.0;
        for (uint32_t word = 0; word < (1u << n); ++word) {
            std::vector<Symbol> seq(n);
            for (size_t i = 0; i < n; ++i) seq[i] = (word >> i) & 1u;
            acc += std::exp2(drive(seq, 2, 2, 0.5).ctw_log_prob());
        }
        worst = std::max(worst, std::abs(acc - 1.0));
    }
    return {worst <= 1e-9,
            fmt("sequence probabilities normalize for n=1..3 (max |sum-1| %.2e <= 1e-9)",
                worst)};
}

std::pair<bool, std::string> criterion_map_recovery() {
    Stopwatch clock;
    Model expected;
    expected.leaves = {{0}, {1}, {2, 0}, {2, 1}, {2, 2}};

    // Conditional laws per leaf, chosen well apart.
    auto theta = [](const Context& leaf) -> std::array<double, 3> {
        if (leaf == Context{0}) return {0.7, 0.2, 0.1};
        if (leaf == Context{1}) return {0.1, 0.7, 0.2};
        if (leaf == Context{2, 0}) return {0.2, 0.1, 0.7};
        if (leaf == Context{2, 1}) return {0.6, 0.3, 0.1};
        return {0.1, 0.3, 0.6};
    };

    int hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::mt19937 rng(9000 + trial);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ContextTree tree(3, 2, 0.5);
        Symbol prev = 0, prev2 = 0;
        for (int t = 0; t < 10000; ++t) {
            Context leaf = (prev == 2) ? Context{2, prev2} : Context{prev};
            auto p = theta(leaf);
            double x = u(rng);
            Symbol s = x < p[0] ? 0 : (x < p[0] + p[1] ? 1 : 2);
            tree.observe(s);
            prev2 = prev;
            prev = s;
        }
        hits += tree.map_model() == expected;
    }
    double secs = clock.seconds();
    bool pass = hits >= 95 && secs < 60.0;
    return {pass, fmt("pruning recovers the planted 5-leaf ternary model in %d/100 trials "
                      "(>= 95, %.1fs < 60s)",
                      hits, secs)};
}

std::pair<bool, std::string> criterion_lossless_sync() {
    for (FallbackPolicy policy : {FallbackPolicy::Reproject, FallbackPolicy::Skip}) {
        CodecConfig cfg;
        cfg.alphabet = 4;
        cfg.depth = 2;
        cfg.q1 = 1;
        cfg.q2 = 1;   // 2^1 + 2^1 = alphabet: every symbol stays in-list
        cfg.m3 = 2;
        cfg.fallback_update = policy;
        SymbolCodec enc(cfg), dec(cfg), replica(cfg);

        std::mt19937 rng(31 + static_cast<int>(policy));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::uniform_int_distribution<int> jump(1, 3);
        std::vector<Symbol> input(10000);
        Symbol state = 0;
        for (auto& s : input) {
            if (u(rng) >= 0.7) state = static_cast<Symbol>((state + jump(rng)) % 4);
            s = state;
        }

        BitWriter out;
        for (Symbol s : input) {
            auto r = enc.encode(s, out);
            if (r.branch == 2) return {false, "fallback branch reached in lossless regime"};
            if (r.written != s) return {false, "lossless encode altered a symbol"};
        }
        BitReader in(out.bytes().data(), out.bit_count());
        BitWriter scratch;
        for (size_t i = 0; i < input.size(); ++i) {
            auto d = dec.decode(in);
            if (d.symbol != input[i])
                return {false, fmt("round trip mismatch at symbol %zu", i)};
            replica.encode(input[i], scratch);
            if (replica.snapshot() != dec.snapshot())
                return {false, fmt("tree snapshots diverged at symbol %zu", i)};
        }
        if (in.remaining() != 0) return {false, "decoder left bits unread"};
    }
    return {true, "lossless round trip of 10^4 symbols with per-symbol snapshot equality "
                  "under both fallback policies"};
}

std::pair<bool, std::string> criterion_entropy_rate() {
    Stopwatch clock;
    const double p = 0.9;
    const double entropy = -(p * std::log2(p) + (1 - p) * std::log2(1 - p));
    std::mt19937 rng(606);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ContextTree tree(2, 2, 0.5);
    Symbol s = 0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
        if (u(rng) >= p) s ^= 1u;
        tree.observe(s);
    }
    double rate = static_cast<double>(ctw_ideal_code_length(tree)) / n;
    double gap = std::abs(rate - entropy);
    double secs = clock.seconds();
    bool pass = gap <= 0.03 && secs < 30.0;
    return {pass, fmt("ideal code rate %.4f vs source entropy %.4f bits "
                      "(|diff| %.4f <= 0.03, %.1fs < 30s)",
                      rate, entropy, gap, secs)};
}

std::pair<bool, std::string> criterion_compander_fit() {
    std::mt19937 rng(77);
    std::gamma_distribution<double> ga(2.0, 1.0), gb(5.0, 1.0);
    Eigen::ArrayXd samples(100000);
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        double a = ga(rng), b = gb(rng);
        samples[i] = a / (a + b);
    }
    CompanderParams fit = fit_compander(CompanderFamily::BetaLaw, samples, {});

    double grid_best = -1e300;
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
            double a = 0.5 * std::pow(40.0, i / 49.0);
            double b = 0.5 * std::pow(40.0, j / 49.0);
            grid_best = std::max(
                grid_best, fit_objective(CompanderParams::beta_law(a, b), samples));
        }
    }
    double obj = fit_objective(fit, samples);
    bool in_box = std::abs(fit.alpha - 2.0) <= 0.2 && std::abs(fit.beta - 5.0) <= 0.5;
    bool beats_grid = obj >= grid_best - 1e-6;
    return {in_box && beats_grid,
            fmt("fitted (alpha, beta) = (%.3f, %.3f) within 10%% of (2, 5); objective "
                "%.6f >= grid %.6f - 1e-6",
                fit.alpha, fit.beta, obj, grid_best)};
}

std::pair<bool, std::string> criterion_quantizer() {
    FadingConfig fc;
    fc.n_t = 4;
    fc.n_frames = 1000;
    fc.doppler_hz = 30.0;
    fc.seed = 1717;
    Eigen::MatrixXcd frames = generate_fading(fc);

    double prev = 2.0;
    std::string trail;
    for (int size : {4, 16, 64, 256}) {
        auto [m_abs, m_ang] = split_levels(size);
        QuantizerConfig qc;
        qc.n_t = 4;
        qc.amp_levels = m_abs;
        qc.ang_levels = m_ang;
        double d = mscd(frames, dequantize_sequence(qc, quantize_sequence(qc, frames)));
        if (d > prev + 1e-3)
            return {false, fmt("distortion rose from %.5f to %.5f at size %d", prev, d, size)};
        prev = d;
        trail += fmt("%s%.4f", trail.empty() ? "" : " -> ", d);
    }

    std::complex<double> rot = std::polar(1.0, 1.234);
    double invariance = std::abs(mscd(frames, frames * rot));
    if (invariance > 1e-12)
        return {false, fmt("rotation changed the distortion by %.2e", invariance)};
    return {true, fmt("distortion falls with codebook size (%s, tol 1e-3) and a global "
                      "rotation moves it by %.1e <= 1e-12",
                      trail.c_str(), invariance)};
}

std::pair<bool, std::string> criterion_desk_scale() {
    Stopwatch clock;
    FadingConfig fc;
    fc.n_t = 4;
    fc.n_frames = 10000;
    fc.doppler_hz = 5.0;
    fc.sample_period_s = 1e-3;
    fc.rho = 0.9;
    fc.seed = 2025;
    Eigen::MatrixXcd frames = generate_fading(fc);

    EvalConfig cfg;
    cfg.codebook_sizes = {64};
    cfg.family = CompanderFamily::BetaLaw;
    cfg.adjust = true;
    cfg.training_fraction = 0.2;
    cfg.depth = 2;
    cfg.gamma = 0.5;
    cfg.q = 5;   // 2^5 covers both alphabets at M=64: equal-distortion regime
    cfg.m3 = 4;
    auto rows = evaluate_sweep(frames, cfg);

    const EvalPoint *unc = nullptr, *ct = nullptr, *ctw = nullptr;
    for (const auto& r : rows) {
        if (r.strategy == "uncompressed") unc = &r;
        if (r.strategy == "ctm_ct_indicator") ct = &r;
        if (r.strategy == "ctw_ideal") ctw = &r;
    }
    if (!unc || !ct || !ctw) return {false, "sweep rows missing"};

    double saving = 1.0 - ct->bits_per_antenna / unc->bits_per_antenna;
    double mscd_gap = std::abs(ct->mscd - unc->mscd);
    double secs = clock.seconds();
    bool pass = saving >= 0.20 && mscd_gap <= 1e-12 &&
                ctw->bits_per_antenna <= ct->bits_per_antenna + 2.0 && secs < 300.0;
    return {pass,
            fmt("indicator coding spends %.2f vs %.2f uncompressed bits/antenna "
                "(%.0f%% saved >= 20%%) at equal distortion (gap %.1e), ideal mixture "
                "rate %.2f <= %.2f + 2 (%.0fs < 300s)",
                ct->bits_per_antenna, unc->bits_per_antenna, 100.0 * saving, mscd_gap,
                ctw->bits_per_antenna, ct->bits_per_antenna, secs)};
}

std::pair<bool, std::string> criterion_rate_accounting() {
    std::mt19937 rng(404);
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_int_distribution<uint32_t> sym(0, 7);
    for (Strategy s : {Strategy::Individual, Strategy::SimpleJoint, Strategy::CtIndicator}) {
        QuantizerConfig qc;
        qc.n_t = 3;
        qc.amp_levels = 8;
        qc.ang_levels = 8;
        JointConfig jc;
        jc.strategy = s;
        jc.q_abs = 2;
        jc.q_ang = 2;
        StreamBundle bundle(qc, jc);
        BitWriter out;
        for (int i = 0; i < 1000; ++i) {
            QuantizedFrame f;
            f.strongest = pick(rng);
            f.amp.assign(3, 0);
            f.ang.assign(3, 0);
            for (int a = 0; a < 3; ++a) {
                f.amp[a] = (a == f.strongest) ? 8 : sym(rng);
                f.ang[a] = (a == f.strongest) ? 8 : sym(rng);
            }
            bundle.encode_timestep(f, out);
        }
        const RateReport& r = bundle.report();
        uint64_t per_step = 0;
        for (const auto& t : r.per_timestep) per_step += t.total();
        if (out.bit_count() != r.total_bits() || per_step != r.total_bits())
            return {false, fmt("strategy %d: stream has %zu bits but the report says %llu",
                               static_cast<int>(s), out.bit_count(),
                               static_cast<unsigned long long>(r.total_bits()))};
    }
    return {true, "emitted bits equal the rate report for all three strategies on 10^3 "
                  "random frames"};
}

} // namespace

int main() {
    guarded(1, [] { return lemma_pair(false); });
    guarded(2, [] { return lemma_pair(true); });
    guarded(3, criterion_normalization);
    guarded(4, criterion_map_recovery);
    guarded(5, criterion_lossless_sync);
    guarded(6, criterion_entropy_rate);
    guarded(7, criterion_compander_fit);
    guarded(8, criterion_quantizer);
    guarded(9, criterion_desk_scale);
    guarded(10, criterion_rate_accounting);
    if (g_failures) std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
