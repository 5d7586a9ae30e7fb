#include "ctq/channel_sim.hpp"
#include "ctq/csi_io.hpp"
#include "ctq/errors.hpp"
#include "ctq/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace {

using namespace ctq;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

CompanderFamily family_from_name(const std::string& name) {
    if (name == "identity") return CompanderFamily::Identity;
    if (name == "mu") return CompanderFamily::MuLaw;
    if (name == "beta") return CompanderFamily::BetaLaw;
    throw std::invalid_argument("unknown compander family: " + name);
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "individual") return Strategy::Individual;
    if (name == "simple_joint") return Strategy::SimpleJoint;
    if (name == "ct_indicator") return Strategy::CtIndicator;
    throw std::invalid_argument("unknown strategy: " + name);
}

struct SimulateArgs {
    int nt = 4;
    long frames = 10000;
    double doppler = 5.0;
    double period = 1e-3;
    double rho = 0.0;
    double snr = std::numeric_limits<double>::infinity();
    int sinusoids = 16;
    uint64_t seed = 0;
    bool csv = false;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
    FadingConfig cfg;
    cfg.n_t = a.nt;
    cfg.n_frames = a.frames;
    cfg.doppler_hz = a.doppler;
    cfg.sample_period_s = a.period;
    cfg.rho = a.rho;
    cfg.n_sinusoids = a.sinusoids;
    cfg.seed = a.seed;
    Eigen::MatrixXcd h = generate_fading(cfg);
    if (!std::isinf(a.snr)) h = add_noise(h, a.snr, a.seed + 1);
    if (a.csv)
        write_csi_csv(a.out, h);
    else
        write_csi(a.out, h);
    std::cout << "wrote " << a.out << " n_t=" << a.nt << " frames=" << a.frames << "\n";
    return 0;
}

struct FitArgs {
    std::string input;
    std::string family = "beta";
    bool adjust = false;
    int levels = 16;
    std::string out;
};

// Normalized off-reference amplitudes and phases of every frame.
void fit_samples(const Eigen::MatrixXcd& frames, std::vector<double>& amp,
                 std::vector<double>& ang) {
    for (Eigen::Index t = 0; t < frames.cols(); ++t) {
        auto [nx, strongest] = normalize_frame(frames.col(t));
        for (Eigen::Index i = 0; i < nx.size(); ++i) {
            if (static_cast<int>(i) == strongest) continue;
            amp.push_back(std::abs(nx[i]));
            ang.push_back(phase_unit(nx[i]));
        }
    }
}

int cmd_fit(const FitArgs& a) {
    const Eigen::MatrixXcd frames = read_csi(a.input);
    std::vector<double> amp_s;
    std::vector<double> ang_s;
    fit_samples(frames, amp_s, ang_s);
    const CompanderFamily fam = family_from_name(a.family);
    CompanderParams pa = CompanderParams::identity();
    CompanderParams pg = CompanderParams::identity();
    if (fam != CompanderFamily::Identity) {
        if (amp_s.empty()) throw DegenerateSampleError("no samples to fit");
        Eigen::Map<const Eigen::ArrayXd> am(amp_s.data(),
                                            static_cast<Eigen::Index>(amp_s.size()));
        Eigen::Map<const Eigen::ArrayXd> gm(ang_s.data(),
                                            static_cast<Eigen::Index>(ang_s.size()));
        pa = fit_compander(fam, am, {});
        pg = fit_compander(fam, gm, {});
        if (a.adjust) {
            auto [m_abs, m_ang] = split_levels(a.levels);
            pa = adjust_compander(pa, am, m_abs);
            pg = adjust_compander(pg, gm, m_ang);
        }
    }
    std::ofstream f(a.out);
    if (!f) throw IoError("cannot open for writing: " + a.out);
    f << "amp: " << serialize_compander(pa) << "\n";
    f << "ang: " << serialize_compander(pg) << "\n";
    if (!f) throw IoError("write failed: " + a.out);
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

std::pair<CompanderParams, CompanderParams> read_compander_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::string amp_line;
    std::string ang_line;
    if (!std::getline(f, amp_line) || !std::getline(f, ang_line))
        throw FormatError("compander file needs an amp line and an ang line");
    if (amp_line.rfind("amp: ", 0) != 0 || ang_line.rfind("ang: ", 0) != 0)
        throw FormatError("compander file lines must start with 'amp: ' and 'ang: '");
    return {parse_compander(amp_line.substr(5)), parse_compander(ang_line.substr(5))};
}

struct CompressArgs {
    std::string input;
    std::string strategy = "ct_indicator";
    int levels = 64;
    std::string family = "beta";
    bool adjust = false;
    std::string companders;   // optional pre-fit record file
    int depth = 2;
    double gamma = 0.5;
    unsigned q = 1;
    uint32_t m3 = 4;
    uint64_t update_interval = 100;
    double training_fraction = 0.2;
    std::string policy = "reproject";
    double decay_factor = 1.0;
    uint64_t decay_interval = 0;
    std::string out;
};

int cmd_compress(const CompressArgs& a) {
    const Strategy strategy = strategy_from_name(a.strategy);
    const CompanderFamily fam = family_from_name(a.family);
    FallbackPolicy policy;
    if (a.policy == "reproject")
        policy = FallbackPolicy::Reproject;
    else if (a.policy == "skip")
        policy = FallbackPolicy::Skip;
    else
        throw std::invalid_argument("unknown fallback policy: " + a.policy);

    const Eigen::MatrixXcd frames = read_csi(a.input);
    auto [m_abs, m_ang] = split_levels(a.levels);

    PipelineConfig cfg;
    cfg.quant.n_t = static_cast<int>(frames.rows());
    cfg.quant.amp_levels = m_abs;
    cfg.quant.ang_levels = m_ang;
    cfg.training_fraction = a.training_fraction;

    if (!a.companders.empty()) {
        std::tie(cfg.quant.amp, cfg.quant.ang) = read_compander_file(a.companders);
    } else {
        if (fam != CompanderFamily::Identity) {
            const auto train = static_cast<Eigen::Index>(
                std::floor(a.training_fraction * static_cast<double>(frames.cols())));
            std::vector<double> amp_s;
            std::vector<double> ang_s;
            if (train > 0) fit_samples(frames.leftCols(train), amp_s, ang_s);
            if (amp_s.empty())
                throw DegenerateSampleError("no training samples to fit a compander on");
            Eigen::Map<const Eigen::ArrayXd> am(amp_s.data(),
                                                static_cast<Eigen::Index>(amp_s.size()));
            Eigen::Map<const Eigen::ArrayXd> gm(ang_s.data(),
                                                static_cast<Eigen::Index>(ang_s.size()));
            cfg.quant.amp = fit_compander(fam, am, {});
            cfg.quant.ang = fit_compander(fam, gm, {});
            if (a.adjust) {
                cfg.quant.amp = adjust_compander(cfg.quant.amp, am, m_abs);
                cfg.quant.ang = adjust_compander(cfg.quant.ang, gm, m_ang);
            }
        }
    }

    cfg.joint.strategy = strategy;
    cfg.joint.depth = a.depth;
    cfg.joint.gamma = a.gamma;
    cfg.joint.q_abs = a.q;
    cfg.joint.q_ang = a.q;
    cfg.joint.m3_abs = a.m3;
    cfg.joint.m3_ang = a.m3;
    cfg.joint.update_interval = a.update_interval;
    cfg.joint.fallback_update = policy;
    if (a.decay_interval > 0)
        cfg.joint.decay = DecayConfig{a.decay_factor, a.decay_interval};

    CompressResult res = compress_sequence(frames, cfg);
    write_container_file(a.out, res.container);
    std::cout << "wrote " << a.out << "\n"
              << "frames=" << frames.cols() << " training=" << res.training_frames
              << " coded=" << res.coded_frames << "\n"
              << "payload_bits=" << res.payload_bits
              << " (preamble=" << res.preamble_bits << " training=" << res.training_bits
              << " coded=" << res.report.total_bits() << ")\n"
              << "bits_per_antenna_per_timestep=" << fmt(res.coded_bits_per_antenna()) << "\n";
    return 0;
}

struct DecompressArgs {
    std::string input;
    bool csv = false;
    std::string out;
};

int cmd_decompress(const DecompressArgs& a) {
    DecompressResult res = decompress_container(read_container_file(a.input));
    if (a.csv)
        write_csi_csv(a.out, res.frames);
    else
        write_csi(a.out, res.frames);
    std::cout << "wrote " << a.out << " n_t=" << res.header.n_t
              << " frames=" << res.frames.cols() << " (training=" << res.training_frames
              << ")\n";
    return 0;
}

struct EvaluateArgs {
    std::string input;
    std::vector<int> sizes = {16, 64};
    std::string family = "beta";
    bool adjust = false;
    int depth = 2;
    double gamma = 0.5;
    unsigned q = 1;
    uint32_t m3 = 4;
    uint64_t update_interval = 100;
    double training_fraction = 0.2;
    bool envelope = false;
    double doppler = 0.0;
    double correlation = 0.0;
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
    const Eigen::MatrixXcd frames = read_csi(a.input);
    EvalConfig cfg;
    cfg.codebook_sizes = a.sizes;
    cfg.family = family_from_name(a.family);
    cfg.adjust = a.adjust;
    cfg.training_fraction = a.training_fraction;
    cfg.depth = a.depth;
    cfg.gamma = a.gamma;
    cfg.q = a.q;
    cfg.m3 = a.m3;
    cfg.update_interval = a.update_interval;
    std::vector<EvalPoint> rows = evaluate_sweep(frames, cfg);
    if (a.envelope) rows = pareto_envelope(rows);

    std::ofstream f(a.out);
    if (!f) throw IoError("cannot open for writing: " + a.out);
    f << "strategy,M_abs,M_ang,bits_per_antenna,mscd,doppler_hz,correlation\n";
    for (const auto& r : rows)
        f << r.strategy << ',' << r.amp_levels << ',' << r.ang_levels << ','
          << fmt(r.bits_per_antenna) << ',' << fmt(r.mscd) << ',' << fmt(a.doppler) << ','
          << fmt(a.correlation) << "\n";
    if (!f) throw IoError("write failed: " + a.out);
    std::cout << "wrote " << a.out << " rows=" << rows.size() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-tree compression of complex vector time series"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    uint64_t seed = 0;
    app.add_option("--seed", seed, "Random seed")->capture_default_str();

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "Generate correlated fading CSI");
    s_sim->fallthrough();
    s_sim->add_option("--nt", sim.nt, "Antenna count")->capture_default_str();
    s_sim->add_option("--frames", sim.frames, "Number of frames")->capture_default_str();
    s_sim->add_option("--doppler", sim.doppler, "Doppler frequency in Hz")
        ->capture_default_str();
    s_sim->add_option("--period", sim.period, "Sample period in seconds")
        ->capture_default_str();
    s_sim->add_option("--rho", sim.rho, "Exponential spatial correlation")
        ->capture_default_str();
    s_sim->add_option("--snr", sim.snr, "Estimation SNR in dB (default: noiseless)");
    s_sim->add_option("--sinusoids", sim.sinusoids, "Sinusoids per antenna")
        ->capture_default_str();
    s_sim->add_flag("--csv", sim.csv, "Write CSV instead of binary");
    s_sim->add_option("-o,--output", sim.out, "Output CSI path")->required();

    FitArgs fit;
    auto* s_fit = app.add_subcommand("fit", "Fit companders on a CSI file");
    s_fit->fallthrough();
    s_fit->add_option("-i,--input", fit.input, "Input CSI path")->required();
    s_fit->add_option("--family", fit.family, "identity|mu|beta")->capture_default_str();
    s_fit->add_flag("--adjust", fit.adjust, "Balance cell distortions after fitting");
    s_fit->add_option("--levels", fit.levels, "Total codebook size for adjustment")
        ->capture_default_str();
    s_fit->add_option("-o,--output", fit.out, "Output record path")->required();

    CompressArgs comp;
    auto* s_comp = app.add_subcommand("compress", "Compress a CSI file");
    s_comp->fallthrough();
    s_comp->add_option("-i,--input", comp.input, "Input CSI path")->required();
    s_comp->add_option("--strategy", comp.strategy, "individual|simple_joint|ct_indicator")
        ->capture_default_str();
    s_comp->add_option("--levels", comp.levels, "Total codebook size (power of two)")
        ->capture_default_str();
    s_comp->add_option("--family", comp.family, "identity|mu|beta")->capture_default_str();
    s_comp->add_flag("--adjust", comp.adjust, "Balance cell distortions after fitting");
    s_comp->add_option("--companders", comp.companders, "Pre-fit compander record file");
    s_comp->add_option("--depth", comp.depth, "Context depth")->capture_default_str();
    s_comp->add_option("--gamma", comp.gamma, "Tree prior weight")->capture_default_str();
    s_comp->add_option("--q", comp.q, "In-list rank bits")->capture_default_str();
    s_comp->add_option("--m3", comp.m3, "Fallback codeword space")->capture_default_str();
    s_comp->add_option("--update-interval", comp.update_interval, "Symbols between re-prunes")
        ->capture_default_str();
    s_comp->add_option("--training-fraction", comp.training_fraction, "Leading fraction sent raw")
        ->capture_default_str();
    s_comp->add_option("--policy", comp.policy, "reproject|skip")->capture_default_str();
    s_comp->add_option("--decay-factor", comp.decay_factor, "Count scale on decay");
    s_comp->add_option("--decay-interval", comp.decay_interval,
                       "Symbols between decays (0 disables)");
    s_comp->add_option("-o,--output", comp.out, "Output container path")->required();

    DecompressArgs dec;
    auto* s_dec = app.add_subcommand("decompress", "Reconstruct CSI from a container");
    s_dec->fallthrough();
    s_dec->add_option("-i,--input", dec.input, "Input container path")->required();
    s_dec->add_flag("--csv", dec.csv, "Write CSV instead of binary");
    s_dec->add_option("-o,--output", dec.out, "Output CSI path")->required();

    EvaluateArgs ev;
    auto* s_ev = app.add_subcommand("evaluate", "Rate-distortion sweep to CSV");
    s_ev->fallthrough();
    s_ev->add_option("-i,--input", ev.input, "Input CSI path")->required();
    s_ev->add_option("--sizes", ev.sizes, "Codebook sizes")
        ->delimiter(',')
        ->capture_default_str();
    s_ev->add_option("--family", ev.family, "identity|mu|beta")->capture_default_str();
    s_ev->add_flag("--adjust", ev.adjust, "Balance cell distortions after fitting");
    s_ev->add_option("--depth", ev.depth, "Context depth")->capture_default_str();
    s_ev->add_option("--gamma", ev.gamma, "Tree prior weight")->capture_default_str();
    s_ev->add_option("--q", ev.q, "In-list rank bits")->capture_default_str();
    s_ev->add_option("--m3", ev.m3, "Fallback codeword space")->capture_default_str();
    s_ev->add_option("--update-interval", ev.update_interval, "Symbols between re-prunes")
        ->capture_default_str();
    s_ev->add_option("--training-fraction", ev.training_fraction, "Leading fraction sent raw")
        ->capture_default_str();
    s_ev->add_flag("--envelope", ev.envelope, "Keep only Pareto-best rows");
    s_ev->add_option("--doppler", ev.doppler, "Doppler metadata column")
        ->capture_default_str();
    s_ev->add_option("--correlation", ev.correlation, "Correlation metadata column")
        ->capture_default_str();
    s_ev->add_option("-o,--output", ev.out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    sim.seed = seed;

    try {
        if (s_sim->parsed()) return cmd_simulate(sim);
        if (s_fit->parsed()) return cmd_fit(fit);
        if (s_comp->parsed()) return cmd_compress(comp);
        if (s_dec->parsed()) return cmd_decompress(dec);
        if (s_ev->parsed()) return cmd_evaluate(ev);
    } catch (const ctq::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ctq::DegenerateSampleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ctq::NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ctq::ZeroVectorError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ctq::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const ctq::MalformedFrameError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const ctq::TruncatedStreamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const ctq::DesyncError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
