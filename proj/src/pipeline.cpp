#include "ctq/pipeline.hpp"

#include "ctq/context_tree.hpp"
#include "ctq/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ctq {

namespace {

constexpr char kMagic[4] = {'C', 'T', 'Q', '1'};
constexpr uint16_t kVersion = 1;

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v & 0xff));
    b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<uint8_t>& b, double v) {
    uint64_t u;
    std::memcpy(&u, &v, sizeof u);
    put_u64(b, u);
}

struct Cursor {
    const std::vector<uint8_t>& b;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > b.size()) throw FormatError("container truncated");
    }
    uint8_t u8() {
        need(1);
        return b[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(b[pos]) |
                     static_cast<uint16_t>(static_cast<uint16_t>(b[pos + 1]) << 8);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        uint64_t u = u64();
        double v;
        std::memcpy(&v, &u, sizeof v);
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b.data()) + pos, n);
        pos += n;
        return s;
    }
};

void put_record(std::vector<uint8_t>& b, const std::string& rec) {
    if (rec.size() > 0xffff)
        throw std::invalid_argument("container: compander record too long");
    put_u16(b, static_cast<uint16_t>(rec.size()));
    b.insert(b.end(), rec.begin(), rec.end());
}

} // namespace

std::vector<uint8_t> serialize_header(const ContainerHeader& h) {
    std::vector<uint8_t> b;
    b.insert(b.end(), kMagic, kMagic + 4);
    put_u16(b, h.version);
    put_u32(b, h.n_t);
    b.push_back(h.depth);
    put_f64(b, h.gamma);
    b.push_back(h.q1);
    b.push_back(h.q2);
    put_u16(b, h.m3);
    put_u16(b, h.amp_levels);
    put_u16(b, h.ang_levels);
    put_record(b, h.amp_record);
    put_record(b, h.ang_record);
    b.push_back(h.strategy);
    put_u64(b, h.payload_bits);
    return b;
}

std::pair<ContainerHeader, size_t> parse_header(const std::vector<uint8_t>& bytes) {
    Cursor c{bytes};
    c.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("bad container magic");
    c.pos = 4;
    ContainerHeader h;
    h.version = c.u16();
    if (h.version != kVersion) throw FormatError("unsupported container version");
    h.n_t = c.u32();
    h.depth = c.u8();
    h.gamma = c.f64();
    h.q1 = c.u8();
    h.q2 = c.u8();
    h.m3 = c.u16();
    h.amp_levels = c.u16();
    h.ang_levels = c.u16();
    h.amp_record = c.str(c.u16());
    h.ang_record = c.str(c.u16());
    h.strategy = c.u8();
    h.payload_bits = c.u64();
    return {h, c.pos};
}

namespace {

// Preamble widths inside the payload, in bits.
constexpr unsigned kFrameCountBits = 64;
constexpr unsigned kTrainCountBits = 64;
constexpr unsigned kIntervalBits = 32;
constexpr unsigned kByteBits = 8;

void write_preamble(BitWriter& w, Eigen::Index n, Eigen::Index train, const JointConfig& j) {
    w.put_bits(static_cast<uint64_t>(n), kFrameCountBits);
    w.put_bits(static_cast<uint64_t>(train), kTrainCountBits);
    w.put_bits(j.update_interval, kIntervalBits);
    w.put_bits(j.fallback_update == FallbackPolicy::Skip ? 1 : 0, kByteBits);
    w.put_bits(j.decay ? 1 : 0, kByteBits);
    if (j.decay) {
        w.put_bits(std::bit_cast<uint64_t>(j.decay->factor), 64);
        w.put_bits(j.decay->interval, kIntervalBits);
    }
}

struct Preamble {
    Eigen::Index n_frames;
    Eigen::Index n_train;
    uint64_t update_interval;
    FallbackPolicy policy;
    std::optional<DecayConfig> decay;
};

Preamble read_preamble(BitReader& r) {
    Preamble p;
    p.n_frames = static_cast<Eigen::Index>(r.get_bits(kFrameCountBits));
    p.n_train = static_cast<Eigen::Index>(r.get_bits(kTrainCountBits));
    p.update_interval = r.get_bits(kIntervalBits);
    uint64_t pol = r.get_bits(kByteBits);
    if (pol > 1) throw FormatError("unknown fallback policy tag");
    p.policy = pol ? FallbackPolicy::Skip : FallbackPolicy::Reproject;
    uint64_t flag = r.get_bits(kByteBits);
    if (flag > 1) throw FormatError("unknown decay tag");
    if (flag) {
        DecayConfig d;
        d.factor = std::bit_cast<double>(r.get_bits(64));
        d.interval = r.get_bits(kIntervalBits);
        p.decay = d;
    }
    if (p.n_frames < 1 || p.n_train < 0 || p.n_train >= p.n_frames)
        throw FormatError("inconsistent frame counts");
    return p;
}

} // namespace

double CompressResult::coded_bits_per_antenna() const {
    if (coded_frames == 0 || n_t == 0) return 0.0;
    return static_cast<double>(report.total_bits()) /
           (static_cast<double>(coded_frames) * static_cast<double>(n_t));
}

CompressResult compress_sequence(const Eigen::MatrixXcd& frames, const PipelineConfig& cfg) {
    validate(cfg.quant);
    if (frames.rows() != cfg.quant.n_t)
        throw std::invalid_argument("compress: frame rows must equal the antenna count");
    const Eigen::Index n = frames.cols();
    if (n < 1) throw std::invalid_argument("compress: no frames");
    if (!(cfg.training_fraction >= 0.0 && cfg.training_fraction < 1.0))
        throw std::invalid_argument("compress: training fraction must lie in [0,1)");
    if (cfg.joint.q_abs != cfg.joint.q_ang || cfg.joint.m3_abs != cfg.joint.m3_ang)
        throw std::invalid_argument("compress: the container carries a single q2 and m3");
    if (cfg.joint.depth < 0 || cfg.joint.depth > 255)
        throw std::invalid_argument("compress: depth does not fit the container");
    if (cfg.joint.q_abs > 255 || cfg.joint.m3_abs > 0xffff)
        throw std::invalid_argument("compress: q2 or m3 does not fit the container");
    if (cfg.quant.amp_levels > 0xfffe || cfg.quant.ang_levels > 0xfffe)
        throw std::invalid_argument("compress: level counts do not fit the container");
    if (cfg.joint.update_interval > 0xffffffffull)
        throw std::invalid_argument("compress: update interval does not fit the container");

    const auto train = static_cast<Eigen::Index>(
        std::floor(cfg.training_fraction * static_cast<double>(n)));
    const Eigen::Index coded = n - train;

    StreamBundle bundle(cfg.quant, cfg.joint);
    const auto quantized = quantize_sequence(cfg.quant, frames);

    BitWriter w;
    write_preamble(w, n, train, cfg.joint);
    const uint64_t preamble_bits = w.bit_count();

    const unsigned amp_bits = ceil_log2(cfg.quant.amp_alphabet());
    const unsigned ang_bits = ceil_log2(cfg.quant.ang_alphabet());
    for (Eigen::Index t = 0; t < train; ++t) {
        const auto& f = quantized[static_cast<size_t>(t)];
        for (int i = 0; i < cfg.quant.n_t; ++i) {
            w.put_bits(f.amp[static_cast<size_t>(i)], amp_bits);
            w.put_bits(f.ang[static_cast<size_t>(i)], ang_bits);
        }
        bundle.train(f);
    }
    const uint64_t training_bits = w.bit_count() - preamble_bits;

    bundle.finish_training();
    for (Eigen::Index t = train; t < n; ++t)
        bundle.encode_timestep(quantized[static_cast<size_t>(t)], w);

    ContainerHeader h;
    h.n_t = static_cast<uint32_t>(cfg.quant.n_t);
    h.depth = static_cast<uint8_t>(cfg.joint.depth);
    h.gamma = cfg.joint.gamma;
    h.q1 = 0;
    h.q2 = static_cast<uint8_t>(cfg.joint.q_abs);
    h.m3 = static_cast<uint16_t>(cfg.joint.m3_abs);
    h.amp_levels = static_cast<uint16_t>(cfg.quant.amp_levels);
    h.ang_levels = static_cast<uint16_t>(cfg.quant.ang_levels);
    h.amp_record = serialize_compander(cfg.quant.amp);
    h.ang_record = serialize_compander(cfg.quant.ang);
    h.strategy = static_cast<uint8_t>(cfg.joint.strategy);
    h.payload_bits = w.bit_count();

    CompressResult res;
    res.container = serialize_header(h);
    const auto& payload = w.bytes();
    res.container.insert(res.container.end(), payload.begin(), payload.end());
    res.report = bundle.report();
    res.preamble_bits = preamble_bits;
    res.training_bits = training_bits;
    res.payload_bits = h.payload_bits;
    res.training_frames = train;
    res.coded_frames = coded;
    res.n_t = cfg.quant.n_t;
    return res;
}

DecompressResult decompress_container(const std::vector<uint8_t>& bytes) {
    auto [h, offset] = parse_header(bytes);
    if (h.n_t < 1) throw FormatError("container declares no antennas");
    if (h.strategy > 2) throw FormatError("unknown strategy tag");

    const uint64_t available_bits = (bytes.size() - offset) * 8ull;
    if (h.payload_bits > available_bits)
        throw TruncatedStreamError("payload shorter than declared");

    QuantizerConfig qc;
    qc.n_t = static_cast<int>(h.n_t);
    qc.amp_levels = h.amp_levels;
    qc.ang_levels = h.ang_levels;
    qc.amp = parse_compander(h.amp_record);
    qc.ang = parse_compander(h.ang_record);
    validate(qc);

    BitReader r(bytes.data() + offset, h.payload_bits);
    const Preamble p = read_preamble(r);

    JointConfig j;
    j.strategy = static_cast<Strategy>(h.strategy);
    j.depth = h.depth;
    j.gamma = h.gamma;
    j.q_abs = h.q2;
    j.q_ang = h.q2;
    j.m3_abs = h.m3;
    j.m3_ang = h.m3;
    j.update_interval = p.update_interval;
    j.decay = p.decay;
    j.fallback_update = p.policy;

    StreamBundle bundle(qc, j);

    std::vector<QuantizedFrame> all;
    all.reserve(static_cast<size_t>(p.n_frames));
    const unsigned amp_bits = ceil_log2(qc.amp_alphabet());
    const unsigned ang_bits = ceil_log2(qc.ang_alphabet());
    for (Eigen::Index t = 0; t < p.n_train; ++t) {
        QuantizedFrame f;
        f.amp.resize(static_cast<size_t>(qc.n_t));
        f.ang.resize(static_cast<size_t>(qc.n_t));
        for (int i = 0; i < qc.n_t; ++i) {
            f.amp[static_cast<size_t>(i)] = static_cast<Symbol>(r.get_bits(amp_bits));
            f.ang[static_cast<size_t>(i)] = static_cast<Symbol>(r.get_bits(ang_bits));
        }
        bundle.train(f);
        all.push_back(std::move(f));
    }
    bundle.finish_training();

    for (Eigen::Index t = p.n_train; t < p.n_frames; ++t)
        all.push_back(bundle.decode_timestep(r));

    if (r.position() != h.payload_bits)
        throw FormatError("payload length disagrees with its content");

    DecompressResult res;
    res.frames = dequantize_sequence(qc, all);
    res.report = bundle.report();
    res.header = h;
    res.training_frames = p.n_train;
    return res;
}

void write_container_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::vector<uint8_t> read_container_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failed: " + path);
    return bytes;
}

namespace {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Individual: return "ctm_individual";
        case Strategy::SimpleJoint: return "ctm_simple_joint";
        case Strategy::CtIndicator: return "ctm_ct_indicator";
    }
    return "?";
}

} // namespace

std::vector<EvalPoint> evaluate_sweep(const Eigen::MatrixXcd& frames, const EvalConfig& cfg) {
    const auto n_t = static_cast<int>(frames.rows());
    const Eigen::Index n = frames.cols();
    if (n_t < 2) throw std::invalid_argument("evaluate: need at least 2 antennas");
    if (!(cfg.training_fraction >= 0.0 && cfg.training_fraction < 1.0))
        throw std::invalid_argument("evaluate: training fraction must lie in [0,1)");
    const auto train = static_cast<Eigen::Index>(
        std::floor(cfg.training_fraction * static_cast<double>(n)));
    const Eigen::Index coded = n - train;
    if (coded < 1) throw std::invalid_argument("evaluate: no coded frames");

    // Fit samples come from the training region only.
    std::vector<double> amp_s;
    std::vector<double> ang_s;
    for (Eigen::Index t = 0; t < train; ++t) {
        auto [nx, strongest] = normalize_frame(frames.col(t));
        for (int i = 0; i < n_t; ++i) {
            if (i == strongest) continue;
            amp_s.push_back(std::abs(nx[i]));
            ang_s.push_back(phase_unit(nx[i]));
        }
    }

    CompanderParams base_amp = CompanderParams::identity();
    CompanderParams base_ang = CompanderParams::identity();
    if (cfg.family != CompanderFamily::Identity && !amp_s.empty()) {
        Eigen::Map<const Eigen::ArrayXd> am(amp_s.data(), static_cast<Eigen::Index>(amp_s.size()));
        Eigen::Map<const Eigen::ArrayXd> gm(ang_s.data(), static_cast<Eigen::Index>(ang_s.size()));
        base_amp = fit_compander(cfg.family, am, {});
        base_ang = fit_compander(cfg.family, gm, {});
    }

    const Eigen::MatrixXcd ref = frames.rightCols(coded);
    std::vector<EvalPoint> rows;

    for (int total : cfg.codebook_sizes) {
        auto [m_abs, m_ang] = split_levels(total);
        CompanderParams pa = base_amp;
        CompanderParams pg = base_ang;
        if (cfg.adjust && !amp_s.empty()) {
            Eigen::Map<const Eigen::ArrayXd> am(amp_s.data(),
                                                static_cast<Eigen::Index>(amp_s.size()));
            Eigen::Map<const Eigen::ArrayXd> gm(ang_s.data(),
                                                static_cast<Eigen::Index>(ang_s.size()));
            pa = adjust_compander(pa, am, m_abs);
            pg = adjust_compander(pg, gm, m_ang);
        }

        QuantizerConfig qc;
        qc.n_t = n_t;
        qc.amp_levels = m_abs;
        qc.ang_levels = m_ang;
        qc.amp = pa;
        qc.ang = pg;

        const auto quantized = quantize_sequence(qc, frames);
        const std::vector<QuantizedFrame> coded_syms(quantized.begin() + train, quantized.end());
        const Eigen::MatrixXcd unc_rec = dequantize_sequence(qc, coded_syms);
        const double unc_mscd = mscd(ref, unc_rec);
        rows.push_back({"uncompressed", m_abs, m_ang,
                        std::log2(static_cast<double>(m_abs) * static_cast<double>(m_ang)),
                        unc_mscd});

        for (Strategy strat :
             {Strategy::Individual, Strategy::SimpleJoint, Strategy::CtIndicator}) {
            JointConfig j;
            j.strategy = strat;
            j.depth = cfg.depth;
            j.gamma = cfg.gamma;
            j.q_abs = cfg.q;
            j.q_ang = cfg.q;
            j.m3_abs = cfg.m3;
            j.m3_ang = cfg.m3;
            j.update_interval = cfg.update_interval;
            j.decay = cfg.decay;
            j.fallback_update = cfg.fallback_update;
            StreamBundle bundle(qc, j);
            for (Eigen::Index t = 0; t < train; ++t)
                bundle.train(quantized[static_cast<size_t>(t)]);
            bundle.finish_training();
            BitWriter w;
            std::vector<QuantizedFrame> written(static_cast<size_t>(coded));
            for (Eigen::Index k = 0; k < coded; ++k)
                bundle.encode_timestep(quantized[static_cast<size_t>(train + k)], w,
                                       &written[static_cast<size_t>(k)]);
            const Eigen::MatrixXcd rec = dequantize_sequence(qc, written);
            rows.push_back({strategy_name(strat), m_abs, m_ang,
                            static_cast<double>(bundle.report().total_bits()) /
                                (static_cast<double>(coded) * n_t),
                            mscd(ref, rec)});
        }

        // Per-stream mixture code length; the symbols round-trip exactly, so
        // the distortion equals the plain quantizer's.
        uint64_t ideal_bits = 0;
        for (int i = 0; i < n_t; ++i) {
            for (int axis = 0; axis < 2; ++axis) {
                const uint32_t alphabet =
                    axis == 0 ? qc.amp_alphabet() : qc.ang_alphabet();
                ContextTree tree(alphabet, cfg.depth, cfg.gamma);
                for (Eigen::Index t = 0; t < train; ++t) {
                    const auto& f = quantized[static_cast<size_t>(t)];
                    tree.observe(axis == 0 ? f.amp[static_cast<size_t>(i)]
                                           : f.ang[static_cast<size_t>(i)]);
                }
                const double log0 = tree.ctw_log_prob();
                for (Eigen::Index t = train; t < n; ++t) {
                    const auto& f = quantized[static_cast<size_t>(t)];
                    tree.observe(axis == 0 ? f.amp[static_cast<size_t>(i)]
                                           : f.ang[static_cast<size_t>(i)]);
                }
                ideal_bits += ideal_code_bits(tree.ctw_log_prob() - log0);
            }
        }
        rows.push_back({"ctw_ideal", m_abs, m_ang,
                        static_cast<double>(ideal_bits) / (static_cast<double>(coded) * n_t),
                        unc_mscd});
    }
    return rows;
}

std::vector<EvalPoint> pareto_envelope(const std::vector<EvalPoint>& points) {
    std::vector<EvalPoint> keep;
    for (const auto& p : points) {
        bool dominated = false;
        for (const auto& q : points) {
            if (q.bits_per_antenna <= p.bits_per_antenna && q.mscd <= p.mscd &&
                (q.bits_per_antenna < p.bits_per_antenna || q.mscd < p.mscd)) {
                dominated = true;
                break;
            }
        }
        if (!dominated) keep.push_back(p);
    }
    std::stable_sort(keep.begin(), keep.end(), [](const EvalPoint& a, const EvalPoint& b) {
        if (a.bits_per_antenna != b.bits_per_antenna)
            return a.bits_per_antenna < b.bits_per_antenna;
        return a.mscd < b.mscd;
    });
    return keep;
}

} // namespace ctq
