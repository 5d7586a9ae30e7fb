#include "ctq/multistream.hpp"

#include "ctq/errors.hpp"

#include <stdexcept>

namespace ctq {

int classify(const Eigen::VectorXd& dist, Symbol symbol, unsigned q) {
    if (symbol >= static_cast<Symbol>(dist.size()))
        throw std::invalid_argument("classify: symbol outside the distribution");
    auto order = rank_symbols(dist);
    uint64_t rank = 0;
    for (size_t i = 0; i < order.size(); ++i)
        if (order[i] == symbol) {
            rank = i;
            break;
        }
    if (rank == 0) return 0;
    if (rank <= (uint64_t{1} << q)) return 1;
    return 2;
}

namespace {

CodecConfig stream_config(uint32_t alphabet, unsigned q, uint32_t m3, const JointConfig& j) {
    CodecConfig c;
    c.alphabet = alphabet;
    c.depth = j.depth;
    c.gamma = j.gamma;
    c.q1 = 0;
    c.q2 = q;
    c.m3 = m3;
    c.update_interval = j.update_interval;
    c.decay = j.decay;
    c.fallback_update = j.fallback_update;
    return c;
}

} // namespace

StreamBundle::StreamBundle(const QuantizerConfig& qcfg, const JointConfig& jcfg)
    : m_qcfg(qcfg), m_jcfg(jcfg) {
    validate(qcfg);
    if (qcfg.n_t < 1 || qcfg.n_t > 30)
        throw std::invalid_argument("bundle: antenna count must lie in [1,30]");
    const auto amp_cfg = stream_config(qcfg.amp_alphabet(), jcfg.q_abs, jcfg.m3_abs, jcfg);
    const auto ang_cfg = stream_config(static_cast<uint32_t>(qcfg.ang_levels) + 1,
                                       jcfg.q_ang, jcfg.m3_ang, jcfg);
    const auto amp_maps = make_fallback_maps(qcfg.amp_levels, qcfg.amp, jcfg.m3_abs);
    const auto ang_maps = make_fallback_maps(qcfg.ang_levels, qcfg.ang, jcfg.m3_ang);
    m_amp.reserve(static_cast<size_t>(qcfg.n_t));
    m_ang.reserve(static_cast<size_t>(qcfg.n_t));
    for (int i = 0; i < qcfg.n_t; ++i) {
        m_amp.emplace_back(amp_cfg, amp_maps);
        m_ang.emplace_back(ang_cfg, ang_maps);
    }
    if (jcfg.strategy == Strategy::CtIndicator) {
        CodecConfig ind;
        ind.alphabet = uint32_t{1} << qcfg.n_t;
        ind.depth = jcfg.depth;
        ind.gamma = jcfg.gamma;
        ind.q1 = 0;
        ind.q2 = static_cast<unsigned>(qcfg.n_t);  // every mark vector is in-list
        ind.m3 = 2;
        ind.update_interval = jcfg.update_interval;
        ind.decay = jcfg.decay;
        ind.fallback_update = jcfg.fallback_update;
        m_indicator.emplace(ind);
    }
}

void StreamBundle::check_frame(const QuantizedFrame& frame) const {
    const auto n = static_cast<size_t>(m_qcfg.n_t);
    if (frame.amp.size() != n || frame.ang.size() != n)
        throw std::invalid_argument("bundle: frame width does not match the antenna count");
    for (size_t i = 0; i < n; ++i) {
        if (frame.amp[i] > static_cast<Symbol>(m_qcfg.amp_levels) ||
            frame.ang[i] > static_cast<Symbol>(m_qcfg.ang_levels))
            throw std::invalid_argument("bundle: symbol outside the quantizer alphabet");
    }
}

void StreamBundle::train(const QuantizedFrame& frame) {
    check_frame(frame);
    for (int i = 0; i < m_qcfg.n_t; ++i) {
        m_amp[static_cast<size_t>(i)].train(frame.amp[static_cast<size_t>(i)]);
        m_ang[static_cast<size_t>(i)].train(frame.ang[static_cast<size_t>(i)]);
    }
    if (m_indicator) {
        // During training every component is coded in full, so the indicator
        // stream sees the all-clear vector.
        m_indicator->train(0);
    }
}

void StreamBundle::finish_training() {
    for (auto& c : m_amp) c.finish_training();
    for (auto& c : m_ang) c.finish_training();
    if (m_indicator) m_indicator->finish_training();
}

Symbol StreamBundle::pack_marks(const std::vector<uint8_t>& marked) const {
    Symbol v = 0;
    const int n = m_qcfg.n_t;
    for (int i = 0; i < n; ++i)
        if (marked[static_cast<size_t>(i)]) v |= Symbol{1} << (n - 1 - i);
    return v;
}

std::vector<uint8_t> StreamBundle::unpack_marks(Symbol v) const {
    const int n = m_qcfg.n_t;
    std::vector<uint8_t> marked(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        marked[static_cast<size_t>(i)] = (v >> (n - 1 - i)) & 1u;
    return marked;
}

void StreamBundle::encode_change_part(const QuantizedFrame& frame,
                                      const std::vector<uint8_t>& marked, BitWriter& out,
                                      QuantizedFrame* written) {
    for (int i = 0; i < m_qcfg.n_t; ++i) {
        const auto k = static_cast<size_t>(i);
        Symbol wa;
        Symbol wg;
        if (marked[k]) {
            wa = m_amp[k].encode_change(frame.amp[k], out).written;
            wg = m_ang[k].encode_change(frame.ang[k], out).written;
        } else {
            wa = frame.amp[k];
            wg = frame.ang[k];
            m_amp[k].observe_known(wa);
            m_ang[k].observe_known(wg);
        }
        if (written) {
            written->amp[k] = wa;
            written->ang[k] = wg;
        }
    }
}

void StreamBundle::account(const TimestepBits& bits) {
    m_report.timesteps += 1;
    m_report.indicator_bits += bits.indicator;
    m_report.change_bits += bits.change;
    m_report.individual_bits += bits.individual;
    m_report.per_timestep.push_back(bits);
}

TimestepBits StreamBundle::encode_timestep(const QuantizedFrame& frame, BitWriter& out,
                                           QuantizedFrame* written) {
    check_frame(frame);
    const auto n = static_cast<size_t>(m_qcfg.n_t);
    if (written) {
        written->strongest = frame.strongest;
        written->amp.assign(n, 0);
        written->ang.assign(n, 0);
    }
    TimestepBits bits;
    if (m_jcfg.strategy == Strategy::Individual) {
        for (size_t i = 0; i < n; ++i) {
            auto ra = m_amp[i].encode(frame.amp[i], out);
            auto rg = m_ang[i].encode(frame.ang[i], out);
            bits.individual += ra.bits + rg.bits;
            if (written) {
                written->amp[i] = ra.written;
                written->ang[i] = rg.written;
            }
        }
        account(bits);
        return bits;
    }

    std::vector<uint8_t> marked(n, 0);
    bool any = false;
    for (size_t i = 0; i < n; ++i) {
        const bool da = m_amp[i].current_rank(frame.amp[i]) != 0;
        const bool dg = m_ang[i].current_rank(frame.ang[i]) != 0;
        marked[i] = da || dg;
        any = any || marked[i];
    }

    if (m_jcfg.strategy == Strategy::SimpleJoint) {
        out.put_bit(any ? 1 : 0);
        bits.indicator += 1;
        if (any) {
            for (size_t i = 0; i < n; ++i) out.put_bit(marked[i]);
            bits.indicator += n;
        }
    } else {
        bits.indicator += m_indicator->encode(pack_marks(marked), out).bits;
    }

    const size_t before_change = out.bit_count();
    encode_change_part(frame, marked, out, written);
    bits.change = out.bit_count() - before_change;
    account(bits);
    return bits;
}

QuantizedFrame StreamBundle::decode_timestep(BitReader& in) {
    const auto n = static_cast<size_t>(m_qcfg.n_t);
    QuantizedFrame frame;
    frame.amp.assign(n, 0);
    frame.ang.assign(n, 0);
    TimestepBits bits;
    std::vector<uint8_t> marked(n, 0);

    if (m_jcfg.strategy == Strategy::Individual) {
        for (size_t i = 0; i < n; ++i) {
            auto ra = m_amp[i].decode(in);
            auto rg = m_ang[i].decode(in);
            frame.amp[i] = ra.symbol;
            frame.ang[i] = rg.symbol;
            bits.individual += ra.bits + rg.bits;
        }
    } else {
        const size_t before = in.position();
        if (m_jcfg.strategy == Strategy::SimpleJoint) {
            if (in.get_bit()) {
                for (size_t i = 0; i < n; ++i) marked[i] = in.get_bit();
            }
        } else {
            marked = unpack_marks(m_indicator->decode(in).symbol);
        }
        bits.indicator = in.position() - before;

        const size_t before_change = in.position();
        for (size_t i = 0; i < n; ++i) {
            if (marked[i]) {
                frame.amp[i] = m_amp[i].decode_change(in).symbol;
                frame.ang[i] = m_ang[i].decode_change(in).symbol;
            } else {
                frame.amp[i] = m_amp[i].top_symbol();
                frame.ang[i] = m_ang[i].top_symbol();
                m_amp[i].observe_known(frame.amp[i]);
                m_ang[i].observe_known(frame.ang[i]);
            }
        }
        bits.change = in.position() - before_change;
    }

    const auto amp_special = static_cast<Symbol>(m_qcfg.amp_levels);
    const auto ang_special = static_cast<Symbol>(m_qcfg.ang_levels);
    int strongest = -1;
    for (size_t i = 0; i < n; ++i) {
        const bool sa = frame.amp[i] == amp_special;
        const bool sg = frame.ang[i] == ang_special;
        if (sa != sg)
            throw DesyncError("special marker present on only one of the two streams");
        if (sa) {
            if (strongest >= 0)
                throw DesyncError("more than one strongest component in a frame");
            strongest = static_cast<int>(i);
        }
    }
    if (strongest < 0)
        throw DesyncError("no strongest component in a frame");
    frame.strongest = strongest;
    account(bits);
    return frame;
}

bool StreamBundle::state_equals(const StreamBundle& other) const {
    if (m_qcfg.n_t != other.m_qcfg.n_t) return false;
    if (m_indicator.has_value() != other.m_indicator.has_value()) return false;
    for (size_t i = 0; i < m_amp.size(); ++i) {
        if (!m_amp[i].state_equals(other.m_amp[i])) return false;
        if (!m_ang[i].state_equals(other.m_ang[i])) return false;
    }
    if (m_indicator && !m_indicator->state_equals(*other.m_indicator)) return false;
    return true;
}

} // namespace ctq
