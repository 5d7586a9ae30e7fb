#pragma once

#include "ctq/codec.hpp"
#include "ctq/quantizer.hpp"

#include <optional>
#include <vector>

namespace ctq {

enum class Strategy { Individual = 0, SimpleJoint = 1, CtIndicator = 2 };

struct JointConfig {
    Strategy strategy = Strategy::Individual;
    int depth = 2;
    double gamma = 0.5;
    unsigned q_abs = 1;
    unsigned q_ang = 1;
    uint32_t m3_abs = 4;
    uint32_t m3_ang = 4;
    uint64_t update_interval = 100;
    std::optional<DecayConfig> decay;
    FallbackPolicy fallback_update = FallbackPolicy::Reproject;
};

// 0: the symbol is the current most likely one; 1: it sits within the next
// 2^q ranks; 2: beyond those.
int classify(const Eigen::VectorXd& dist, Symbol symbol, unsigned q);

struct TimestepBits {
    uint64_t indicator = 0;
    uint64_t change = 0;
    uint64_t individual = 0;
    uint64_t total() const { return indicator + change + individual; }
};

struct RateReport {
    uint64_t timesteps = 0;
    uint64_t indicator_bits = 0;
    uint64_t change_bits = 0;
    uint64_t individual_bits = 0;
    std::vector<TimestepBits> per_timestep;
    uint64_t total_bits() const { return indicator_bits + change_bits + individual_bits; }
};

// 2*n_t symbol streams (amplitude and phase per antenna) plus, depending on
// the strategy, a shared deviation indicator. Streams are visited in
// component-major order: antenna 0 amplitude, antenna 0 phase, antenna 1
// amplitude, ...
class StreamBundle {
public:
    StreamBundle(const QuantizerConfig& qcfg, const JointConfig& jcfg);

    void train(const QuantizedFrame& frame);
    void finish_training();

    // `written` receives the frame the decoder will reconstruct.
    TimestepBits encode_timestep(const QuantizedFrame& frame, BitWriter& out,
                                 QuantizedFrame* written = nullptr);
    QuantizedFrame decode_timestep(BitReader& in);

    const RateReport& report() const { return m_report; }
    bool state_equals(const StreamBundle& other) const;
    const JointConfig& joint_config() const { return m_jcfg; }
    const QuantizerConfig& quantizer_config() const { return m_qcfg; }

private:
    void check_frame(const QuantizedFrame& frame) const;
    void encode_change_part(const QuantizedFrame& frame, const std::vector<uint8_t>& marked,
                            BitWriter& out, QuantizedFrame* written);
    Symbol pack_marks(const std::vector<uint8_t>& marked) const;
    std::vector<uint8_t> unpack_marks(Symbol v) const;
    void account(const TimestepBits& bits);

    QuantizerConfig m_qcfg;
    JointConfig m_jcfg;
    std::vector<SymbolCodec> m_amp;
    std::vector<SymbolCodec> m_ang;
    std::optional<SymbolCodec> m_indicator;
    RateReport m_report;
};

} // namespace ctq
