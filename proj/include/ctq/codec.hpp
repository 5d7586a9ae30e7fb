#pragma once

#include "ctq/bitstream.hpp"
#include "ctq/compander.hpp"
#include "ctq/context_tree.hpp"

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace ctq {

// What to feed the tree when a symbol was sent through the low-resolution
// fallback branch: count the reprojected symbol, or only shift the history.
enum class FallbackPolicy { Reproject, Skip };

struct DecayConfig {
    double factor = 1.0;     // in [0,1]
    uint64_t interval = 0;   // symbols between decays, >= 1
};

// Three-branch codeword scheme over an m-ary alphabet:
//   rank <  2^q1        -> '0'  + q1 bits of rank
//   rank <  2^q1 + 2^q2 -> '10' + q2 bits of (rank - 2^q1)
//   otherwise           -> '11' + ceil(log2 m3) bits of a low-resolution index
// With 2^q1 + 2^q2 >= alphabet the last branch is unreachable and coding is
// lossless; otherwise both sides need the fallback requantization maps.
struct CodecConfig {
    uint32_t alphabet = 2;
    int depth = 2;
    double gamma = 0.5;
    unsigned q1 = 0;
    unsigned q2 = 1;
    uint32_t m3 = 2;         // fallback codeword space: m3-1 levels + marker
    uint64_t update_interval = 100;   // symbols between model re-prunes
    std::optional<DecayConfig> decay;
    FallbackPolicy fallback_update = FallbackPolicy::Reproject;
};

void validate(const CodecConfig& cfg);

unsigned ceil_log2(uint64_t v);

// Permutation of symbol indices by decreasing probability, ties by index.
std::vector<Symbol> rank_symbols(const Eigen::VectorXd& dist);

// Midpoint requantization from a coarse grid onto a fine one. The value
// `low_levels` acts as the strongest-component marker and maps to
// `high_levels` (the fine special symbol).
Symbol reproject_symbol(Symbol low, int low_levels, const CompanderParams& low_comp,
                        int high_levels, const CompanderParams& high_comp);

struct FallbackMaps {
    std::vector<Symbol> high_to_low;  // indexed by fine symbol incl. special
    std::vector<Symbol> low_to_high;  // indexed by coarse symbol incl. marker
};

// Coarse grid with m3-1 levels over the same compander; codepoint m3-1
// carries the special symbol.
FallbackMaps make_fallback_maps(int high_levels, const CompanderParams& comp, uint32_t m3);

// One stream: a counting tree, the currently frozen pruned model, and the
// re-prune/decay cadence. Encoder and decoder instances run the identical
// update sequence, which keeps them in lockstep.
class SymbolCodec {
public:
    explicit SymbolCodec(const CodecConfig& cfg);
    SymbolCodec(const CodecConfig& cfg, FallbackMaps maps);

    const CodecConfig& config() const { return m_cfg; }
    const ContextTree& tree() const { return m_tree; }
    const Model& model() const { return m_model; }

    // Training symbols update the tree without emitting bits and without
    // advancing the prune/decay cadence.
    void train(Symbol s);
    void finish_training();   // prune once, reset cadence

    struct EncodeResult {
        Symbol written;   // symbol the decoder will reconstruct
        int branch;       // 0, 1 or 2
        size_t bits;
    };
    // `low_res` overrides the map-derived fallback index when the caller has
    // quantized the raw value directly.
    EncodeResult encode(Symbol s, BitWriter& out,
                        std::optional<Symbol> low_res = std::nullopt);

    struct DecodeResult {
        Symbol symbol;
        int branch;
        Symbol low = 0;
        size_t bits = 0;
    };
    DecodeResult decode(BitReader& in);

    // Two-branch variant used inside joint strategies:
    //   rank < 2^q2 -> '0' + q2 bits of rank, else '1' + fallback bits.
    EncodeResult encode_change(Symbol s, BitWriter& out,
                               std::optional<Symbol> low_res = std::nullopt);
    DecodeResult decode_change(BitReader& in);

    // Counts a symbol both sides already know; no bits move.
    void observe_known(Symbol s);

    uint64_t current_rank(Symbol s) const;
    Symbol symbol_at_rank(uint64_t rank) const;
    Symbol top_symbol() const { return symbol_at_rank(0); }

    std::string snapshot() const;     // tree dump + model + cadence counters
    bool state_equals(const SymbolCodec& other) const;

private:
    struct Ranking {
        std::vector<std::pair<Symbol, double>> seen;  // count desc, index asc
        std::vector<Symbol> seen_sorted;               // same symbols, index asc
        uint32_t alphabet;
        uint64_t rank_of(Symbol s) const;
        Symbol at(uint64_t rank) const;
    };
    Ranking ranking() const;
    void after_coded_symbol();
    void fallback_update(Symbol reprojected);
    Symbol low_index_for(Symbol s, const std::optional<Symbol>& low_res) const;
    Symbol reprojected_from_low(Symbol low) const;

    CodecConfig m_cfg;
    std::optional<FallbackMaps> m_maps;
    ContextTree m_tree;
    Model m_model;
    uint64_t m_since_prune = 0;
    uint64_t m_since_decay = 0;
    unsigned m_fallback_bits;
};

} // namespace ctq
