#include "ctq/codec.hpp"

#include "ctq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ctq {

void validate(const CodecConfig& cfg) {
    if (cfg.alphabet < 2)
        throw std::invalid_argument("codec: alphabet must be at least 2");
    if (cfg.depth < 0)
        throw std::invalid_argument("codec: depth must be non-negative");
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
        throw std::invalid_argument("codec: gamma must lie in (0,1)");
    if (cfg.q1 > 30 || cfg.q2 > 30)
        throw std::invalid_argument("codec: q1/q2 out of range");
    if (cfg.q2 < 1)
        throw std::invalid_argument("codec: q2 must be at least 1");
    if (cfg.m3 < 2)
        throw std::invalid_argument("codec: m3 must be at least 2");
    if (cfg.update_interval < 1)
        throw std::invalid_argument("codec: update_interval must be at least 1");
    if (cfg.decay) {
        if (!(cfg.decay->factor >= 0.0 && cfg.decay->factor <= 1.0))
            throw std::invalid_argument("codec: decay factor must lie in [0,1]");
        if (cfg.decay->interval < 1)
            throw std::invalid_argument("codec: decay interval must be at least 1");
    }
}

unsigned ceil_log2(uint64_t v) {
    if (v < 2) return 0;
    unsigned k = 0;
    uint64_t p = 1;
    while (p < v) {
        p <<= 1;
        ++k;
    }
    return k;
}

std::vector<Symbol> rank_symbols(const Eigen::VectorXd& dist) {
    std::vector<Symbol> order(static_cast<size_t>(dist.size()));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Symbol>(i);
    std::stable_sort(order.begin(), order.end(), [&](Symbol a, Symbol b) {
        return dist[static_cast<Eigen::Index>(a)] > dist[static_cast<Eigen::Index>(b)];
    });
    return order;
}

Symbol reproject_symbol(Symbol low, int low_levels, const CompanderParams& low_comp,
                        int high_levels, const CompanderParams& high_comp) {
    if (low_levels < 1 || high_levels < 1)
        throw std::invalid_argument("reproject: level counts must be positive");
    if (low > static_cast<Symbol>(low_levels))
        throw std::invalid_argument("reproject: coarse symbol out of range");
    if (low == static_cast<Symbol>(low_levels))
        return static_cast<Symbol>(high_levels);   // marker carries the special symbol
    double v = expand_value(low_comp, (static_cast<double>(low) + 0.5) / low_levels);
    auto s = static_cast<long>(std::floor(high_levels * compress_value(high_comp, v)));
    s = std::clamp(s, 0L, static_cast<long>(high_levels) - 1L);
    return static_cast<Symbol>(s);
}

FallbackMaps make_fallback_maps(int high_levels, const CompanderParams& comp, uint32_t m3) {
    if (high_levels < 1)
        throw std::invalid_argument("fallback maps: level count must be positive");
    if (m3 < 2)
        throw std::invalid_argument("fallback maps: m3 must be at least 2");
    const int low_levels = static_cast<int>(m3) - 1;
    FallbackMaps maps;
    maps.high_to_low.resize(static_cast<size_t>(high_levels) + 1);
    for (int s = 0; s < high_levels; ++s) {
        double v = expand_value(comp, (s + 0.5) / high_levels);
        auto l = static_cast<long>(std::floor(low_levels * compress_value(comp, v)));
        l = std::clamp(l, 0L, static_cast<long>(low_levels) - 1L);
        maps.high_to_low[static_cast<size_t>(s)] = static_cast<Symbol>(l);
    }
    maps.high_to_low[static_cast<size_t>(high_levels)] = static_cast<Symbol>(low_levels);
    maps.low_to_high.resize(m3);
    for (uint32_t l = 0; l < m3; ++l)
        maps.low_to_high[l] = reproject_symbol(l, low_levels, comp, high_levels, comp);
    return maps;
}

namespace {

ContextTree make_tree(const CodecConfig& cfg) {
    validate(cfg);
    return ContextTree(cfg.alphabet, cfg.depth, cfg.gamma);
}

} // namespace

SymbolCodec::SymbolCodec(const CodecConfig& cfg)
    : m_cfg(cfg), m_tree(make_tree(cfg)), m_fallback_bits(ceil_log2(cfg.m3)) {
    m_model = m_tree.map_model();
}

SymbolCodec::SymbolCodec(const CodecConfig& cfg, FallbackMaps maps)
    : m_cfg(cfg), m_maps(std::move(maps)), m_tree(make_tree(cfg)),
      m_fallback_bits(ceil_log2(cfg.m3)) {
    if (m_maps->low_to_high.size() != m_cfg.m3)
        throw std::invalid_argument("codec: coarse map size must equal m3");
    if (m_maps->high_to_low.size() != m_cfg.alphabet)
        throw std::invalid_argument("codec: fine map size must equal the alphabet");
    m_model = m_tree.map_model();
}

void SymbolCodec::train(Symbol s) {
    m_tree.observe(s);
}

void SymbolCodec::finish_training() {
    m_model = m_tree.map_model();
    m_since_prune = 0;
    m_since_decay = 0;
}

SymbolCodec::Ranking SymbolCodec::ranking() const {
    Ranking rk;
    rk.alphabet = m_cfg.alphabet;
    Context ctx = m_tree.model_context(m_model, m_tree.history());
    auto view = m_tree.counts_at(ctx);
    if (view.counts) {
        rk.seen.reserve(view.counts->size());
        for (const auto& [sym, c] : *view.counts)
            if (c > 0.0) rk.seen.emplace_back(sym, c);
        std::stable_sort(rk.seen.begin(), rk.seen.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        rk.seen_sorted.reserve(rk.seen.size());
        for (const auto& [sym, c] : rk.seen) rk.seen_sorted.push_back(sym);
        std::sort(rk.seen_sorted.begin(), rk.seen_sorted.end());
    }
    return rk;
}

uint64_t SymbolCodec::Ranking::rank_of(Symbol s) const {
    for (size_t i = 0; i < seen.size(); ++i)
        if (seen[i].first == s) return i;
    // Unseen symbols follow in index order, skipping the seen ones.
    auto below = static_cast<uint64_t>(
        std::lower_bound(seen_sorted.begin(), seen_sorted.end(), s) - seen_sorted.begin());
    return seen.size() + (s - below);
}

Symbol SymbolCodec::Ranking::at(uint64_t rank) const {
    if (rank >= alphabet)
        throw DesyncError("rank outside the alphabet");
    if (rank < seen.size()) return seen[rank].first;
    uint64_t k = rank - seen.size();
    Symbol prev = 0;
    for (Symbol s : seen_sorted) {
        uint64_t gap = s - prev;      // unseen indices in [prev, s)
        if (k < gap) return prev + static_cast<Symbol>(k);
        k -= gap;
        prev = s + 1;
    }
    return prev + static_cast<Symbol>(k);
}

uint64_t SymbolCodec::current_rank(Symbol s) const {
    if (s >= m_cfg.alphabet)
        throw std::invalid_argument("codec: symbol outside the alphabet");
    return ranking().rank_of(s);
}

Symbol SymbolCodec::symbol_at_rank(uint64_t rank) const {
    return ranking().at(rank);
}

void SymbolCodec::after_coded_symbol() {
    if (m_cfg.decay && ++m_since_decay >= m_cfg.decay->interval) {
        m_tree.decay(m_cfg.decay->factor);
        m_since_decay = 0;
    }
    if (++m_since_prune >= m_cfg.update_interval) {
        m_model = m_tree.map_model();
        m_since_prune = 0;
    }
}

void SymbolCodec::fallback_update(Symbol reprojected) {
    if (m_cfg.fallback_update == FallbackPolicy::Reproject)
        m_tree.observe(reprojected);
    else
        m_tree.advance_history(reprojected);
}

Symbol SymbolCodec::low_index_for(Symbol s, const std::optional<Symbol>& low_res) const {
    if (low_res) {
        if (*low_res >= m_cfg.m3)
            throw std::invalid_argument("codec: fallback index out of range");
        return *low_res;
    }
    if (!m_maps)
        throw MissingFallbackError("fallback branch reached without requantization maps");
    return m_maps->high_to_low[s];
}

Symbol SymbolCodec::reprojected_from_low(Symbol low) const {
    if (!m_maps)
        throw MissingFallbackError("fallback branch reached without requantization maps");
    if (low >= m_cfg.m3)
        throw DesyncError("fallback index outside m3");
    return m_maps->low_to_high[low];
}

SymbolCodec::EncodeResult SymbolCodec::encode(Symbol s, BitWriter& out,
                                              std::optional<Symbol> low_res) {
    if (s >= m_cfg.alphabet)
        throw std::invalid_argument("codec: symbol outside the alphabet");
    const uint64_t m1 = uint64_t{1} << m_cfg.q1;
    const uint64_t m2 = uint64_t{1} << m_cfg.q2;
    Ranking rk = ranking();
    const uint64_t r = rk.rank_of(s);
    const size_t before = out.bit_count();
    EncodeResult res{};
    if (r < m1) {
        out.put_bit(0);
        out.put_bits(r, m_cfg.q1);
        m_tree.observe(s);
        res = {s, 0, 0};
    } else if (r < m1 + m2) {
        out.put_bit(1);
        out.put_bit(0);
        out.put_bits(r - m1, m_cfg.q2);
        m_tree.observe(s);
        res = {s, 1, 0};
    } else {
        Symbol low = low_index_for(s, low_res);
        Symbol written = reprojected_from_low(low);
        out.put_bit(1);
        out.put_bit(1);
        out.put_bits(low, m_fallback_bits);
        fallback_update(written);
        res = {written, 2, 0};
    }
    after_coded_symbol();
    res.bits = out.bit_count() - before;
    return res;
}

SymbolCodec::DecodeResult SymbolCodec::decode(BitReader& in) {
    const uint64_t m1 = uint64_t{1} << m_cfg.q1;
    const size_t before = in.position();
    DecodeResult res{};
    if (in.get_bit() == 0) {
        uint64_t r = in.get_bits(m_cfg.q1);
        Symbol s = ranking().at(r);
        m_tree.observe(s);
        res.symbol = s;
        res.branch = 0;
    } else if (in.get_bit() == 0) {
        uint64_t r = m1 + in.get_bits(m_cfg.q2);
        Symbol s = ranking().at(r);
        m_tree.observe(s);
        res.symbol = s;
        res.branch = 1;
    } else {
        auto low = static_cast<Symbol>(in.get_bits(m_fallback_bits));
        Symbol written = reprojected_from_low(low);
        fallback_update(written);
        res.symbol = written;
        res.branch = 2;
        res.low = low;
    }
    after_coded_symbol();
    res.bits = in.position() - before;
    return res;
}

SymbolCodec::EncodeResult SymbolCodec::encode_change(Symbol s, BitWriter& out,
                                                     std::optional<Symbol> low_res) {
    if (s >= m_cfg.alphabet)
        throw std::invalid_argument("codec: symbol outside the alphabet");
    const uint64_t m2 = uint64_t{1} << m_cfg.q2;
    Ranking rk = ranking();
    const uint64_t r = rk.rank_of(s);
    const size_t before = out.bit_count();
    EncodeResult res{};
    if (r < m2) {
        out.put_bit(0);
        out.put_bits(r, m_cfg.q2);
        m_tree.observe(s);
        res = {s, 0, 0};
    } else {
        Symbol low = low_index_for(s, low_res);
        Symbol written = reprojected_from_low(low);
        out.put_bit(1);
        out.put_bits(low, m_fallback_bits);
        fallback_update(written);
        res = {written, 1, 0};
    }
    after_coded_symbol();
    res.bits = out.bit_count() - before;
    return res;
}

SymbolCodec::DecodeResult SymbolCodec::decode_change(BitReader& in) {
    const size_t before = in.position();
    DecodeResult res{};
    if (in.get_bit() == 0) {
        uint64_t r = in.get_bits(m_cfg.q2);
        Symbol s = ranking().at(r);
        m_tree.observe(s);
        res.symbol = s;
        res.branch = 0;
    } else {
        auto low = static_cast<Symbol>(in.get_bits(m_fallback_bits));
        Symbol written = reprojected_from_low(low);
        fallback_update(written);
        res.symbol = written;
        res.branch = 1;
        res.low = low;
    }
    after_coded_symbol();
    res.bits = in.position() - before;
    return res;
}

void SymbolCodec::observe_known(Symbol s) {
    if (s >= m_cfg.alphabet)
        throw std::invalid_argument("codec: symbol outside the alphabet");
    m_tree.observe(s);
    after_coded_symbol();
}

std::string SymbolCodec::snapshot() const {
    std::ostringstream os;
    os << "since_prune=" << m_since_prune << " since_decay=" << m_since_decay << "\n";
    os << "model:";
    for (const auto& leaf : m_model.leaves) {
        os << ' ';
        if (leaf.empty()) os << '-';
        for (Symbol s : leaf) os << s;
    }
    os << "\n" << m_tree.snapshot();
    return os.str();
}

bool SymbolCodec::state_equals(const SymbolCodec& other) const {
    return m_tree == other.m_tree && m_model == other.m_model &&
           m_since_prune == other.m_since_prune && m_since_decay == other.m_since_decay;
}

} // namespace ctq
