#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctq/codec.hpp"
#include "ctq/errors.hpp"

#include <random>
#include <vector>

using namespace ctq;

namespace {

CodecConfig lossless_cfg(uint32_t alphabet, unsigned q2, int depth = 2) {
    CodecConfig cfg;
    cfg.alphabet = alphabet;
    cfg.depth = depth;
    cfg.q2 = q2;
    cfg.m3 = 2;
    return cfg;
}

// alphabet = high_levels + 1 (the last symbol is the strongest-component
// marker), identity-compander fallback grid.
SymbolCodec lossy_codec(int high_levels, unsigned q2, uint32_t m3,
                        FallbackPolicy policy = FallbackPolicy::Reproject,
                        uint64_t update_interval = 100) {
    CodecConfig cfg;
    cfg.alphabet = static_cast<uint32_t>(high_levels) + 1;
    cfg.depth = 2;
    cfg.q2 = q2;
    cfg.m3 = m3;
    cfg.update_interval = update_interval;
    cfg.fallback_update = policy;
    return SymbolCodec(cfg, make_fallback_maps(high_levels, CompanderParams::identity(), m3));
}

} // namespace

TEST_CASE("probability ranking with the fixed tie rule") {
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(4, 0.25);
    CHECK(rank_symbols(uniform) == std::vector<Symbol>{0, 1, 2, 3});

    Eigen::VectorXd skew(3);
    skew << 0.1, 0.7, 0.2;
    CHECK(rank_symbols(skew) == std::vector<Symbol>{1, 2, 0});

    Eigen::VectorXd tied(3);
    tied << 3.0 / 7.0, 1.0 / 7.0, 3.0 / 7.0;
    CHECK(rank_symbols(tied) == std::vector<Symbol>{0, 2, 1});
}

TEST_CASE("width of fixed-length fields") {
    CHECK(ceil_log2(1) == 0);
    CHECK(ceil_log2(2) == 1);
    CHECK(ceil_log2(3) == 2);
    CHECK(ceil_log2(4) == 2);
    CHECK(ceil_log2(5) == 3);
    CHECK(ceil_log2(256) == 8);
}

TEST_CASE("configuration validation") {
    CHECK_NOTHROW(validate(lossless_cfg(2, 1)));
    auto bad = [](auto mutate) {
        CodecConfig cfg = lossless_cfg(4, 2);
        mutate(cfg);
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    };
    bad([](CodecConfig& c) { c.alphabet = 1; });
    bad([](CodecConfig& c) { c.q2 = 0; });
    bad([](CodecConfig& c) { c.q2 = 31; });
    bad([](CodecConfig& c) { c.m3 = 1; });
    bad([](CodecConfig& c) { c.update_interval = 0; });
    bad([](CodecConfig& c) { c.gamma = 1.0; });
    bad([](CodecConfig& c) { c.decay = DecayConfig{1.5, 10}; });
    bad([](CodecConfig& c) { c.decay = DecayConfig{0.5, 0}; });
}

TEST_CASE("midpoint requantization between grids") {
    auto id = CompanderParams::identity();
    CHECK(reproject_symbol(0, 2, id, 4, id) == 1);
    CHECK(reproject_symbol(2, 3, id, 8, id) == 6);
    for (Symbol s = 0; s < 5; ++s) CHECK(reproject_symbol(s, 5, id, 5, id) == s);
    // The coarse marker value maps to the fine special symbol.
    CHECK(reproject_symbol(3, 3, id, 8, id) == 8);
    CHECK_THROWS_AS(reproject_symbol(4, 3, id, 8, id), std::invalid_argument);
}

TEST_CASE("fallback maps pair coarse and fine grids") {
    auto maps = make_fallback_maps(7, CompanderParams::identity(), 4);
    REQUIRE(maps.high_to_low.size() == 8);   // 7 levels + special
    REQUIRE(maps.low_to_high.size() == 4);   // 3 levels + marker
    CHECK(maps.high_to_low[7] == 3);
    CHECK(maps.low_to_high[3] == 7);
    for (Symbol low = 0; low < 3; ++low)
        CHECK(maps.low_to_high[low] ==
              reproject_symbol(low, 3, CompanderParams::identity(), 7,
                               CompanderParams::identity()));
    for (Symbol high = 0; high < 7; ++high) CHECK(maps.high_to_low[high] < 3);
}

TEST_CASE("codeword patterns on a fresh codec") {
    // Fresh state ranks symbols by index, so ranks are known exactly.
    SUBCASE("top-ranked symbol costs a single zero bit") {
        SymbolCodec enc(lossless_cfg(2, 1));
        BitWriter out;
        auto r = enc.encode(0, out);
        CHECK(r.branch == 0);
        CHECK(r.bits == 1);
        CHECK(out.bit_count() == 1);
        CHECK(out.bytes()[0] == 0x00);
    }
    SUBCASE("in-list symbol writes its offset after the 10 prefix") {
        SymbolCodec enc(lossless_cfg(9, 3));
        BitWriter out;
        auto r = enc.encode(5, out);    // rank 5, offset 4 -> "10" + "100"
        CHECK(r.branch == 1);
        CHECK(r.bits == 5);
        CHECK(out.bit_count() == 5);
        CHECK(out.bytes()[0] == 0xA0);  // 10100 padded with zeros
    }
    SUBCASE("out-of-list symbol writes the coarse index after 11") {
        SymbolCodec enc = lossy_codec(7, 1, 4);
        BitWriter out;
        auto r = enc.encode(7, out);    // special symbol, coarse marker 3
        CHECK(r.branch == 2);
        CHECK(r.bits == 4);             // "11" + 2 bits
        CHECK(r.written == 7);          // marker reprojects to the special
        CHECK(out.bytes()[0] == 0xF0);  // 1111
    }
}

TEST_CASE("fresh rank queries") {
    SymbolCodec c(lossless_cfg(4, 2));
    CHECK(c.top_symbol() == 0);
    for (Symbol s = 0; s < 4; ++s) {
        CHECK(c.current_rank(s) == s);
        CHECK(c.symbol_at_rank(s) == s);
    }
    // After repeated sightings another symbol takes over the top rank.
    for (int i = 0; i < 8; ++i) c.observe_known(2);
    CHECK(c.top_symbol() == 2);
    CHECK(c.current_rank(2) == 0);
}

TEST_CASE("lossless round trip keeps both sides identical") {
    const uint32_t m = 4;
    CodecConfig cfg = lossless_cfg(m, 2);
    cfg.update_interval = 50;
    SymbolCodec enc(cfg), dec(cfg);

    std::mt19937 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> other(1, 3);
    std::vector<Symbol> input(10000);
    Symbol prev = 0;
    for (auto& s : input) {          // sticky first-order source
        s = (u(rng) < 0.8) ? prev : static_cast<Symbol>((prev + other(rng)) % m);
        prev = s;
    }

    BitWriter out;
    for (Symbol s : input) {
        auto r = enc.encode(s, out);
        CHECK(r.written == s);
    }

    BitReader in(out.bytes().data(), out.bit_count());
    for (size_t i = 0; i < input.size(); ++i) {
        auto d = dec.decode(in);
        REQUIRE(d.symbol == input[i]);
        CHECK(d.branch < 2);
    }
    CHECK(in.remaining() == 0);
    CHECK(enc.state_equals(dec));
    CHECK(enc.snapshot() == dec.snapshot());
    // Predictable source compresses below the raw 2 bits/symbol.
    CHECK(static_cast<double>(out.bit_count()) / input.size() < 2.0);
}

TEST_CASE("lossy round trip under both fallback policies") {
    for (FallbackPolicy policy : {FallbackPolicy::Reproject, FallbackPolicy::Skip}) {
        CAPTURE(static_cast<int>(policy));
        SymbolCodec enc = lossy_codec(8, 1, 4, policy);
        SymbolCodec dec = lossy_codec(8, 1, 4, policy);
        auto maps = make_fallback_maps(8, CompanderParams::identity(), 4);

        std::mt19937 rng(1234);
        std::discrete_distribution<int> source({30, 5, 5, 20, 5, 5, 5, 5, 20});
        BitWriter out;
        std::vector<Symbol> input(1000), written(1000);
        for (auto& s : input) s = static_cast<Symbol>(source(rng));
        for (size_t i = 0; i < input.size(); ++i) {
            auto r = enc.encode(input[i], out);
            written[i] = r.written;
            if (r.branch < 2) {
                CHECK(r.written == input[i]);
            } else {
                CHECK(r.written == maps.low_to_high[maps.high_to_low[input[i]]]);
            }
        }

        // A replica encoder advances in lockstep with the decoder so the
        // synchronization invariant can be checked after every symbol.
        SymbolCodec replica = lossy_codec(8, 1, 4, policy);
        BitWriter scratch;
        BitReader in(out.bytes().data(), out.bit_count());
        for (size_t i = 0; i < input.size(); ++i) {
            auto d = dec.decode(in);
            REQUIRE(d.symbol == written[i]);
            replica.encode(input[i], scratch);
            REQUIRE(replica.state_equals(dec));
        }
        CHECK(in.remaining() == 0);
        CHECK(enc.state_equals(dec));
        CHECK(enc.snapshot() == dec.snapshot());
    }
}

TEST_CASE("skip policy leaves fallback symbols uncounted") {
    SymbolCodec reproject = lossy_codec(8, 1, 4, FallbackPolicy::Reproject);
    SymbolCodec skip = lossy_codec(8, 1, 4, FallbackPolicy::Skip);
    BitWriter o1, o2;
    int skip_fallbacks = 0;
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> sym(0, 8);
    for (int i = 0; i < 300; ++i) {
        Symbol s = static_cast<Symbol>(sym(rng));
        reproject.encode(s, o1);
        skip_fallbacks += skip.encode(s, o2).branch == 2;
    }
    REQUIRE(skip_fallbacks > 0);
    CHECK(reproject.tree().total_count() == 300.0);
    CHECK(skip.tree().total_count() == 300.0 - skip_fallbacks);
}

TEST_CASE("two-branch change codewords round trip") {
    SymbolCodec enc = lossy_codec(8, 2, 4);
    SymbolCodec dec = lossy_codec(8, 2, 4);
    auto maps = make_fallback_maps(8, CompanderParams::identity(), 4);

    BitWriter out;
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> sym(0, 8);
    std::vector<Symbol> input(500), written(500);
    std::vector<size_t> bits(500);
    for (size_t i = 0; i < input.size(); ++i) {
        input[i] = static_cast<Symbol>(sym(rng));
        auto r = enc.encode_change(input[i], out);
        written[i] = r.written;
        bits[i] = r.bits;
        if (r.branch == 0) {
            CHECK(r.written == input[i]);
            CHECK(r.bits == 1 + 2);            // '0' + q2
        } else {
            CHECK(r.bits == 1 + 2);            // '1' + ceil(log2 m3)
            CHECK(r.written == maps.low_to_high[maps.high_to_low[input[i]]]);
        }
    }
    BitReader in(out.bytes().data(), out.bit_count());
    for (size_t i = 0; i < input.size(); ++i) {
        auto d = dec.decode_change(in);
        REQUIRE(d.symbol == written[i]);
        REQUIRE(d.bits == bits[i]);
    }
    CHECK(in.remaining() == 0);
    CHECK(enc.state_equals(dec));
}

TEST_CASE("explicit low-resolution index overrides the map") {
    SymbolCodec enc = lossy_codec(8, 1, 4);
    SymbolCodec dec = lossy_codec(8, 1, 4);
    BitWriter out;
    // Symbol 7 would map to coarse 2; the caller insists on coarse 1.
    auto r = enc.encode(7, out, Symbol{1});
    CHECK(r.branch == 2);
    auto maps = make_fallback_maps(8, CompanderParams::identity(), 4);
    CHECK(r.written == maps.low_to_high[1]);
    BitReader in(out.bytes().data(), out.bit_count());
    auto d = dec.decode(in);
    CHECK(d.branch == 2);
    CHECK(d.low == 1);
    CHECK(d.symbol == r.written);
    CHECK(enc.state_equals(dec));
}

TEST_CASE("fallback without maps is an error") {
    CodecConfig cfg = lossless_cfg(8, 1);   // 1 + 2 < 8, fallback reachable
    cfg.m3 = 4;
    SymbolCodec enc(cfg);
    BitWriter out;
    CHECK_NOTHROW(enc.encode(0, out));
    CHECK_THROWS_AS(enc.encode(7, out), MissingFallbackError);
}

TEST_CASE("corrupted rank field desynchronizes the decoder") {
    CodecConfig cfg = lossless_cfg(3, 2);   // in-list ranks reach 4 >= alphabet
    SymbolCodec dec(cfg);
    BitWriter out;
    out.put_bit(1);
    out.put_bit(0);
    out.put_bits(3, 2);                     // rank 1 + 3 = 4, outside m=3
    BitReader in(out.bytes().data(), out.bit_count());
    CHECK_THROWS_AS(dec.decode(in), DesyncError);
}

TEST_CASE("reading past the stream end reports truncation") {
    SymbolCodec dec(lossless_cfg(4, 2));
    BitWriter out;
    out.put_bit(1);                        // prefix promises more bits
    BitReader in(out.bytes().data(), out.bit_count());
    CHECK_THROWS_AS(dec.decode(in), TruncatedStreamError);
}

TEST_CASE("model re-prunes on the update cadence") {
    CodecConfig cfg = lossless_cfg(2, 1, 1);
    cfg.update_interval = 5;
    SymbolCodec fast(cfg);
    cfg.update_interval = 1000;
    SymbolCodec slow(cfg);
    BitWriter o1, o2;
    for (int i = 0; i < 40; ++i) {        // strict alternation, first order
        fast.encode(static_cast<Symbol>(i & 1), o1);
        slow.encode(static_cast<Symbol>(i & 1), o2);
    }
    CHECK(fast.model().leaves.size() == 2);
    CHECK(slow.model().leaves.size() == 1);   // cadence never reached
}

TEST_CASE("training updates statistics without cadence or bits") {
    CodecConfig cfg = lossless_cfg(2, 1, 1);
    cfg.update_interval = 5;
    SymbolCodec enc(cfg), dec(cfg);
    for (int i = 0; i < 40; ++i) {
        enc.train(static_cast<Symbol>(i & 1));
        dec.train(static_cast<Symbol>(i & 1));
    }
    CHECK(enc.model().leaves.size() == 1);    // no prune during training
    enc.finish_training();
    dec.finish_training();
    CHECK(enc.model().leaves.size() == 2);    // one prune at the end
    CHECK(enc.state_equals(dec));

    BitWriter out;
    for (int i = 0; i < 100; ++i) enc.encode(static_cast<Symbol>(i & 1), out);
    // The alternation is fully predicted: every symbol costs one bit.
    CHECK(out.bit_count() == 100);
}

TEST_CASE("count decay runs on its own cadence") {
    CodecConfig cfg = lossless_cfg(2, 1);
    cfg.decay = DecayConfig{0.5, 10};
    SymbolCodec enc(cfg), dec(cfg);
    BitWriter out;
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int i = 0; i < 20; ++i) enc.encode(static_cast<Symbol>(bit(rng)), out);
    // 10 counts halved, plus 10 more, halved again.
    CHECK(enc.tree().total_count() == doctest::Approx(7.5).epsilon(1e-12));
    BitReader in(out.bytes().data(), out.bit_count());
    for (int i = 0; i < 20; ++i) dec.decode(in);
    CHECK(enc.state_equals(dec));
}

TEST_CASE("sticky sources compress below the raw symbol width") {
    SymbolCodec enc = lossy_codec(7, 2, 4);   // alphabet 8, 3 raw bits
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> jump(1, 7);
    Symbol state = 3;
    for (int i = 0; i < 2000; ++i) {
        if (u(rng) >= 0.95) state = static_cast<Symbol>((state + jump(rng)) % 8);
        enc.train(state);
    }
    enc.finish_training();
    BitWriter out;
    size_t n = 8000;
    for (size_t i = 0; i < n; ++i) {
        if (u(rng) >= 0.95) state = static_cast<Symbol>((state + jump(rng)) % 8);
        enc.encode(state, out);
    }
    CHECK(static_cast<double>(out.bit_count()) / static_cast<double>(n) < 3.0);
}
