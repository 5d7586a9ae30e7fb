#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ctq {

// MSB-first bit sink. Codewords are concatenated back to back; the final
// byte is zero-padded and the exact bit count is kept separately.
class BitWriter {
public:
    void put_bit(int b) {
        if (m_fill == 0) m_bytes.push_back(0);
        if (b) m_bytes.back() |= static_cast<uint8_t>(1u << (7 - m_fill));
        m_fill = (m_fill + 1) & 7;
        ++m_bits;
    }

    // Writes the low `width` bits of `value`, most significant first.
    void put_bits(uint64_t value, unsigned width) {
        for (unsigned i = width; i-- > 0;)
            put_bit(static_cast<int>((value >> i) & 1u));
    }

    size_t bit_count() const { return m_bits; }
    const std::vector<uint8_t>& bytes() const { return m_bytes; }

private:
    std::vector<uint8_t> m_bytes;
    unsigned m_fill = 0;
    size_t m_bits = 0;
};

// MSB-first bit source over a fixed buffer with a hard bit limit.
class BitReader {
public:
    BitReader(const uint8_t* data, size_t bit_count)
        : m_data(data), m_limit(bit_count) {}

    explicit BitReader(const std::vector<uint8_t>& bytes)
        : m_data(bytes.data()), m_limit(bytes.size() * 8) {}

    int get_bit();                           // throws TruncatedStreamError past the limit
    uint64_t get_bits(unsigned width);

    size_t position() const { return m_pos; }
    size_t remaining() const { return m_limit - m_pos; }

private:
    const uint8_t* m_data;
    size_t m_limit;
    size_t m_pos = 0;
};

} // namespace ctq
