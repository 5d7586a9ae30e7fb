#include "ctq/bitstream.hpp"
#include "ctq/errors.hpp"

namespace ctq {

int BitReader::get_bit() {
    if (m_pos >= m_limit)
        throw TruncatedStreamError("bit source exhausted");
    int b = (m_data[m_pos >> 3] >> (7 - (m_pos & 7))) & 1;
    ++m_pos;
    return b;
}

uint64_t BitReader::get_bits(unsigned width) {
    uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i)
        v = (v << 1) | static_cast<uint64_t>(get_bit());
    return v;
}

} // namespace ctq
