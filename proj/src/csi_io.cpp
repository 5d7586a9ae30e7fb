#include "ctq/csi_io.hpp"
#include "ctq/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace ctq {

namespace {

const char kMagic[4] = {'C', 'S', 'I', '1'};

template <class T>
void put_le(std::string& out, T v) {
    for (size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_le(out, bits);
}

struct ByteCursor {
    const uint8_t* p;
    size_t n, pos = 0;
    uint64_t take(size_t width) {
        if (pos + width > n) throw FormatError("truncated file");
        uint64_t v = 0;
        for (size_t i = 0; i < width; ++i)
            v |= static_cast<uint64_t>(p[pos + i]) << (8 * i);
        pos += width;
        return v;
    }
    double take_f64() {
        uint64_t bits = take(8);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

} // namespace

void write_csi(const std::string& path, const Eigen::MatrixXcd& frames) {
    std::string buf;
    buf.append(kMagic, 4);
    put_le(buf, static_cast<uint32_t>(frames.rows()));
    put_le(buf, static_cast<uint64_t>(frames.cols()));
    for (Eigen::Index t = 0; t < frames.cols(); ++t)
        for (Eigen::Index i = 0; i < frames.rows(); ++i) {
            put_f64(buf, frames(i, t).real());
            put_f64(buf, frames(i, t).imag());
        }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

void write_csi_csv(const std::string& path, const Eigen::MatrixXcd& frames) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(17);
    for (Eigen::Index t = 0; t < frames.cols(); ++t) {
        for (Eigen::Index i = 0; i < frames.rows(); ++i) {
            if (i) out << ',';
            out << frames(i, t).real() << ',' << frames(i, t).imag();
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXcd read_csi(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) {
        ByteCursor c{bytes.data(), bytes.size(), 4};
        uint32_t n_t = static_cast<uint32_t>(c.take(4));
        uint64_t n = c.take(8);
        if (n_t == 0) throw FormatError("zero antenna count");
        Eigen::MatrixXcd frames(n_t, static_cast<Eigen::Index>(n));
        for (uint64_t t = 0; t < n; ++t)
            for (uint32_t i = 0; i < n_t; ++i) {
                double re = c.take_f64();
                double im = c.take_f64();
                frames(i, static_cast<Eigen::Index>(t)) = {re, im};
            }
        return frames;
    }

    // CSV fallback: rows of re,im pairs.
    std::string text(bytes.begin(), bytes.end());
    std::istringstream lines(text);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::vector<double> vals;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ','))
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError("bad CSV cell: " + cell);
            }
        if (vals.empty() || vals.size() % 2 != 0)
            throw FormatError("CSV row must hold re,im pairs");
        if (!rows.empty() && rows.back().size() != vals.size())
            throw FormatError("inconsistent CSV row width");
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw FormatError("empty file: " + path);
    Eigen::Index n_t = static_cast<Eigen::Index>(rows[0].size() / 2);
    Eigen::MatrixXcd frames(n_t, static_cast<Eigen::Index>(rows.size()));
    for (size_t t = 0; t < rows.size(); ++t)
        for (Eigen::Index i = 0; i < n_t; ++i)
            frames(i, static_cast<Eigen::Index>(t)) = {rows[t][2 * i], rows[t][2 * i + 1]};
    return frames;
}

} // namespace ctq
