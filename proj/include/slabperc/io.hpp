#pragma once

// Output plumbing shared by the CLI and tests: stable CSV formatting, FNV
// digests for the manifest, and import/export of configurations and coarse
// bitmaps with JSON headers.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "lattice.hpp"
#include "sampler.hpp"

namespace slabperc {

// Shortest round-trip formatting keeps CSV bodies byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }

private:
    std::ostream& os_;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw param_error("file_digest: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 14];
    while (is.read(buf, sizeof buf) || is.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
    char out[20];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

// Raw bit dump of a configuration: a one-line JSON header, then the packed
// words in little-endian hex, 64 bits per token.
inline void write_bitmap(std::ostream& os, const std::string& header_json, const Bitset& bits) {
    os << header_json << '\n';
    os << bits.size() << '\n';
    char buf[20];
    for (auto w : bits.words()) {
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(w));
        os << buf << '\n';
    }
}

inline Bitset read_bitmap(std::istream& is, std::string* header_json = nullptr) {
    std::string header;
    if (!std::getline(is, header)) throw param_error("bitmap: missing header");
    if (header_json) *header_json = header;
    std::size_t n = 0;
    is >> n;
    Bitset bits(n);
    for (std::size_t i = 0; i < bits.words().size(); ++i) {
        std::string tok;
        if (!(is >> tok)) throw param_error("bitmap: truncated words");
        bits.words()[i] = std::stoull(tok, nullptr, 16);
    }
    return bits;
}

} // namespace slabperc
