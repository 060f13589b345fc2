#include "cema/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace cema {

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf, 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw ParseError("checkpoint: truncated integer field");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(os, bits);
}

double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

constexpr char kMagic[4] = {'C', 'E', 'P', '1'};

} // namespace

void write_checkpoint(std::ostream& os, const ParamVector& params) {
    os.write(kMagic, 4);
    const auto& segs = params.layout()->segments();
    put_u64(os, segs.size());
    for (const auto& seg : segs) {
        put_u64(os, seg.name.size());
        os.write(seg.name.data(), static_cast<std::streamsize>(seg.name.size()));
        put_u64(os, seg.length);
    }
    for (double v : params.values()) put_f64(os, v);
    if (!os) throw ParseError("checkpoint: write failed");
}

void write_checkpoint_file(const std::string& path, const ParamVector& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("checkpoint: cannot open '" + path + "' for writing");
    write_checkpoint(os, params);
}

ParamVector read_checkpoint(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError("checkpoint: bad magic");
    }
    const std::uint64_t nseg = get_u64(is);
    std::vector<std::pair<std::string, std::size_t>> named_lengths;
    named_lengths.reserve(nseg);
    for (std::uint64_t s = 0; s < nseg; ++s) {
        const std::uint64_t name_len = get_u64(is);
        std::string name(name_len, '\0');
        is.read(name.data(), static_cast<std::streamsize>(name_len));
        if (!is) throw ParseError("checkpoint: truncated segment name");
        const std::uint64_t len = get_u64(is);
        named_lengths.emplace_back(std::move(name), len);
    }
    auto layout = ParamLayout::create(std::move(named_lengths));
    std::vector<double> values(layout->total_size());
    for (auto& v : values) v = get_f64(is);
    return ParamVector(std::move(layout), std::move(values));
}

ParamVector read_checkpoint_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("checkpoint: cannot open '" + path + "'");
    return read_checkpoint(is);
}

} // namespace cema
