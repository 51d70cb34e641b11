#include "gnfbc/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "gnfbc/errors.hpp"

namespace gnfbc {

namespace {

constexpr char kMagic[6] = {'G', 'N', 'F', 'B', 'C', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw FormatError("weights file truncated");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
        throw FormatError("weights file truncated");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::uint32_t encode_kind(LayerKind k) { return static_cast<std::uint32_t>(k); }

LayerKind decode_kind(std::uint32_t v) {
    if (v > static_cast<std::uint32_t>(LayerKind::Linear)) {
        throw FormatError("weights file names unknown layer kind " + std::to_string(v));
    }
    return static_cast<LayerKind>(v);
}

} // namespace

void save_weights(const ModelStack& stack, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    os.write(kMagic, sizeof(kMagic));
    put_u32(os, static_cast<std::uint32_t>(stack.num_layers()));
    for (const LayerSpec& s : stack.specs) {
        put_u32(os, encode_kind(s.kind));
        put_u32(os, s.act == Activation::Relu ? 1 : 0);
        put_u32(os, static_cast<std::uint32_t>(s.in_dim));
        put_u32(os, static_cast<std::uint32_t>(s.out_dim));
        put_u32(os, static_cast<std::uint32_t>(s.sgc_hops));
        put_f64(os, s.gat_slope);
    }
    for (const DenseMatrix& m : stack.params) {
        put_u32(os, static_cast<std::uint32_t>(m.rows()));
        put_u32(os, static_cast<std::uint32_t>(m.cols()));
        for (std::size_t i = 0; i < m.size(); ++i) put_f64(os, m.data()[i]);
    }
    if (!os) throw ValidationError("failed writing " + path);
}

ModelStack load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open " + path);
    char magic[6];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError(path + ": bad magic, not a weights file");
    }
    const std::uint32_t layers = get_u32(is);
    ModelStack stack;
    for (std::uint32_t l = 0; l < layers; ++l) {
        LayerSpec s;
        s.kind = decode_kind(get_u32(is));
        s.act = get_u32(is) == 1 ? Activation::Relu : Activation::None;
        s.in_dim = get_u32(is);
        s.out_dim = get_u32(is);
        s.sgc_hops = get_u32(is);
        s.gat_slope = get_f64(is);
        stack.specs.push_back(s);
    }
    for (const LayerSpec& s : stack.specs) {
        stack.param_offsets.push_back(stack.params.size());
        const std::size_t n = layer_param_count(s.kind);
        for (std::size_t k = 0; k < n; ++k) {
            const std::uint32_t rows = get_u32(is);
            const std::uint32_t cols = get_u32(is);
            DenseMatrix m(rows, cols);
            for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = get_f64(is);
            stack.params.push_back(std::move(m));
        }
    }
    return stack;
}

} // namespace gnfbc
