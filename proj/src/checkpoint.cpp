#include "condlr/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace condlr {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_matrix(std::ofstream& out, const Matrix& m) {
    put_u32(out, static_cast<std::uint32_t>(m.rows));
    put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (double x : m.data) put_f64(out, x);
}

struct Reader {
    std::ifstream in;
    std::string path;

    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw DataError("cannot open checkpoint: " + p);
    }
    void bytes(void* dst, std::size_t n) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (!in) throw DataError("truncated checkpoint: " + path);
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    double f64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    Matrix matrix() {
        const int rows = static_cast<int>(u32());
        const int cols = static_cast<int>(u32());
        if (rows <= 0 || cols <= 0 || rows > (1 << 24) || cols > (1 << 24))
            throw DataError("checkpoint matrix header corrupt: " + path);
        std::vector<double> data(static_cast<std::size_t>(rows) * cols);
        for (double& x : data) x = f64();
        return Matrix(rows, cols, std::move(data));
    }
};

void put_common(std::ofstream& out, const Activation& act, const std::optional<Vector>& bias) {
    out.put(static_cast<char>(act.kind));
    put_f64(out, act.param);
    out.put(bias ? 1 : 0);
}

} // namespace

void save_checkpoint(const std::string& path, const Network& net) {
    net.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(net.num_classes));
    put_u32(out, static_cast<std::uint32_t>(net.layers.size()));

    for (const Layer& l : net.layers) {
        std::visit([&](const auto& lay) {
            using T = std::decay_t<decltype(lay)>;
            if constexpr (std::is_same_v<T, DenseLayer>) {
                out.put(0);
                put_common(out, lay.activation, lay.bias);
                put_matrix(out, lay.W);
            } else if constexpr (std::is_same_v<T, FactorizedLayer>) {
                out.put(1);
                put_common(out, lay.activation, lay.bias);
                put_f64(out, lay.tau);
                put_f64(out, lay.s_band);
                put_f64(out, lay.eps_band);
                put_matrix(out, lay.U);
                put_matrix(out, lay.S);
                put_matrix(out, lay.V);
            } else {
                out.put(2);
                put_common(out, lay.activation, lay.bias);
                put_matrix(out, lay.U);
                put_matrix(out, lay.V);
            }
            const auto& bias = lay.bias;
            if (bias)
                for (double x : *bias) put_f64(out, x);
        }, l);
    }
    if (!out) throw DataError("short write to checkpoint: " + path);
}

Network load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a network checkpoint: " + path);
    const std::uint32_t version = r.u32();
    if (version != kVersion) throw DataError("unsupported checkpoint version in " + path);

    Network net;
    net.num_classes = static_cast<int>(r.u32());
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        unsigned char kind;
        r.bytes(&kind, 1);
        unsigned char act_kind;
        r.bytes(&act_kind, 1);
        if (act_kind > static_cast<unsigned char>(ActKind::SiLU))
            throw DataError("unknown activation tag in " + path);
        Activation act{static_cast<ActKind>(act_kind), r.f64()};
        unsigned char has_bias;
        r.bytes(&has_bias, 1);

        Layer layer;
        if (kind == 0) {
            DenseLayer d;
            d.activation = act;
            d.W = r.matrix();
            layer = std::move(d);
        } else if (kind == 1) {
            FactorizedLayer f;
            f.activation = act;
            f.tau = r.f64();
            f.s_band = r.f64();
            f.eps_band = r.f64();
            f.U = r.matrix();
            f.S = r.matrix();
            f.V = r.matrix();
            layer = std::move(f);
        } else if (kind == 2) {
            TwoFactorLayer t;
            t.activation = act;
            t.U = r.matrix();
            t.V = r.matrix();
            layer = std::move(t);
        } else {
            throw DataError("unknown layer kind in " + path);
        }
        if (has_bias) {
            Vector bias(static_cast<std::size_t>(layer_out_dim(layer)));
            for (double& x : bias) x = r.f64();
            layer_bias(layer) = std::move(bias);
        }
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

} // namespace condlr
