#include "condlr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <zlib.h>

namespace condlr {

void Dataset::validate() const {
    if (features.rows != static_cast<int>(labels.size()))
        throw DataError("dataset: feature/label count mismatch");
    if (num_classes <= 0) throw DataError("dataset: num_classes must be positive");
    for (double x : features.data)
        if (x < 0.0 || x > 1.0) throw DataError("dataset: feature outside [0,1]");
    for (int lab : labels)
        if (lab < 0 || lab >= num_classes) throw DataError("dataset: label out of range");
}

Dataset Dataset::slice(int begin, int end) const {
    if (begin < 0 || end > size() || begin >= end) throw DataError("dataset slice out of range");
    Dataset out;
    out.features = Matrix(end - begin, dim());
    out.labels.assign(labels.begin() + begin, labels.begin() + end);
    std::copy(features.data.begin() + static_cast<std::size_t>(begin) * dim(),
              features.data.begin() + static_cast<std::size_t>(end) * dim(),
              out.features.data.begin());
    out.num_classes = num_classes;
    out.name = name;
    out.seed = seed;
    return out;
}

namespace {

std::vector<unsigned char> read_file_maybe_gzip(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) {
        // gzip container; inflate fully into memory.
        z_stream strm{};
        if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK)
            throw DataError("gzip init failed for " + path);
        std::vector<unsigned char> out;
        out.reserve(raw.size() * 4);
        unsigned char buf[1 << 15];
        strm.next_in = raw.data();
        strm.avail_in = static_cast<uInt>(raw.size());
        int rc = Z_OK;
        while (rc != Z_STREAM_END) {
            strm.next_out = buf;
            strm.avail_out = sizeof(buf);
            rc = inflate(&strm, Z_NO_FLUSH);
            if (rc != Z_OK && rc != Z_STREAM_END) {
                inflateEnd(&strm);
                throw DataError("gzip payload corrupt in " + path);
            }
            out.insert(out.end(), buf, buf + (sizeof(buf) - strm.avail_out));
        }
        inflateEnd(&strm);
        return out;
    }
    return raw;
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t off, const std::string& path) {
    if (off + 4 > buf.size()) throw DataError("truncated IDX header in " + path);
    return (static_cast<std::uint32_t>(buf[off]) << 24) | (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 8) | static_cast<std::uint32_t>(buf[off + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

} // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path, int limit) {
    std::vector<unsigned char> img = read_file_maybe_gzip(images_path);
    std::vector<unsigned char> lab = read_file_maybe_gzip(labels_path);

    if (read_be32(img, 0, images_path) != kImagesMagic)
        throw DataError("bad IDX image magic in " + images_path);
    if (read_be32(lab, 0, labels_path) != kLabelsMagic)
        throw DataError("bad IDX label magic in " + labels_path);

    const std::uint32_t n_img = read_be32(img, 4, images_path);
    const std::uint32_t rows = read_be32(img, 8, images_path);
    const std::uint32_t cols = read_be32(img, 12, images_path);
    const std::uint32_t n_lab = read_be32(lab, 4, labels_path);
    if (n_img != n_lab) {
        std::ostringstream msg;
        msg << "IDX image/label count mismatch: " << n_img << " images vs " << n_lab << " labels";
        throw DataError(msg.str());
    }
    const std::size_t pixel_count = static_cast<std::size_t>(n_img) * rows * cols;
    if (img.size() < 16 + pixel_count) throw DataError("truncated IDX image payload in " + images_path);
    if (lab.size() < 8 + n_lab) throw DataError("truncated IDX label payload in " + labels_path);

    int n = static_cast<int>(n_img);
    if (limit >= 0) n = std::min(n, limit);
    const int d = static_cast<int>(rows * cols);

    Dataset ds;
    ds.features = Matrix(n, d);
    ds.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t base = 16 + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j)
            ds.features(i, j) = img[base + static_cast<std::size_t>(j)] / 255.0;
        ds.labels[static_cast<std::size_t>(i)] = lab[8 + static_cast<std::size_t>(i)];
    }
    int max_label = 0;
    for (int l : ds.labels) max_label = std::max(max_label, l);
    ds.num_classes = std::max(10, max_label + 1);
    ds.name = "mnist";
    ds.validate();
    return ds;
}

void write_idx_images(const std::string& path, const Matrix& features, int img_rows, int img_cols) {
    if (img_rows * img_cols != features.cols)
        throw DataError("write_idx_images: rows*cols must equal the feature width");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    write_be32(out, kImagesMagic);
    write_be32(out, static_cast<std::uint32_t>(features.rows));
    write_be32(out, static_cast<std::uint32_t>(img_rows));
    write_be32(out, static_cast<std::uint32_t>(img_cols));
    for (double x : features.data) {
        const int q = static_cast<int>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
        out.put(static_cast<char>(static_cast<unsigned char>(q)));
    }
    if (!out) throw DataError("short write to " + path);
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    write_be32(out, kLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) {
        if (l < 0 || l > 255) throw DataError("label does not fit in a byte");
        out.put(static_cast<char>(static_cast<unsigned char>(l)));
    }
    if (!out) throw DataError("short write to " + path);
}

Dataset synth_blobs(int n_per_class, int num_classes, int d, double separation, std::uint64_t seed) {
    if (n_per_class < 1 || num_classes < 2) throw DataError("synth_blobs: need >= 2 classes with samples");
    if (separation < 0.0) throw DataError("synth_blobs: separation must be nonnegative");
    if (d < num_classes - 1)
        throw DataError("synth_blobs: simplex placement needs d >= num_classes - 1");

    Rng rng(seed);
    const int k = num_classes;

    // Regular simplex: unit vectors e_i in R^k, centered, expressed in an
    // orthonormal basis of the sum-zero subspace (k-1 dims), pairwise
    // distance normalized to 1.
    Matrix centered(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) centered(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / k;
    // Basis of the span of the centered vertices.
    ThinQR basis = thin_qr(Matrix::gaussian(k, k - 1, rng));
    // Orthogonalize against the all-ones direction so columns span sum-zero.
    Matrix q = basis.Q;
    for (int j = 0; j < k - 1; ++j) {
        double mean = 0.0;
        for (int i = 0; i < k; ++i) mean += q(i, j);
        mean /= k;
        for (int i = 0; i < k; ++i) q(i, j) -= mean;
    }
    q = thin_qr(q).Q;
    Matrix simplex = matmul(centered, q); // k x (k-1), pairwise distance sqrt(2)

    // Embed into d dims with a random orthonormal frame and scale so the
    // center spacing is `separation` against unit per-dimension noise.
    Matrix frame = thin_qr(Matrix::gaussian(d, k - 1, rng)).Q; // d x (k-1)
    Matrix centers = matmul(simplex, transpose(frame));        // k x d
    const double scale = separation / std::sqrt(2.0);
    for (double& x : centers.data) x *= scale;

    const int n = n_per_class * num_classes;
    Dataset ds;
    ds.features = Matrix(n, d);
    ds.labels.resize(static_cast<std::size_t>(n));
    int row = 0;
    for (int c = 0; c < k; ++c) {
        for (int s = 0; s < n_per_class; ++s, ++row) {
            ds.labels[static_cast<std::size_t>(row)] = c;
            for (int j = 0; j < d; ++j)
                ds.features(row, j) = centers(c, j) + rng.normal();
        }
    }

    // Global min-max rescale into [0,1].
    double lo = ds.features.data[0], hi = ds.features.data[0];
    for (double x : ds.features.data) { lo = std::min(lo, x); hi = std::max(hi, x); }
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& x : ds.features.data) x = (x - lo) / span;

    ds.num_classes = num_classes;
    ds.seed = seed;
    std::ostringstream nm;
    nm << "blobs_k" << num_classes << "_d" << d << "_sep" << separation;
    ds.name = nm.str();
    ds.validate();
    return ds;
}

std::vector<std::vector<int>> batches(const Dataset& ds, const BatchPlan& plan, int epoch) {
    if (plan.batch_size < 1) throw DataError("batch size must be >= 1");
    const int n = ds.size();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    if (plan.shuffle) {
        Rng rng = Rng::derive(plan.seed, static_cast<std::uint64_t>(epoch));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
    }
    std::vector<std::vector<int>> out;
    for (int start = 0; start < n; start += plan.batch_size) {
        const int end = std::min(start + plan.batch_size, n);
        if (plan.drop_last && end - start < plan.batch_size) break;
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
    Matrix out(static_cast<int>(idx.size()), m.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int r = idx[i];
        if (r < 0 || r >= m.rows) throw DimensionError("gather_rows: index out of range");
        std::copy(m.data.begin() + static_cast<std::size_t>(r) * m.cols,
                  m.data.begin() + static_cast<std::size_t>(r + 1) * m.cols,
                  out.data.begin() + i * static_cast<std::size_t>(m.cols));
    }
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[static_cast<std::size_t>(idx[i])];
    return out;
}

} // namespace condlr
