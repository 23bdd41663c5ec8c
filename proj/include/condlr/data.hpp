#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "condlr/linalg.hpp"

namespace condlr {

// Immutable sample container; features live in [0,1].
struct Dataset {
    Matrix features;           // N x d
    std::vector<int> labels;   // length N, values < num_classes
    int num_classes = 0;
    std::string name;
    std::uint64_t seed = 0;

    int size() const { return features.rows; }
    int dim() const { return features.cols; }
    void validate() const;
    Dataset slice(int begin, int end) const;
};

struct BatchPlan {
    int batch_size = 128;
    std::uint64_t seed = 0;
    bool drop_last = false;
    bool shuffle = true;
};

// IDX container reader. Accepts gzip-compressed files transparently (sniffed
// by magic). `limit` keeps a deterministic prefix.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       int limit = -1);

// Writers for the same container (used by `data gen` and the round-trip
// tests). Features are quantized to bytes with round(x * 255).
void write_idx_images(const std::string& path, const Matrix& features, int img_rows, int img_cols);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

// Gaussian blobs around simplex-spread class centers, min-max rescaled into
// [0,1]. Deterministic per seed. Requires d >= num_classes - 1.
Dataset synth_blobs(int n_per_class, int num_classes, int d, double separation, std::uint64_t seed);

// Index batches for one epoch; the permutation is seeded by (plan.seed, epoch).
std::vector<std::vector<int>> batches(const Dataset& ds, const BatchPlan& plan, int epoch);

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx);
std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& idx);

} // namespace condlr
