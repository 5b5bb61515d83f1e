#include "protoseg/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "protoseg/parallel.hpp"
#include "protoseg/prototype_bank.hpp"

namespace protoseg {

std::vector<double> l2_normalize(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    l2_normalize_inplace(out);
    return out;
}

void l2_normalize_inplace(std::span<double> v) {
    const double n = norm2(v);
    if (n < 1e-12) throw ZeroVectorError("l2_normalize: vector norm below 1e-12");
    const double inv = 1.0 / n;
    for (double& x : v) x *= inv;
}

namespace {

void check_unit(std::span<const double> v, const char* what) {
    if (std::abs(norm2(v) - 1.0) > 1e-6)
        throw NonNormalizedError(std::string("cosine distance requires unit-norm ") + what);
}

double huberized(double sq_dist, double delta) {
    return delta * (std::sqrt(sq_dist / (delta * delta) + 1.0) - 1.0);
}

}  // namespace

double distance(std::span<const double> x, std::span<const double> y, const DistanceMeasure& m) {
    if (x.size() != y.size()) throw DimensionMismatchError("distance: vector sizes differ");
    switch (m.kind) {
        case DistanceMeasure::Kind::Cosine: {
            check_unit(x, "x");
            check_unit(y, "y");
            return std::clamp(-dot(x, y), -1.0, 1.0);
        }
        case DistanceMeasure::Kind::Standard:
            return std::sqrt(squared_distance(x, y));
        case DistanceMeasure::Kind::Huberized:
            return huberized(squared_distance(x, y), m.delta);
    }
    throw Error("distance: unknown measure");
}

EmbeddingBatch::EmbeddingBatch(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 1) throw InvalidShapeError("EmbeddingBatch: need at least one row");
    if (data_.cols() < 2) throw InvalidShapeError("EmbeddingBatch: dimensionality must be >= 2");
    if (!all_finite(data_)) throw InvalidShapeError("EmbeddingBatch: non-finite entry");
    rows_unit_ = true;
    for (int i = 0; i < data_.rows() && rows_unit_; ++i)
        if (std::abs(norm2(data_.row(i)) - 1.0) > 1e-9) rows_unit_ = false;
}

LabelBatch::LabelBatch(std::vector<int> l, int c) : labels(std::move(l)), class_count(c) {
    if (class_count < 1) throw InvalidShapeError("LabelBatch: class count must be >= 1");
    for (int v : labels)
        if (v < 0 || v >= class_count) throw InvalidShapeError("LabelBatch: label out of range");
}

namespace {

// min over a class's prototypes, in one of the three measures. Cosine works
// on the raw dot product (one pass, min of -dot == -max of dot).
void class_row_distances(std::span<const double> x, const PrototypeBank& bank, int c,
                         const DistanceMeasure& m, double& best, int& best_k) {
    const int kk = bank.protos_per_class();
    best = 0.0;
    best_k = 0;
    for (int k = 0; k < kk; ++k) {
        double d;
        switch (m.kind) {
            case DistanceMeasure::Kind::Cosine:
                d = std::clamp(-dot(x, bank.proto(c, k)), -1.0, 1.0);
                break;
            case DistanceMeasure::Kind::Standard:
                d = std::sqrt(squared_distance(x, bank.proto(c, k)));
                break;
            default:
                d = huberized(squared_distance(x, bank.proto(c, k)), m.delta);
        }
        if (k == 0 || d < best) {
            best = d;
            best_k = k;
        }
    }
}

void check_compatible(const EmbeddingBatch& emb, const PrototypeBank& bank,
                      const DistanceMeasure& m) {
    if (emb.dim() != bank.dim())
        throw DimensionMismatchError("embedding dim does not match prototype dim");
    if (m.kind == DistanceMeasure::Kind::Cosine && !emb.rows_unit())
        throw NonNormalizedError("cosine mode requires unit-norm embedding rows");
}

}  // namespace

PixelClassDistances pixel_class_distances(const EmbeddingBatch& emb, const PrototypeBank& bank,
                                          const DistanceMeasure& m) {
    check_compatible(emb, bank, m);
    const int n = emb.count();
    const int cc = bank.classes();
    PixelClassDistances out{Matrix(n, cc), std::vector<int>(static_cast<size_t>(n) * cc)};
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto x = emb.row(i);
        for (int c = 0; c < cc; ++c) {
            double best;
            int best_k;
            class_row_distances(x, bank, c, m, best, best_k);
            out.s(i, c) = best;
            out.argmin_k[static_cast<size_t>(i) * cc + c] = best_k;
        }
    }
    return out;
}

std::vector<Prediction> classify(const EmbeddingBatch& emb, const PrototypeBank& bank,
                                 const DistanceMeasure& m) {
    const PixelClassDistances pcd = pixel_class_distances(emb, bank, m);
    const int n = emb.count();
    const int cc = bank.classes();
    std::vector<Prediction> out(n);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < n; ++i) {
        int best_c = 0;
        for (int c = 1; c < cc; ++c)
            if (pcd.s(i, c) < pcd.s(i, best_c)) best_c = c;
        out[i] = {best_c, pcd.k_at(i, best_c)};
    }
    return out;
}

Matrix class_posterior(const EmbeddingBatch& emb, const PrototypeBank& bank,
                       const DistanceMeasure& m) {
    const PixelClassDistances pcd = pixel_class_distances(emb, bank, m);
    const int n = emb.count();
    const int cc = bank.classes();
    Matrix post(n, cc);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < n; ++i) {
        // softmax(-s) with the max logit subtracted
        double smin = pcd.s(i, 0);
        for (int c = 1; c < cc; ++c) smin = std::min(smin, pcd.s(i, c));
        double z = 0.0;
        for (int c = 0; c < cc; ++c) {
            post(i, c) = std::exp(smin - pcd.s(i, c));
            z += post(i, c);
        }
        const double inv = 1.0 / z;
        for (int c = 0; c < cc; ++c) post(i, c) *= inv;
    }
    return post;
}

}  // namespace protoseg
