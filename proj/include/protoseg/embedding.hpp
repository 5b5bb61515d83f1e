#pragma once

#include <span>
#include <vector>

#include "protoseg/matrix.hpp"

namespace protoseg {

class PrototypeBank;

// Distance between a pixel embedding and a prototype. Cosine is the default
// throughout; Standard and Huberized are the ablation alternatives.
struct DistanceMeasure {
    enum class Kind { Cosine, Standard, Huberized };
    Kind kind = Kind::Cosine;
    double delta = 0.1;  // Huberized only

    static DistanceMeasure cosine() { return {Kind::Cosine, 0.1}; }
    static DistanceMeasure standard() { return {Kind::Standard, 0.1}; }
    static DistanceMeasure huberized(double delta = 0.1) { return {Kind::Huberized, delta}; }
};

// Returns v / ||v||. Throws ZeroVectorError if ||v|| < 1e-12.
std::vector<double> l2_normalize(std::span<const double> v);
// In-place variant used by the hot paths.
void l2_normalize_inplace(std::span<double> v);

// Cosine: -x.y in [-1, 1], both inputs must be unit-norm (checked to 1e-6).
// Standard: ||x - y||. Huberized: delta*(sqrt(||x-y||^2/delta^2 + 1) - 1).
double distance(std::span<const double> x, std::span<const double> y, const DistanceMeasure& m);

// A flat batch of N embedding rows of dimension D. Rows are flagged unit-norm
// at construction; cosine-mode operations check the flag instead of
// re-scanning rows on every call.
class EmbeddingBatch {
public:
    explicit EmbeddingBatch(Matrix data);

    int count() const { return data_.rows(); }
    int dim() const { return data_.cols(); }
    std::span<const double> row(int i) const { return data_.row(i); }
    const Matrix& matrix() const { return data_; }
    bool rows_unit() const { return rows_unit_; }

private:
    Matrix data_;
    bool rows_unit_ = false;
};

// Ground-truth class per pixel, 0-based, all < class_count.
struct LabelBatch {
    std::vector<int> labels;
    int class_count = 0;

    LabelBatch(std::vector<int> l, int c);
    int size() const { return static_cast<int>(labels.size()); }
};

// s(i, c) = min over k of distance(embedding i, prototype (c, k));
// argmin_k(i, c) records which prototype achieved it (lowest k on ties).
struct PixelClassDistances {
    Matrix s;                   // N x C
    std::vector<int> argmin_k;  // N x C, row-major
    int k_at(int i, int c) const { return argmin_k[static_cast<size_t>(i) * s.cols() + c]; }
};

// Winner-take-all prediction: the (class, prototype) pair of the nearest
// prototype over all C*K candidates.
struct Prediction {
    int c = 0;
    int k = 0;
    bool operator==(const Prediction&) const = default;
};

PixelClassDistances pixel_class_distances(const EmbeddingBatch& emb, const PrototypeBank& bank,
                                          const DistanceMeasure& m);

std::vector<Prediction> classify(const EmbeddingBatch& emb, const PrototypeBank& bank,
                                 const DistanceMeasure& m);

// p(c|i) = softmax over classes of the negated pixel-class distances.
// Rows sum to 1; row argmax agrees with classify.
Matrix class_posterior(const EmbeddingBatch& emb, const PrototypeBank& bank,
                       const DistanceMeasure& m);

}  // namespace protoseg
