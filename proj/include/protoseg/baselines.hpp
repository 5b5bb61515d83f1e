#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "protoseg/embedding.hpp"
#include "protoseg/matrix.hpp"

namespace protoseg {

enum class Scheme { Nonparametric, ParametricSoftmax, ParametricQuery };

enum class HeadVariant { SoftmaxProjection, PixelQuery };

// Head-parameter accounting for the scale study: a parametric head carries
// C*K*D learnable prototype parameters, a nonparametric one carries none.
struct HeadParamCount {
    Scheme scheme;
    int classes = 0;
    int protos_per_class = 0;
    int dim = 0;
    int64_t learnable_head_params = 0;
};

HeadParamCount param_count(Scheme scheme, int classes, int protos_per_class, int dim);

// Fully learnable classification head. With one vector per class this is the
// softmax projection (scores w_c.i, optional bias) or the pixel-query rule
// (scores between L2-normalized queries and embeddings). With K > 1 vectors
// per class, the per-class score is the best over that class's vectors, and
// the gradient routes to the winning vector only.
class ParametricHead {
public:
    static ParametricHead init(HeadVariant variant, int classes, int protos_per_class, int dim,
                               uint64_t seed, bool with_bias = false);

    Matrix posterior(const EmbeddingBatch& emb) const;  // N x C, rows sum to 1

    struct CeGradients {
        double loss = 0.0;
        Matrix weights;                 // (C*K) x D
        std::vector<double> bias;       // C (empty when bias disabled)
        Matrix embeddings;              // N x D, d loss / d embedding rows
    };
    CeGradients ce_gradients(const EmbeddingBatch& emb, const LabelBatch& labels) const;

    // One SGD step on the cross-entropy of posterior(). PixelQuery rows are
    // re-normalized after the step (scores depend only on the direction).
    void train_step(const EmbeddingBatch& emb, const LabelBatch& labels, double lr);
    void apply_step(const CeGradients& grads, double lr);

    HeadVariant variant() const { return variant_; }
    int classes() const { return classes_; }
    int protos_per_class() const { return protos_per_class_; }
    int dim() const { return w_.cols(); }
    bool has_bias() const { return !bias_.empty(); }
    const Matrix& weights() const { return w_; }
    const std::vector<double>& bias_terms() const { return bias_; }
    void set_weights(Matrix w);
    int64_t learnable_params() const;

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static ParametricHead load(std::istream& in);
    static ParametricHead load_file(const std::string& path);

private:
    ParametricHead() = default;
    void score_batch(const EmbeddingBatch& emb, Matrix& scores, std::vector<int>* argmax_k) const;

    HeadVariant variant_ = HeadVariant::SoftmaxProjection;
    int classes_ = 0;
    int protos_per_class_ = 1;
    Matrix w_;                  // (C*K) x D
    std::vector<double> bias_;  // per class, optional
};

// The shared form behind both parametric rules and the K=1 nonparametric
// posterior: p(c|i) = softmax over c of -<i, g_c>. The Cosine kind is the
// plain negative inner product here; rows of g need not be unit-norm.
Matrix unified_posterior(const Matrix& g, const EmbeddingBatch& emb, const DistanceMeasure& m);

}  // namespace protoseg
