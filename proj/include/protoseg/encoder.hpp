#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "protoseg/embedding.hpp"
#include "protoseg/matrix.hpp"

namespace protoseg {

struct SgdConfig {
    double learning_rate = 0.5;
    int iterations = 2000;
    int batch_size = 256;
    uint64_t seed = 1;
};

// Small MLP mapping raw input features to unit-norm D-dimensional embeddings.
// Affine layers with tanh between them (never after the last), followed by a
// row-wise L2 normalization. Forward/backward are hand-written; parameters
// are updated by plain SGD.
class MlpEncoder {
public:
    // sizes = [input_dim, hidden..., embed_dim]; at least one affine layer.
    // Weights uniform in +-1/sqrt(fan_in), biases zero.
    static MlpEncoder init(const std::vector<int>& sizes, uint64_t seed);

    struct Cache {
        std::vector<Matrix> activations;  // a_0 = input, ..., a_L = pre-normalization output
        Matrix output;                    // normalized rows
        std::vector<double> out_norms;    // ||a_L|| per row
        uint64_t version = 0;
    };

    struct Gradients {
        std::vector<Matrix> w;
        std::vector<std::vector<double>> b;
    };

    EmbeddingBatch forward(const Matrix& x, Cache* cache = nullptr) const;

    // Exact reverse-mode gradients of the whole composition, including the
    // final normalization. grad_embeddings is with respect to the normalized
    // output rows; an already-tangential upstream gradient passes through
    // unchanged (the projection is idempotent).
    Gradients backward(const Cache& cache, const Matrix& grad_embeddings) const;

    void sgd_step(const Gradients& grads, double lr);

    int layer_count() const { return static_cast<int>(w_.size()); }
    const std::vector<int>& sizes() const { return sizes_; }
    int input_dim() const { return sizes_.front(); }
    int embed_dim() const { return sizes_.back(); }
    const Matrix& weight(int layer) const { return w_[layer]; }
    const std::vector<double>& bias(int layer) const { return b_[layer]; }
    void set_weight(int layer, Matrix w);
    void set_bias(int layer, std::vector<double> b);
    uint64_t version() const { return version_; }

    // Text checkpoint: "PROTOENC1 <n_sizes> sizes..." then per layer the
    // weight rows followed by one bias row, 17 significant digits.
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static MlpEncoder load(std::istream& in);
    static MlpEncoder load_file(const std::string& path);

    // parameter equality; the staleness counter is deliberately ignored
    bool operator==(const MlpEncoder& o) const {
        return sizes_ == o.sizes_ && w_ == o.w_ && b_ == o.b_;
    }

private:
    MlpEncoder() = default;

    std::vector<int> sizes_;
    std::vector<Matrix> w_;                // per layer: out x in
    std::vector<std::vector<double>> b_;   // per layer: out
    uint64_t version_ = 0;
};

}  // namespace protoseg
