#include "protoseg/encoder.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "protoseg/parallel.hpp"
#include "protoseg/rng.hpp"

namespace protoseg {

namespace {

// y = x * w^T + b, parallel over rows.
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    Matrix y(x.rows(), w.rows());
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < x.rows(); ++i) {
        const auto xi = x.row(i);
        auto yi = y.row(i);
        for (int o = 0; o < w.rows(); ++o) yi[o] = dot(xi, w.row(o)) + b[o];
    }
    return y;
}

}  // namespace

MlpEncoder MlpEncoder::init(const std::vector<int>& sizes, uint64_t seed) {
    if (sizes.size() < 2) throw ShapeMismatchError("MlpEncoder: need input and output sizes");
    for (int s : sizes)
        if (s < 1) throw ShapeMismatchError("MlpEncoder: layer sizes must be positive");

    MlpEncoder enc;
    enc.sizes_ = sizes;
    Rng rng(seed);
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        Matrix w(out, in);
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (size_t i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * scale;
        enc.w_.push_back(std::move(w));
        enc.b_.emplace_back(out, 0.0);
    }
    return enc;
}

EmbeddingBatch MlpEncoder::forward(const Matrix& x, Cache* cache) const {
    if (x.cols() != input_dim())
        throw ShapeMismatchError("MlpEncoder::forward: input dim mismatch");
    if (x.rows() < 1) throw ShapeMismatchError("MlpEncoder::forward: empty batch");

    std::vector<Matrix> acts;
    acts.reserve(w_.size() + 1);
    acts.push_back(x);
    for (size_t l = 0; l < w_.size(); ++l) {
        Matrix z = affine(acts.back(), w_[l], b_[l]);
        if (l + 1 < w_.size()) {
#pragma omp parallel for num_threads(thread_count()) schedule(static)
            for (int i = 0; i < z.rows(); ++i)
                for (int c = 0; c < z.cols(); ++c) z(i, c) = std::tanh(z(i, c));
        }
        acts.push_back(std::move(z));
    }

    Matrix out = acts.back();
    std::vector<double> norms(out.rows());
    for (int i = 0; i < out.rows(); ++i) {
        norms[i] = norm2(out.row(i));
        if (norms[i] < 1e-12)
            throw ZeroVectorError("MlpEncoder::forward: zero-norm output row");
        const double inv = 1.0 / norms[i];
        for (int c = 0; c < out.cols(); ++c) out(i, c) *= inv;
    }

    if (cache) {
        cache->activations = std::move(acts);
        cache->output = out;
        cache->out_norms = std::move(norms);
        cache->version = version_;
    }
    return EmbeddingBatch(std::move(out));
}

MlpEncoder::Gradients MlpEncoder::backward(const Cache& cache, const Matrix& grad_embeddings) const {
    if (cache.version != version_)
        throw StaleCacheError("MlpEncoder::backward: cache predates a parameter update");
    if (grad_embeddings.rows() != cache.output.rows() ||
        grad_embeddings.cols() != cache.output.cols())
        throw ShapeMismatchError("MlpEncoder::backward: upstream gradient shape mismatch");

    const int n = grad_embeddings.rows();
    const int layers = layer_count();

    // through normalization: g_z = (g - (g.u)u) / ||z||
    Matrix delta(n, embed_dim());
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto u = cache.output.row(i);
        const auto g = grad_embeddings.row(i);
        auto d = delta.row(i);
        const double gu = dot(g, u);
        const double inv = 1.0 / cache.out_norms[i];
        for (size_t c = 0; c < d.size(); ++c) d[c] = (g[c] - gu * u[c]) * inv;
    }

    Gradients grads;
    grads.w.resize(layers);
    grads.b.resize(layers);
    for (int l = layers - 1; l >= 0; --l) {
        const Matrix& a_prev = cache.activations[l];
        grads.w[l] = Matrix(w_[l].rows(), w_[l].cols());
        grads.b[l].assign(static_cast<size_t>(w_[l].rows()), 0.0);

#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int o = 0; o < w_[l].rows(); ++o) {
            auto gw = grads.w[l].row(o);
            double gb = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = delta(i, o);
                gb += d;
                const auto ap = a_prev.row(i);
                for (size_t c = 0; c < gw.size(); ++c) gw[c] += d * ap[c];
            }
            grads.b[l][o] = gb;
        }

        if (l > 0) {
            Matrix prev(n, w_[l].cols());
#pragma omp parallel for num_threads(thread_count()) schedule(static)
            for (int i = 0; i < n; ++i) {
                const auto di = delta.row(i);
                auto pi = prev.row(i);
                for (int c = 0; c < w_[l].cols(); ++c) {
                    double s = 0.0;
                    for (int o = 0; o < w_[l].rows(); ++o) s += di[o] * w_[l](o, c);
                    // tanh' = 1 - a^2 on the post-activation value
                    const double a = a_prev(i, c);
                    pi[c] = s * (1.0 - a * a);
                }
            }
            delta = std::move(prev);
        }
    }
    return grads;
}

void MlpEncoder::sgd_step(const Gradients& grads, double lr) {
    if (grads.w.size() != w_.size() || grads.b.size() != b_.size())
        throw ShapeMismatchError("MlpEncoder::sgd_step: gradient layer count mismatch");
    for (size_t l = 0; l < w_.size(); ++l) {
        if (grads.w[l].rows() != w_[l].rows() || grads.w[l].cols() != w_[l].cols() ||
            grads.b[l].size() != b_[l].size())
            throw ShapeMismatchError("MlpEncoder::sgd_step: gradient shape mismatch");
        for (size_t i = 0; i < w_[l].size(); ++i) w_[l].data()[i] -= lr * grads.w[l].data()[i];
        for (size_t i = 0; i < b_[l].size(); ++i) b_[l][i] -= lr * grads.b[l][i];
    }
    ++version_;
}

void MlpEncoder::set_weight(int layer, Matrix w) {
    if (w.rows() != w_[layer].rows() || w.cols() != w_[layer].cols())
        throw ShapeMismatchError("MlpEncoder::set_weight: shape mismatch");
    w_[layer] = std::move(w);
    ++version_;
}

void MlpEncoder::set_bias(int layer, std::vector<double> b) {
    if (b.size() != b_[layer].size())
        throw ShapeMismatchError("MlpEncoder::set_bias: shape mismatch");
    b_[layer] = std::move(b);
    ++version_;
}

void MlpEncoder::save(std::ostream& out) const {
    out << "PROTOENC1 " << sizes_.size();
    for (int s : sizes_) out << ' ' << s;
    out << '\n' << std::setprecision(17);
    for (size_t l = 0; l < w_.size(); ++l) {
        for (int o = 0; o < w_[l].rows(); ++o) {
            const auto row = w_[l].row(o);
            for (size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << row[c];
            out << '\n';
        }
        for (size_t c = 0; c < b_[l].size(); ++c) out << (c ? " " : "") << b_[l][c];
        out << '\n';
    }
    if (!out) throw IoFailureError("MlpEncoder::save: write failed");
}

void MlpEncoder::save_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoFailureError("MlpEncoder::save: cannot open " + path);
    save(f);
}

MlpEncoder MlpEncoder::load(std::istream& in) {
    std::string magic;
    size_t count = 0;
    if (!(in >> magic >> count) || magic != "PROTOENC1" || count < 2)
        throw FormatError("MlpEncoder::load: bad header", 1);
    std::vector<int> sizes(count);
    for (size_t i = 0; i < count; ++i)
        if (!(in >> sizes[i]) || sizes[i] < 1)
            throw FormatError("MlpEncoder::load: bad layer size", 1);

    MlpEncoder enc;
    enc.sizes_ = sizes;
    long line = 2;
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        Matrix w(sizes[l + 1], sizes[l]);
        for (size_t i = 0; i < w.size(); ++i)
            if (!(in >> w.data()[i])) throw FormatError("MlpEncoder::load: truncated weights", line);
        line += sizes[l + 1];
        std::vector<double> b(static_cast<size_t>(sizes[l + 1]));
        for (double& x : b)
            if (!(in >> x)) throw FormatError("MlpEncoder::load: truncated bias", line);
        ++line;
        enc.w_.push_back(std::move(w));
        enc.b_.push_back(std::move(b));
    }
    return enc;
}

MlpEncoder MlpEncoder::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoFailureError("MlpEncoder::load: cannot open " + path);
    return load(f);
}

}  // namespace protoseg
