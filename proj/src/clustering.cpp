#include "protoseg/clustering.hpp"

#include <cmath>

#include "protoseg/parallel.hpp"

namespace protoseg {

namespace {

// Serial-order total over a K x N matrix: per-row partials in parallel,
// combined in row order so the result is thread-count independent.
double total_sum(const Matrix& m) {
    std::vector<double> partial(m.rows(), 0.0);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (int c = 0; c < m.cols(); ++c) s += m(r, c);
        partial[r] = s;
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

}  // namespace

AssignmentMatrix sinkhorn_assign(const Matrix& protos, const Matrix& emb, double kappa,
                                 int iters) {
    if (kappa <= 0.0) throw InvalidKappaError("sinkhorn_assign: kappa must be positive");
    if (iters < 1) throw InvalidShapeError("sinkhorn_assign: iters must be >= 1");
    if (protos.rows() < 1 || emb.rows() < 1)
        throw InvalidShapeError("sinkhorn_assign: need at least one prototype and one pixel");
    if (protos.cols() != emb.cols())
        throw DimensionMismatchError("sinkhorn_assign: prototype and embedding dims differ");

    const int kk = protos.rows();
    const int n = emb.rows();

    // Similarity matrix sim[k][n] = p_k . x_n
    Matrix L(kk, n);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int k = 0; k < kk; ++k) {
        const auto p = protos.row(k);
        for (int i = 0; i < n; ++i) L(k, i) = dot(p, emb.row(i));
    }

    // exp((sim - max)/kappa): the shift cancels in the global normalization
    // below and keeps exp in (0, 1] at any kappa.
    double shift = L(0, 0);
    for (size_t i = 1; i < L.size(); ++i) shift = std::max(shift, L.data()[i]);
    const double inv_kappa = 1.0 / kappa;
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int k = 0; k < kk; ++k)
        for (int i = 0; i < n; ++i) L(k, i) = std::exp((L(k, i) - shift) * inv_kappa);

    const double total = total_sum(L);
    if (!(total > 0.0) || !std::isfinite(total))
        throw NumericalOverflowError("sinkhorn_assign: degenerate exponential mass");
    const double inv_total = 1.0 / total;
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int k = 0; k < kk; ++k)
        for (int i = 0; i < n; ++i) L(k, i) *= inv_total;

    std::vector<double> col_sum(n);
    for (int it = 0; it < iters; ++it) {
        // rows: L[k][.] /= rowsum * K
#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int k = 0; k < kk; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += L(k, i);
            const double inv = 1.0 / (s * kk);
            for (int i = 0; i < n; ++i) L(k, i) *= inv;
        }
        // columns: L[.][i] /= colsum * N
#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = 0; k < kk; ++k) s += L(k, i);
            col_sum[i] = 1.0 / (s * n);
        }
#pragma omp parallel for num_threads(thread_count()) schedule(static)
        for (int k = 0; k < kk; ++k)
            for (int i = 0; i < n; ++i) L(k, i) *= col_sum[i];
    }

    // each column sums to 1 after the final column normalization
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int k = 0; k < kk; ++k)
        for (int i = 0; i < n; ++i) L(k, i) *= n;

    if (!all_finite(L))
        throw NumericalOverflowError("sinkhorn_assign: non-finite assignment entry");
    return {std::move(L), kappa, iters};
}

HardAssignment harden(const AssignmentMatrix& assignment) {
    const Matrix& L = assignment.L;
    HardAssignment out{std::vector<int>(L.cols())};
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < L.cols(); ++i) {
        int best = 0;
        for (int k = 1; k < L.rows(); ++k)
            if (L(k, i) > L(best, i)) best = k;
        out.k_of[i] = best;
    }
    return out;
}

PixelAssignments cluster_batch_by_class(const EmbeddingBatch& emb, const LabelBatch& labels,
                                        const PrototypeBank& bank, double kappa, int iters) {
    if (labels.size() != emb.count())
        throw DimensionMismatchError("cluster_batch_by_class: batch sizes differ");
    if (labels.class_count > bank.classes())
        throw DimensionMismatchError("cluster_batch_by_class: more label classes than bank classes");
    if (emb.dim() != bank.dim())
        throw DimensionMismatchError("cluster_batch_by_class: embedding dim mismatch");

    PixelAssignments out(emb.count());

    // Gather pixel indices per class; classes with no pixels are skipped.
    std::vector<std::vector<int>> members(bank.classes());
    for (int i = 0; i < emb.count(); ++i) members[labels.labels[i]].push_back(i);

    for (int c = 0; c < bank.classes(); ++c) {
        const auto& idx = members[c];
        if (idx.empty()) continue;
        Matrix x(static_cast<int>(idx.size()), emb.dim());
        for (size_t j = 0; j < idx.size(); ++j) {
            const auto row = emb.row(idx[j]);
            std::copy(row.begin(), row.end(), x.row(static_cast<int>(j)).begin());
        }
        const AssignmentMatrix soft = sinkhorn_assign(bank.class_block(c), x, kappa, iters);
        const HardAssignment hard = harden(soft);
        for (size_t j = 0; j < idx.size(); ++j) out[idx[j]] = {c, hard.k_of[j]};
    }
    return out;
}

}  // namespace protoseg
