#include "protoseg/losses.hpp"

#include <cmath>

#include "protoseg/parallel.hpp"

namespace protoseg {

namespace {

// Gradient through the row normalization, evaluated at a unit input: the
// tangential projection g - (g.u)u. Applied only when the batch rows are
// unit-norm (i.e. they came out of a normalizing encoder); otherwise the raw
// gradient with respect to the rows as given is returned.
void project_rows(Matrix& grad, const EmbeddingBatch& emb) {
    if (!emb.rows_unit()) return;
    const int n = grad.rows();
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < n; ++i) {
        auto g = grad.row(i);
        const auto u = emb.row(i);
        const double gu = dot(g, u);
        for (size_t d = 0; d < g.size(); ++d) g[d] -= gu * u[d];
    }
}

// d(dist(u, p))/du for one measure, accumulated into g with weight w.
void accumulate_distance_grad(std::span<double> g, std::span<const double> u,
                              std::span<const double> p, const DistanceMeasure& m, double w) {
    switch (m.kind) {
        case DistanceMeasure::Kind::Cosine:
            for (size_t d = 0; d < g.size(); ++d) g[d] -= w * p[d];
            return;
        case DistanceMeasure::Kind::Standard: {
            const double r = std::sqrt(squared_distance(u, p));
            if (r < 1e-12) return;  // subgradient 0 at the kink
            const double s = w / r;
            for (size_t d = 0; d < g.size(); ++d) g[d] += s * (u[d] - p[d]);
            return;
        }
        case DistanceMeasure::Kind::Huberized: {
            const double sq = squared_distance(u, p);
            const double s = w / (m.delta * std::sqrt(sq / (m.delta * m.delta) + 1.0));
            for (size_t d = 0; d < g.size(); ++d) g[d] += s * (u[d] - p[d]);
            return;
        }
    }
}

void check_assignments(const EmbeddingBatch& emb, const PixelAssignments& assignments,
                       const PrototypeBank& bank) {
    if (assignments.size() != static_cast<size_t>(emb.count()))
        throw DimensionMismatchError("loss: assignment count does not match batch size");
    if (emb.dim() != bank.dim()) throw DimensionMismatchError("loss: embedding dim mismatch");
    for (const ProtoRef& a : assignments) {
        if (!a.assigned()) throw MissingAssignmentError("loss: pixel without a hard assignment");
        if (a.c >= bank.classes() || a.k < 0 || a.k >= bank.protos_per_class())
            throw InvalidShapeError("loss: assignment index out of range");
    }
}

}  // namespace

LossValue loss_ce(const EmbeddingBatch& emb, const LabelBatch& labels, const PrototypeBank& bank,
                  const DistanceMeasure& m) {
    if (labels.size() != emb.count())
        throw DimensionMismatchError("loss_ce: label count does not match batch size");
    if (labels.class_count > bank.classes())
        throw DimensionMismatchError("loss_ce: more label classes than bank classes");

    const PixelClassDistances pcd = pixel_class_distances(emb, bank, m);
    const int n = emb.count();
    const int cc = bank.classes();
    const double inv_n = 1.0 / n;

    LossValue out{0.0, Matrix(n, emb.dim())};
    std::vector<double> per_pixel(n);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto u = emb.row(i);
        const int ci = labels.labels[i];

        double smin = pcd.s(i, 0);
        for (int c = 1; c < cc; ++c) smin = std::min(smin, pcd.s(i, c));
        double z = 0.0;
        for (int c = 0; c < cc; ++c) z += std::exp(smin - pcd.s(i, c));
        // -log softmax(-s)[ci] = s_ci - smin + log z
        per_pixel[i] = pcd.s(i, ci) - smin + std::log(z);

        auto g = out.grad.row(i);
        for (int c = 0; c < cc; ++c) {
            const double post = std::exp(smin - pcd.s(i, c)) / z;
            const double w = ((c == ci ? 1.0 : 0.0) - post) * inv_n;
            if (w == 0.0) continue;
            accumulate_distance_grad(g, u, bank.proto(c, pcd.k_at(i, c)), m, w);
        }
    }
    for (double v : per_pixel) out.value += v;
    out.value *= inv_n;
    project_rows(out.grad, emb);
    return out;
}

LossValue loss_ppc(const EmbeddingBatch& emb, const PixelAssignments& assignments,
                   const PrototypeBank& bank, double tau) {
    check_assignments(emb, assignments, bank);
    if (tau <= 0.0) throw InvalidShapeError("loss_ppc: tau must be positive");
    if (!emb.rows_unit())
        throw NonNormalizedError("loss_ppc: embedding rows must be unit-norm");

    const int n = emb.count();
    const int cc = bank.classes();
    const int kk = bank.protos_per_class();
    const int protos = cc * kk;
    const double inv_tau = 1.0 / tau;
    const double inv_n = 1.0 / n;

    LossValue out{0.0, Matrix(n, emb.dim())};
    std::vector<double> per_pixel(n);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto u = emb.row(i);
        const int pos = assignments[i].c * kk + assignments[i].k;

        std::vector<double> logits(protos);
        double lmax = -1.0 / 0.0;
        for (int p = 0; p < protos; ++p) {
            logits[p] = dot(u, bank.proto(p / kk, p % kk)) * inv_tau;
            lmax = std::max(lmax, logits[p]);
        }
        double z = 0.0;
        for (int p = 0; p < protos; ++p) z += std::exp(logits[p] - lmax);
        per_pixel[i] = lmax + std::log(z) - logits[pos];

        auto g = out.grad.row(i);
        for (int p = 0; p < protos; ++p) {
            double w = std::exp(logits[p] - lmax) / z;
            if (p == pos) w -= 1.0;
            w *= inv_tau * inv_n;
            const auto proto = bank.proto(p / kk, p % kk);
            for (size_t d = 0; d < g.size(); ++d) g[d] += w * proto[d];
        }
    }
    for (double v : per_pixel) out.value += v;
    out.value *= inv_n;
    project_rows(out.grad, emb);
    return out;
}

LossValue loss_ppd(const EmbeddingBatch& emb, const PixelAssignments& assignments,
                   const PrototypeBank& bank) {
    check_assignments(emb, assignments, bank);
    if (!emb.rows_unit())
        throw NonNormalizedError("loss_ppd: embedding rows must be unit-norm");

    const int n = emb.count();
    const double inv_n = 1.0 / n;
    LossValue out{0.0, Matrix(n, emb.dim())};
    std::vector<double> per_pixel(n);
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto u = emb.row(i);
        const auto p = bank.proto(assignments[i].c, assignments[i].k);
        const double a = dot(u, p);
        per_pixel[i] = (1.0 - a) * (1.0 - a);
        auto g = out.grad.row(i);
        const double w = -2.0 * (1.0 - a) * inv_n;
        for (size_t d = 0; d < g.size(); ++d) g[d] = w * p[d];
    }
    for (double v : per_pixel) out.value += v;
    out.value *= inv_n;
    project_rows(out.grad, emb);
    return out;
}

LossBreakdown loss_total(const EmbeddingBatch& emb, const LabelBatch& labels,
                         const PixelAssignments& assignments, const PrototypeBank& bank,
                         const DistanceMeasure& m, const LossWeights& w) {
    const LossValue ce = loss_ce(emb, labels, bank, m);
    const LossValue ppc = loss_ppc(emb, assignments, bank, w.tau);
    const LossValue ppd = loss_ppd(emb, assignments, bank);

    LossBreakdown out;
    out.ce = ce.value;
    out.ppc = ppc.value;
    out.ppd = ppd.value;
    out.total = ce.value + w.lambda1 * ppc.value + w.lambda2 * ppd.value;
    out.grad = ce.grad;
    for (size_t i = 0; i < out.grad.size(); ++i)
        out.grad.data()[i] += w.lambda1 * ppc.grad.data()[i] + w.lambda2 * ppd.grad.data()[i];
    return out;
}

}  // namespace protoseg
