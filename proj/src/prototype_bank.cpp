#include "protoseg/prototype_bank.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "protoseg/parallel.hpp"
#include "protoseg/rng.hpp"

namespace protoseg {

PrototypeBank PrototypeBank::init(int classes, int protos_per_class, int dim, uint64_t seed) {
    if (classes < 1 || protos_per_class < 1 || dim < 1)
        throw InvalidShapeError("PrototypeBank::init: all dimensions must be positive");
    PrototypeBank bank(classes, protos_per_class, dim);
    Rng rng(seed);
    for (int c = 0; c < classes; ++c) {
        for (int k = 0; k < protos_per_class; ++k) {
            auto p = bank.proto_mut(c, k);
            for (double& x : p) x = rng.normal();
            l2_normalize_inplace(p);
        }
    }
    return bank;
}

PrototypeBank PrototypeBank::from_rows(int classes, int protos_per_class, Matrix rows) {
    if (classes < 1 || protos_per_class < 1)
        throw InvalidShapeError("PrototypeBank::from_rows: C and K must be positive");
    if (rows.rows() != classes * protos_per_class)
        throw InvalidShapeError("PrototypeBank::from_rows: row count must be C*K");
    PrototypeBank bank(classes, protos_per_class, rows.cols());
    for (int r = 0; r < rows.rows(); ++r) {
        if (std::abs(norm2(rows.row(r)) - 1.0) > 1e-9)
            throw NonNormalizedError("PrototypeBank::from_rows: prototype row not unit-norm");
        auto dst = bank.proto_mut(r / protos_per_class, r % protos_per_class);
        std::copy(rows.row(r).begin(), rows.row(r).end(), dst.begin());
    }
    return bank;
}

Matrix PrototypeBank::class_block(int c) const {
    Matrix block(k_, d_);
    for (int k = 0; k < k_; ++k) {
        auto src = proto(c, k);
        std::copy(src.begin(), src.end(), block.row(k).begin());
    }
    return block;
}

UpdateStats PrototypeBank::update(const EmbeddingBatch& emb, const LabelBatch& labels,
                                  const PixelAssignments& assignments, double mu) {
    if (mu < 0.0 || mu > 1.0) throw InvalidShapeError("update: mu must lie in [0, 1]");
    if (emb.dim() != d_) throw DimensionMismatchError("update: embedding dim mismatch");
    if (labels.size() != emb.count() || assignments.size() != static_cast<size_t>(emb.count()))
        throw DimensionMismatchError("update: batch sizes differ");

    const int slots = c_ * k_;
    UpdateStats stats{std::vector<int>(slots, 0), std::vector<uint8_t>(slots, 0), 0.0};

    // Bucket pixel indices per (c, k); serial so bucket order is pixel order.
    std::vector<std::vector<int>> buckets(slots);
    for (int i = 0; i < emb.count(); ++i) {
        const ProtoRef& a = assignments[i];
        if (!a.assigned()) continue;
        if (a.c != labels.labels[i])
            throw ClassMismatchError("update: pixel assigned to a class other than its label");
        if (a.c >= c_ || a.k < 0 || a.k >= k_)
            throw InvalidShapeError("update: assignment index out of range");
        buckets[a.c * k_ + a.k].push_back(i);
    }

    std::vector<double> drift(slots, 0.0);
    int degenerate_slot = -1;  // exceptions must not escape the parallel region
#pragma omp parallel for num_threads(thread_count()) schedule(static)
    for (int slot = 0; slot < slots; ++slot) {
        const auto& idx = buckets[slot];
        stats.count[slot] = static_cast<int>(idx.size());
        if (idx.empty()) continue;
        stats.updated[slot] = 1;
        if (mu == 1.0) continue;  // EMA degenerates to identity; keep bits stable

        std::vector<double> mean(d_, 0.0);
        for (int i : idx) {
            const auto row = emb.row(i);
            for (int d = 0; d < d_; ++d) mean[d] += row[d];
        }
        const double inv = 1.0 / static_cast<double>(idx.size());
        for (double& x : mean) x *= inv;
        if (norm2(mean) < 1e-12) {
#pragma omp atomic write
            degenerate_slot = slot;
            continue;
        }
        l2_normalize_inplace(mean);

        auto p = proto_mut(slot / k_, slot % k_);
        for (int d = 0; d < d_; ++d) mean[d] = mu * p[d] + (1.0 - mu) * mean[d];
        if (norm2(mean) < 1e-12) {
#pragma omp atomic write
            degenerate_slot = slot;
            continue;
        }
        l2_normalize_inplace(mean);
        double dsq = 0.0;
        for (int d = 0; d < d_; ++d) {
            const double delta = mean[d] - p[d];
            dsq += delta * delta;
            p[d] = mean[d];
        }
        drift[slot] = std::sqrt(dsq);
    }
    if (degenerate_slot >= 0)
        throw ZeroVectorError("update: assigned pixels average to the zero vector (slot " +
                              std::to_string(degenerate_slot) + ")");
    for (double d : drift) stats.max_drift = std::max(stats.max_drift, d);
    return stats;
}

void PrototypeBank::save(std::ostream& out) const {
    out << "PROTOBANK1 " << c_ << ' ' << k_ << ' ' << d_ << '\n';
    out << std::setprecision(17);
    for (int c = 0; c < c_; ++c) {
        for (int k = 0; k < k_; ++k) {
            const auto p = proto(c, k);
            for (int d = 0; d < d_; ++d) out << (d ? " " : "") << p[d];
            out << '\n';
        }
    }
    if (!out) throw IoFailureError("PrototypeBank::save: write failed");
}

void PrototypeBank::save_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoFailureError("PrototypeBank::save: cannot open " + path);
    save(f);
}

PrototypeBank PrototypeBank::load(std::istream& in) {
    std::string magic;
    int c = 0, k = 0, d = 0;
    if (!(in >> magic >> c >> k >> d) || magic != "PROTOBANK1")
        throw FormatError("PrototypeBank::load: bad header", 1);
    if (c < 1 || k < 1 || d < 1) throw FormatError("PrototypeBank::load: bad dimensions", 1);
    PrototypeBank bank(c, k, d);
    for (int r = 0; r < c * k; ++r) {
        auto p = bank.proto_mut(r / k, r % k);
        for (int j = 0; j < d; ++j)
            if (!(in >> p[j])) throw FormatError("PrototypeBank::load: truncated row", r + 2);
        if (std::abs(norm2(p) - 1.0) > 1e-9)
            throw FormatError("PrototypeBank::load: prototype row not unit-norm", r + 2);
    }
    return bank;
}

PrototypeBank PrototypeBank::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoFailureError("PrototypeBank::load: cannot open " + path);
    return load(f);
}

}  // namespace protoseg
