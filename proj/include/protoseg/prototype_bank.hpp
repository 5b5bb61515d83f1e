#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "protoseg/embedding.hpp"
#include "protoseg/matrix.hpp"

namespace protoseg {

// Per-pixel hard assignment to prototype k of class c. c == kUnassigned
// marks a pixel without an assignment.
struct ProtoRef {
    int c = -1;
    int k = -1;
    bool assigned() const { return c >= 0; }
    bool operator==(const ProtoRef&) const = default;
};

using PixelAssignments = std::vector<ProtoRef>;

// Bookkeeping emitted by PrototypeBank::update. Counts and flags are indexed
// (c * K + k). max_drift is the largest ||p_new - p_old|| over the step.
struct UpdateStats {
    std::vector<int> count;
    std::vector<uint8_t> updated;
    double max_drift = 0.0;
};

// C*K non-learnable prototypes, each a unit D-vector. Mutated only by
// update(); loss code sees it as const — there is no gradient state to zero.
class PrototypeBank {
public:
    // Prototypes sampled i.i.d. isotropic Gaussian, then normalized.
    static PrototypeBank init(int classes, int protos_per_class, int dim, uint64_t seed);
    // Adopts the given rows (c-major, then k). Validates unit norms.
    static PrototypeBank from_rows(int classes, int protos_per_class, Matrix rows);

    int classes() const { return c_; }
    int protos_per_class() const { return k_; }
    int dim() const { return d_; }

    std::span<const double> proto(int c, int k) const {
        return {p_.data() + (static_cast<size_t>(c) * k_ + k) * d_, static_cast<size_t>(d_)};
    }
    // K x D rows of one class, for the per-class clustering solve.
    Matrix class_block(int c) const;

    // Momentum update toward the normalized mean of the pixels assigned to
    // each prototype: p <- normalize(mu*p + (1-mu)*mean_hat). Prototypes with
    // no assigned pixel are left untouched. mu == 1 leaves the bank
    // bit-identical by construction. Throws ClassMismatchError if an
    // assignment pairs a pixel with a class other than its label.
    UpdateStats update(const EmbeddingBatch& emb, const LabelBatch& labels,
                       const PixelAssignments& assignments, double mu);

    // Text checkpoint: "PROTOBANK1 C K D" then C*K rows of D floats at 17
    // significant digits (lossless round-trip).
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static PrototypeBank load(std::istream& in);
    static PrototypeBank load_file(const std::string& path);

    bool operator==(const PrototypeBank&) const = default;

private:
    PrototypeBank(int c, int k, int d) : c_(c), k_(k), d_(d), p_(static_cast<size_t>(c) * k * d) {}

    std::span<double> proto_mut(int c, int k) {
        return {p_.data() + (static_cast<size_t>(c) * k_ + k) * d_, static_cast<size_t>(d_)};
    }

    int c_ = 0;
    int k_ = 0;
    int d_ = 0;
    std::vector<double> p_;
};

}  // namespace protoseg
