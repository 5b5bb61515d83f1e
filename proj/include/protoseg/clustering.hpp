#pragma once

#include <vector>

#include "protoseg/embedding.hpp"
#include "protoseg/matrix.hpp"
#include "protoseg/prototype_bank.hpp"

namespace protoseg {

// Soft assignment of N pixels to K prototypes on the transportation
// polytope. Columns sum to 1; rows approach N/K as iterations grow.
struct AssignmentMatrix {
    Matrix L;  // K x N
    double kappa = 0.0;
    int iters = 0;
};

struct HardAssignment {
    std::vector<int> k_of;  // per pixel, argmax over the column, lowest k on ties
};

// Entropy-regularized balanced assignment, solved by Sinkhorn-Knopp
// scaling: L = exp(sim/kappa), one global normalization, then `iters`
// rounds of row normalization (/K) followed by column normalization (/N),
// and a final *N so each column sums to 1. The exponent is shifted by the
// max similarity entry before exp; the global normalization cancels the
// shift exactly, so raw exp overflow at small kappa never occurs.
//
// protos: K x D unit rows; emb: N x D unit rows.
AssignmentMatrix sinkhorn_assign(const Matrix& protos, const Matrix& emb, double kappa, int iters);

HardAssignment harden(const AssignmentMatrix& assignment);

// Runs one balanced-assignment solve per class present in the batch, using
// that class's prototypes only, and scatters the hardened results back to
// pixel order. Every pixel ends up assigned to a prototype of its own class.
PixelAssignments cluster_batch_by_class(const EmbeddingBatch& emb, const LabelBatch& labels,
                                        const PrototypeBank& bank, double kappa, int iters);

}  // namespace protoseg
