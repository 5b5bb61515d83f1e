#pragma once

#include "protoseg/embedding.hpp"
#include "protoseg/matrix.hpp"
#include "protoseg/prototype_bank.hpp"

namespace protoseg {

struct LossWeights {
    double lambda1 = 0.01;  // pixel-prototype contrastive weight
    double lambda2 = 0.01;  // compactness weight
    double tau = 0.1;       // contrastive temperature
};

// One loss term: batch-mean value plus the gradient with respect to each
// embedding row. The gradient is taken through the row L2-normalization
// (evaluated at the unit input), i.e. it is tangential to the sphere; the
// encoder's backward pass supplies the remaining 1/||z|| factor.
struct LossValue {
    double value = 0.0;
    Matrix grad;  // N x D
};

struct LossBreakdown {
    double ce = 0.0;
    double ppc = 0.0;
    double ppd = 0.0;
    double total = 0.0;
    Matrix grad;  // N x D, gradient of total
};

// Cross-entropy over pixel-class distances: mean of -log softmax(-s_i)[c_i].
// The min over a class's prototypes routes its subgradient to the argmin
// prototype (lowest k on ties).
LossValue loss_ce(const EmbeddingBatch& emb, const LabelBatch& labels, const PrototypeBank& bank,
                  const DistanceMeasure& m);

// Contrastive pull toward the assigned prototype against the other C*K-1
// prototypes: mean of -log[exp(i.p+/tau) / sum over all C*K of exp(i.p/tau)].
LossValue loss_ppc(const EmbeddingBatch& emb, const PixelAssignments& assignments,
                   const PrototypeBank& bank, double tau);

// Compactness: mean of (1 - i.p+)^2, in [0, 4] for unit inputs.
LossValue loss_ppd(const EmbeddingBatch& emb, const PixelAssignments& assignments,
                   const PrototypeBank& bank);

// total = ce + lambda1*ppc + lambda2*ppd, gradient combined the same way.
LossBreakdown loss_total(const EmbeddingBatch& emb, const LabelBatch& labels,
                         const PixelAssignments& assignments, const PrototypeBank& bank,
                         const DistanceMeasure& m, const LossWeights& w);

}  // namespace protoseg
