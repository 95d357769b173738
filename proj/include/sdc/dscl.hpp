#pragma once

#include <vector>

#include "sdc/matrix.hpp"

namespace sdc {

inline constexpr double kBceClamp = 1e-7;

// Raw cosine similarity; zero vectors are defined as S = 0 and flagged so
// dead-ReLU embeddings cannot produce NaN.
double cosine_similarity(const double* a, const double* b, std::size_t dim,
                         bool* zero_flagged = nullptr);

// S' = (S + 1)/2 in [0, 1], unclamped; losses clamp to [kBceClamp, 1-kBceClamp].
double similarity_unit(const std::vector<double>& a, const std::vector<double>& b);

struct PairSelection {
    struct Pair {
        int i = 0, j = 0;
        double zeta = 0.0;  // stop-gradient target
    };
    std::vector<Pair> pairs;
    int positive_count = 0;
    int negative_count = 0;
    int ambiguous_count = 0;  // excluded, inside [tau_pl, tau_pu)
};

struct PairLossResult {
    double value = 0.0;
    Matrix grad;  // w.r.t. the embeddings
};

// Label-supervised pairwise BCE over ordered pairs i != j, normalized by
// B(B-1); zeta = 1 iff labels match.
PairLossResult source_pairwise_loss(const Matrix& embeddings, const std::vector<int>& labels);

// Threshold selection on raw cosine S over unordered pairs i < j:
// zeta = 1 if S >= tau_pu, zeta = 0 if S < tau_pl, otherwise excluded.
PairSelection target_pair_selection(const Matrix& embeddings, double tau_pu, double tau_pl);

// Mean BCE between frozen zeta and S' over the selected pairs; zero loss and
// gradient when the selection is empty.
PairLossResult target_pairwise_loss(const Matrix& embeddings, const PairSelection& selection);

}  // namespace sdc
