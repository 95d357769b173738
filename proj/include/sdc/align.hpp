#pragma once

#include <vector>

#include "sdc/matrix.hpp"

namespace sdc {

// Multi-kernel Gaussian bank: k(a,b) = sum_k w_k * exp(-||a-b||^2 / (2*sigma_k^2)).
struct KernelBank {
    std::vector<double> bandwidths;
    std::vector<double> weights;

    // Geometric ladder of `count` bandwidths centred on sigma, uniform weights;
    // count = 5 gives sigma * {1/4, 1/2, 1, 2, 4}.
    static KernelBank around(double sigma, int count);
    void validate() const;
};

// Median of pairwise Euclidean distances (i < j); 1.0 when all points coincide.
double median_heuristic(const Matrix& embeddings);

struct MmdResult {
    double value = 0.0;
    Matrix grad_source;
    Matrix grad_target;
};

// Biased (V-statistic) squared MMD with closed-form gradients w.r.t. both
// embedding sets. Bandwidths are treated as constants.
MmdResult mmd2(const Matrix& source, const Matrix& target, const KernelBank& bank);

struct PseudoLabelSet {
    std::vector<int> indices;        // rows of the target batch
    std::vector<int> labels;         // argmax class, ties to the lowest index
    std::vector<double> confidences; // max probability

    std::size_t size() const { return indices.size(); }
};

// Accepts target sample i iff max_c p_ic >= tau.
PseudoLabelSet filter_pseudo_labels(const Matrix& target_probs, double tau);

struct CmmdResult {
    double value = 0.0;
    Matrix grad_source;
    Matrix grad_target;
    int participating_classes = 0;  // classes with >= 1 sample on both sides
};

// Class-conditional MMD: per-class biased MMD^2 summed over classes present on
// both sides (mean over them when class_mean is set).
CmmdResult cmmd2(const Matrix& source, const std::vector<int>& source_labels,
                 const Matrix& target, const PseudoLabelSet& pseudo,
                 const KernelBank& bank, int num_classes, bool class_mean = false);

}  // namespace sdc
