#include "sdc/dscl.hpp"

#include <algorithm>
#include <cmath>

namespace sdc {

namespace {
constexpr double kZeroNorm = 1e-30;
}

double cosine_similarity(const double* a, const double* b, std::size_t dim,
                         bool* zero_flagged) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na < kZeroNorm || nb < kZeroNorm) {
        if (zero_flagged) *zero_flagged = true;
        return 0.0;
    }
    if (zero_flagged) *zero_flagged = false;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double similarity_unit(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("similarity_unit: width mismatch");
    return (cosine_similarity(a.data(), b.data(), a.size()) + 1.0) / 2.0;
}

namespace {

// BCE between target t and clamped similarity s', plus d(BCE)/dS' with the
// clamp treated as a flat region (zero gradient outside [eps, 1-eps]).
void bce_and_grad(double t, double s_unit, double& bce, double& dbce_ds) {
    const double s = std::clamp(s_unit, kBceClamp, 1.0 - kBceClamp);
    bce = -t * std::log(s) - (1.0 - t) * std::log(1.0 - s);
    dbce_ds = (s == s_unit) ? (-t / s + (1.0 - t) / (1.0 - s)) : 0.0;
}

// Adds weight * dS/d(row i) and weight * dS/d(row j) for the cosine of rows
// i and j. dS/da = b/(|a||b|) - S*a/|a|^2.
void add_cosine_grad(const Matrix& embs, int i, int j, double s_cos, double weight,
                     Matrix& grad) {
    const std::size_t dim = embs.cols;
    const double* a = embs.row(i);
    const double* b = embs.row(j);
    double na2 = 0.0, nb2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        na2 += a[k] * a[k];
        nb2 += b[k] * b[k];
    }
    if (na2 < kZeroNorm || nb2 < kZeroNorm) return;  // flagged cosine, no gradient
    const double inv_norms = 1.0 / (std::sqrt(na2) * std::sqrt(nb2));
    double* gi = grad.row(i);
    double* gj = grad.row(j);
    for (std::size_t k = 0; k < dim; ++k) {
        gi[k] += weight * (b[k] * inv_norms - s_cos * a[k] / na2);
        gj[k] += weight * (a[k] * inv_norms - s_cos * b[k] / nb2);
    }
}

}  // namespace

PairLossResult source_pairwise_loss(const Matrix& embeddings, const std::vector<int>& labels) {
    const std::size_t b = embeddings.rows;
    if (b < 2) throw ValidationError("source_pairwise_loss: need at least 2 samples");
    if (labels.size() != b) throw ValidationError("source_pairwise_loss: label count mismatch");

    PairLossResult r;
    r.grad = Matrix(embeddings.rows, embeddings.cols);
    const double norm = 1.0 / (static_cast<double>(b) * static_cast<double>(b - 1));

    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = i + 1; j < b; ++j) {
            const double s_cos =
                cosine_similarity(embeddings.row(i), embeddings.row(j), embeddings.cols);
            const double s_unit = (s_cos + 1.0) / 2.0;
            const double zeta = (labels[i] == labels[j]) ? 1.0 : 0.0;
            double bce = 0.0, dbce_ds = 0.0;
            bce_and_grad(zeta, s_unit, bce, dbce_ds);
            // ordered pairs: (i,j) and (j,i) are identical terms
            r.value += 2.0 * norm * bce;
            const double w = 2.0 * norm * dbce_ds * 0.5;  // dS'/dS = 1/2
            if (w != 0.0)
                add_cosine_grad(embeddings, static_cast<int>(i), static_cast<int>(j), s_cos, w,
                                r.grad);
        }
    return r;
}

PairSelection target_pair_selection(const Matrix& embeddings, double tau_pu, double tau_pl) {
    if (!(tau_pl < tau_pu))
        throw ValidationError("target_pair_selection: need tau_pl < tau_pu");
    PairSelection sel;
    const std::size_t m = embeddings.rows;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double s_cos =
                cosine_similarity(embeddings.row(i), embeddings.row(j), embeddings.cols);
            if (s_cos >= tau_pu) {
                sel.pairs.push_back({static_cast<int>(i), static_cast<int>(j), 1.0});
                ++sel.positive_count;
            } else if (s_cos < tau_pl) {
                sel.pairs.push_back({static_cast<int>(i), static_cast<int>(j), 0.0});
                ++sel.negative_count;
            } else {
                ++sel.ambiguous_count;
            }
        }
    return sel;
}

PairLossResult target_pairwise_loss(const Matrix& embeddings, const PairSelection& selection) {
    PairLossResult r;
    r.grad = Matrix(embeddings.rows, embeddings.cols);
    if (selection.pairs.empty()) return r;

    const double norm = 1.0 / static_cast<double>(selection.pairs.size());
    for (const auto& p : selection.pairs) {
        if (p.i < 0 || p.j < 0 || static_cast<std::size_t>(p.i) >= embeddings.rows ||
            static_cast<std::size_t>(p.j) >= embeddings.rows || p.i == p.j)
            throw ValidationError("target_pairwise_loss: pair index out of range");
        const double s_cos =
            cosine_similarity(embeddings.row(p.i), embeddings.row(p.j), embeddings.cols);
        const double s_unit = (s_cos + 1.0) / 2.0;
        double bce = 0.0, dbce_ds = 0.0;
        bce_and_grad(p.zeta, s_unit, bce, dbce_ds);
        r.value += norm * bce;
        const double w = norm * dbce_ds * 0.5;
        if (w != 0.0) add_cosine_grad(embeddings, p.i, p.j, s_cos, w, r.grad);
    }
    return r;
}

}  // namespace sdc
