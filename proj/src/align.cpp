#include "sdc/align.hpp"

#include <algorithm>
#include <cmath>

namespace sdc {

KernelBank KernelBank::around(double sigma, int count) {
    if (count < 1) throw ValidationError("kernel bank: count must be >= 1");
    if (!(sigma > 0.0)) throw ValidationError("kernel bank: sigma must be > 0");
    KernelBank bank;
    const double mid = (count - 1) / 2.0;
    for (int i = 0; i < count; ++i)
        bank.bandwidths.push_back(sigma * std::pow(2.0, static_cast<double>(i) - mid));
    bank.weights.assign(count, 1.0 / count);
    return bank;
}

void KernelBank::validate() const {
    if (bandwidths.empty()) throw ValidationError("kernel bank: no bandwidths");
    if (bandwidths.size() != weights.size())
        throw ValidationError("kernel bank: weight/bandwidth count mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ValidationError("kernel bank: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("kernel bank: weights must sum to 1");
    for (double s : bandwidths)
        if (!(s > 0.0)) throw ValidationError("kernel bank: bandwidths must be > 0");
}

double median_heuristic(const Matrix& embeddings) {
    const std::size_t n = embeddings.rows;
    if (n < 2) throw ValidationError("median_heuristic: need at least 2 rows");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* a = embeddings.row(i);
            const double* b = embeddings.row(j);
            double d2 = 0.0;
            for (std::size_t k = 0; k < embeddings.cols; ++k) {
                double diff = a[k] - b[k];
                d2 += diff * diff;
            }
            dists.push_back(std::sqrt(d2));
        }
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    double med = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
    return med > 0.0 ? med : 1.0;
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        double diff = a[k] - b[k];
        d2 += diff * diff;
    }
    return d2;
}

// Accumulates one kernel's contribution to the biased MMD^2 between the rows
// of x listed in xi and the rows of y listed in yi, scattering gradients into
// the full-size gradient matrices.
void mmd_one_kernel(const Matrix& x, const std::vector<std::size_t>& xi,
                    const Matrix& y, const std::vector<std::size_t>& yi,
                    double sigma, double weight, double& value,
                    Matrix& grad_x, Matrix& grad_y) {
    const std::size_t n = xi.size(), m = yi.size(), dim = x.cols;
    const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
    const double inv_s2 = 1.0 / (sigma * sigma);
    const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    const double inv_m2 = 1.0 / (static_cast<double>(m) * static_cast<double>(m));
    const double inv_nm = 1.0 / (static_cast<double>(n) * static_cast<double>(m));

    double kxx = static_cast<double>(n);  // diagonal self-pairs, k = 1
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double* pa = x.row(xi[a]);
            const double* pb = x.row(xi[b]);
            double k = std::exp(-sq_dist(pa, pb, dim) * inv_2s2);
            kxx += 2.0 * k;
            // d/dx_a of the (a,b)+(b,a) pair block
            const double coeff = weight * inv_n2 * 2.0 * k * inv_s2;
            double* ga = grad_x.row(xi[a]);
            double* gb = grad_x.row(xi[b]);
            for (std::size_t t = 0; t < dim; ++t) {
                double diff = pa[t] - pb[t];
                ga[t] -= coeff * diff;
                gb[t] += coeff * diff;
            }
        }

    double kyy = static_cast<double>(m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
            const double* pa = y.row(yi[a]);
            const double* pb = y.row(yi[b]);
            double k = std::exp(-sq_dist(pa, pb, dim) * inv_2s2);
            kyy += 2.0 * k;
            const double coeff = weight * inv_m2 * 2.0 * k * inv_s2;
            double* ga = grad_y.row(yi[a]);
            double* gb = grad_y.row(yi[b]);
            for (std::size_t t = 0; t < dim; ++t) {
                double diff = pa[t] - pb[t];
                ga[t] -= coeff * diff;
                gb[t] += coeff * diff;
            }
        }

    double kxy = 0.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < m; ++b) {
            const double* pa = x.row(xi[a]);
            const double* pb = y.row(yi[b]);
            double k = std::exp(-sq_dist(pa, pb, dim) * inv_2s2);
            kxy += k;
            // cross term enters with -2/(nm); gradient flows into both rows
            const double coeff = weight * 2.0 * inv_nm * k * inv_s2;
            double* ga = grad_x.row(xi[a]);
            double* gb = grad_y.row(yi[b]);
            for (std::size_t t = 0; t < dim; ++t) {
                double diff = pa[t] - pb[t];
                ga[t] += coeff * diff;
                gb[t] -= coeff * diff;
            }
        }

    value += weight * (kxx * inv_n2 + kyy * inv_m2 - 2.0 * kxy * inv_nm);
}

std::vector<std::size_t> all_rows(const Matrix& m) {
    std::vector<std::size_t> idx(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) idx[i] = i;
    return idx;
}

}  // namespace

MmdResult mmd2(const Matrix& source, const Matrix& target, const KernelBank& bank) {
    if (source.rows == 0 || target.rows == 0)
        throw ValidationError("mmd2: empty embedding set");
    if (source.cols != target.cols)
        throw ValidationError("mmd2: embedding widths differ");
    bank.validate();

    MmdResult r;
    r.grad_source = Matrix(source.rows, source.cols);
    r.grad_target = Matrix(target.rows, target.cols);
    auto si = all_rows(source);
    auto ti = all_rows(target);
    for (std::size_t k = 0; k < bank.bandwidths.size(); ++k)
        mmd_one_kernel(source, si, target, ti, bank.bandwidths[k], bank.weights[k],
                       r.value, r.grad_source, r.grad_target);
    return r;
}

PseudoLabelSet filter_pseudo_labels(const Matrix& target_probs, double tau) {
    PseudoLabelSet set;
    for (std::size_t i = 0; i < target_probs.rows; ++i) {
        const double* p = target_probs.row(i);
        int best = 0;
        for (std::size_t c = 1; c < target_probs.cols; ++c)
            if (p[c] > p[best]) best = static_cast<int>(c);
        if (p[best] >= tau) {
            set.indices.push_back(static_cast<int>(i));
            set.labels.push_back(best);
            set.confidences.push_back(p[best]);
        }
    }
    return set;
}

CmmdResult cmmd2(const Matrix& source, const std::vector<int>& source_labels,
                 const Matrix& target, const PseudoLabelSet& pseudo,
                 const KernelBank& bank, int num_classes, bool class_mean) {
    if (source_labels.size() != source.rows)
        throw ValidationError("cmmd2: label count mismatch");
    for (int y : source_labels)
        if (y < 0 || y >= num_classes) throw ValidationError("cmmd2: source label out of range");
    for (int y : pseudo.labels)
        if (y < 0 || y >= num_classes) throw ValidationError("cmmd2: pseudo-label out of range");
    bank.validate();

    CmmdResult r;
    r.grad_source = Matrix(source.rows, source.cols);
    r.grad_target = Matrix(target.rows, target.cols);

    for (int c = 0; c < num_classes; ++c) {
        std::vector<std::size_t> si, ti;
        for (std::size_t i = 0; i < source_labels.size(); ++i)
            if (source_labels[i] == c) si.push_back(i);
        for (std::size_t i = 0; i < pseudo.indices.size(); ++i)
            if (pseudo.labels[i] == c) ti.push_back(static_cast<std::size_t>(pseudo.indices[i]));
        if (si.empty() || ti.empty()) continue;  // missing on either side contributes 0
        ++r.participating_classes;
        for (std::size_t k = 0; k < bank.bandwidths.size(); ++k)
            mmd_one_kernel(source, si, target, ti, bank.bandwidths[k], bank.weights[k],
                           r.value, r.grad_source, r.grad_target);
    }

    if (class_mean && r.participating_classes > 1) {
        const double inv = 1.0 / r.participating_classes;
        r.value *= inv;
        for (auto& v : r.grad_source.data) v *= inv;
        for (auto& v : r.grad_target.data) v *= inv;
    }
    return r;
}

}  // namespace sdc
