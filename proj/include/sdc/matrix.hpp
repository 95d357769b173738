#pragma once

#include <cstddef>
#include <vector>

#include "sdc/errors.hpp"

namespace sdc {

// Dense row-major matrix of doubles. Deliberately minimal: the network and
// kernel code below only ever needs products, transposed products and
// row access.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool empty() const { return rows == 0 || cols == 0; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// C = A (r x k) * B (k x c)
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ValidationError("matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

// C = A^T (k x r) * B (k x c); A is stored k x r.
inline Matrix matmul_transposed_a(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw ValidationError("matmul_transposed_a: row counts differ");
    Matrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

// C = A (r x k) * B^T (c x k)
inline Matrix matmul_transposed_b(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw ValidationError("matmul_transposed_b: column counts differ");
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            ci[j] = s;
        }
    }
    return c;
}

inline void add_row_vector(Matrix& m, const std::vector<double>& v) {
    if (v.size() != m.cols) throw ValidationError("add_row_vector: width mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) r[j] += v[j];
    }
}

inline std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) s[j] += r[j];
    }
    return s;
}

}  // namespace sdc
