#include <doctest.h>

#include <cmath>

#include "sdc/align.hpp"
#include "sdc/rng.hpp"
#include "oracles.hpp"

using namespace sdc;

namespace {

Matrix random_embeddings(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    auto rng = derive_rng(seed, "align-test");
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (auto& v : m.data) v = g(rng);
    return m;
}

std::vector<std::vector<double>> to_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        rows[i].assign(m.row(i), m.row(i) + m.cols);
    return rows;
}

KernelBank single_kernel(double sigma) {
    KernelBank b;
    b.bandwidths = {sigma};
    b.weights = {1.0};
    return b;
}

}  // namespace

TEST_SUITE("align") {

TEST_CASE("median heuristic on a line and degenerate inputs") {
    Matrix pts(3, 1);
    pts.at(0, 0) = 0.0;
    pts.at(1, 0) = 1.0;
    pts.at(2, 0) = 3.0;
    CHECK(median_heuristic(pts) == 2.0);  // pairwise distances {1,2,3}

    Matrix same(4, 2, 5.0);
    CHECK(median_heuristic(same) == 1.0);

    Matrix doubled = pts;
    for (auto& v : doubled.data) v *= 2.0;
    CHECK(median_heuristic(doubled) == 4.0);

    Matrix one(1, 3);
    CHECK_THROWS_AS(median_heuristic(one), ValidationError);
}

TEST_CASE("kernel bank defaults to the quarter-to-quadruple ladder") {
    KernelBank b = KernelBank::around(2.0, 5);
    REQUIRE(b.bandwidths.size() == 5);
    CHECK(b.bandwidths[0] == doctest::Approx(0.5));
    CHECK(b.bandwidths[2] == doctest::Approx(2.0));
    CHECK(b.bandwidths[4] == doctest::Approx(8.0));
    for (double w : b.weights) CHECK(w == doctest::Approx(0.2));
}

TEST_CASE("mmd of a set with itself is zero and never goes negative") {
    Matrix x = random_embeddings(6, 4, 1);
    KernelBank bank = KernelBank::around(1.3, 5);
    MmdResult self = mmd2(x, x, bank);
    CHECK(std::abs(self.value) < 1e-12);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix a = random_embeddings(1 + trial % 7, 3, 100 + trial);
        Matrix b = random_embeddings(1 + (trial * 3) % 7, 3, 200 + trial);
        CHECK(mmd2(a, b, bank).value >= -1e-12);
    }
}

TEST_CASE("single-pair closed form: 2 - 2 exp(-1/2)") {
    Matrix x(1, 1), y(1, 1);
    x.at(0, 0) = 0.0;
    y.at(0, 0) = 1.0;
    MmdResult r = mmd2(x, y, single_kernel(1.0));
    CHECK(r.value == doctest::Approx(0.7869387).epsilon(1e-7));
}

TEST_CASE("mmd matches the brute-force double sum on random cases") {
    for (int c = 0; c < 100; ++c) {
        auto rng = derive_rng(c, "mmd-case");
        std::uniform_int_distribution<std::size_t> size(1, 8);
        std::uniform_int_distribution<std::size_t> dims(1, 5);
        const std::size_t dim = dims(rng);
        Matrix x = random_embeddings(size(rng), dim, 300 + c);
        Matrix y = random_embeddings(size(rng), dim, 400 + c);
        KernelBank bank = KernelBank::around(0.7 + 0.1 * (c % 5), 1 + c % 4);
        const double mine = mmd2(x, y, bank).value;
        const double ref = oracle::brute_force_mmd2(to_rows(x), to_rows(y), bank.bandwidths,
                                                    bank.weights);
        CHECK(std::abs(mine - ref) < 1e-10);
    }
}

TEST_CASE("mmd is symmetric and invariant to row permutations") {
    Matrix x = random_embeddings(5, 3, 7);
    Matrix y = random_embeddings(6, 3, 8);
    KernelBank bank = KernelBank::around(1.0, 3);
    CHECK(mmd2(x, y, bank).value == doctest::Approx(mmd2(y, x, bank).value).epsilon(1e-12));

    Matrix xp(5, 3);
    const std::size_t perm[5] = {3, 1, 4, 0, 2};
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) xp.at(i, j) = x.at(perm[i], j);
    CHECK(mmd2(xp, y, bank).value == doctest::Approx(mmd2(x, y, bank).value).epsilon(1e-12));
}

TEST_CASE("mmd gradients match finite differences for both arguments") {
    Matrix x = random_embeddings(4, 3, 21);
    Matrix y = random_embeddings(5, 3, 22);
    KernelBank bank = KernelBank::around(0.9, 3);
    MmdResult r = mmd2(x, y, bank);
    auto loss_x = [&](const Matrix& m) { return mmd2(m, y, bank).value; };
    auto loss_y = [&](const Matrix& m) { return mmd2(x, m, bank).value; };
    CHECK(oracle::max_matrix_grad_error(x, loss_x, r.grad_source) < 1e-4);
    CHECK(oracle::max_matrix_grad_error(y, loss_y, r.grad_target) < 1e-4);
}

TEST_CASE("pseudo-label gate keeps >= tau, argmax label, ties to lowest index") {
    Matrix probs(3, 3);
    probs.at(0, 0) = 0.7; probs.at(0, 1) = 0.2; probs.at(0, 2) = 0.1;
    probs.at(1, 0) = 0.2; probs.at(1, 1) = 0.2; probs.at(1, 2) = 0.6;
    probs.at(2, 0) = 0.4; probs.at(2, 1) = 0.4; probs.at(2, 2) = 0.2;

    PseudoLabelSet high = filter_pseudo_labels(probs, 0.8);
    CHECK(high.size() == 0);  // 0.7 < 0.8 excluded

    PseudoLabelSet at = filter_pseudo_labels(probs, 0.7);
    REQUIRE(at.size() == 1);  // boundary >= includes
    CHECK(at.indices[0] == 0);
    CHECK(at.labels[0] == 0);
    CHECK(at.confidences[0] == 0.7);

    PseudoLabelSet all = filter_pseudo_labels(probs, 0.0);
    REQUIRE(all.size() == 3);
    CHECK(all.labels[2] == 0);  // tie 0.4/0.4 resolves to class 0

    // monotone gate: raising tau never adds samples
    std::size_t prev = 4;
    for (double tau : {0.0, 0.2, 0.4, 0.6, 0.7, 0.8, 1.0}) {
        std::size_t n = filter_pseudo_labels(probs, tau).size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("cmmd is zero for per-class identical sets and empty gates") {
    Matrix src = random_embeddings(6, 3, 31);
    std::vector<int> labels{0, 0, 1, 1, 2, 2};
    PseudoLabelSet pseudo;
    for (int i = 0; i < 6; ++i) {
        pseudo.indices.push_back(i);
        pseudo.labels.push_back(labels[i]);
        pseudo.confidences.push_back(1.0);
    }
    KernelBank bank = KernelBank::around(1.1, 3);
    CmmdResult same = cmmd2(src, labels, src, pseudo, bank, 3);
    CHECK(std::abs(same.value) < 1e-12);
    CHECK(same.participating_classes == 3);

    CmmdResult empty = cmmd2(src, labels, src, PseudoLabelSet{}, bank, 3);
    CHECK(empty.value == 0.0);
    CHECK(empty.participating_classes == 0);
    for (double v : empty.grad_source.data) CHECK(v == 0.0);
}

TEST_CASE("cmmd equals the sum of per-class mmd computed independently") {
    auto rng = derive_rng(5, "cmmd-case");
    Matrix src = random_embeddings(9, 4, 41);
    Matrix tgt = random_embeddings(8, 4, 42);
    std::vector<int> src_labels{0, 1, 2, 0, 1, 2, 0, 1, 2};
    PseudoLabelSet pseudo;
    std::uniform_int_distribution<int> lab(0, 2);
    for (int i = 0; i < 8; ++i) {
        pseudo.indices.push_back(i);
        pseudo.labels.push_back(lab(rng));
        pseudo.confidences.push_back(1.0);
    }
    KernelBank bank = KernelBank::around(0.8, 5);
    CmmdResult r = cmmd2(src, src_labels, tgt, pseudo, bank, 3);

    double expected = 0.0;
    int classes = 0;
    for (int c = 0; c < 3; ++c) {
        std::vector<std::vector<double>> xs, ys;
        for (std::size_t i = 0; i < src_labels.size(); ++i)
            if (src_labels[i] == c) xs.push_back({src.row(i), src.row(i) + 4});
        for (std::size_t i = 0; i < pseudo.indices.size(); ++i)
            if (pseudo.labels[i] == c) {
                const double* p = tgt.row(pseudo.indices[i]);
                ys.push_back({p, p + 4});
            }
        if (xs.empty() || ys.empty()) continue;
        ++classes;
        expected += oracle::brute_force_mmd2(xs, ys, bank.bandwidths, bank.weights);
    }
    CHECK(r.participating_classes == classes);
    CHECK(std::abs(r.value - expected) < 1e-12);
}

TEST_CASE("cmmd is invariant under a consistent relabeling permutation") {
    Matrix src = random_embeddings(8, 3, 51);
    Matrix tgt = random_embeddings(7, 3, 52);
    std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1};
    PseudoLabelSet pseudo;
    for (int i = 0; i < 7; ++i) {
        pseudo.indices.push_back(i);
        pseudo.labels.push_back(i % 3);
        pseudo.confidences.push_back(1.0);
    }
    KernelBank bank = KernelBank::around(1.0, 3);
    CmmdResult base = cmmd2(src, labels, tgt, pseudo, bank, 3);

    auto relabel = [](int y) { return (y + 1) % 3; };  // cyclic permutation
    std::vector<int> labels2;
    for (int y : labels) labels2.push_back(relabel(y));
    PseudoLabelSet pseudo2 = pseudo;
    for (auto& y : pseudo2.labels) y = relabel(y);
    CmmdResult perm = cmmd2(src, labels2, tgt, pseudo2, bank, 3);
    CHECK(perm.value == doctest::Approx(base.value).epsilon(1e-12));
}

TEST_CASE("cmmd gradients match finite differences") {
    Matrix src = random_embeddings(6, 3, 61);
    Matrix tgt = random_embeddings(6, 3, 62);
    std::vector<int> labels{0, 1, 2, 0, 1, 2};
    PseudoLabelSet pseudo;
    for (int i = 0; i < 6; ++i) {
        pseudo.indices.push_back(i);
        pseudo.labels.push_back((i + 1) % 3);
        pseudo.confidences.push_back(1.0);
    }
    KernelBank bank = KernelBank::around(0.9, 3);
    CmmdResult r = cmmd2(src, labels, tgt, pseudo, bank, 3);
    auto loss_src = [&](const Matrix& m) { return cmmd2(m, labels, tgt, pseudo, bank, 3).value; };
    auto loss_tgt = [&](const Matrix& m) { return cmmd2(src, labels, m, pseudo, bank, 3).value; };
    CHECK(oracle::max_matrix_grad_error(src, loss_src, r.grad_source) < 1e-4);
    CHECK(oracle::max_matrix_grad_error(tgt, loss_tgt, r.grad_target) < 1e-4);
}

}  // TEST_SUITE
