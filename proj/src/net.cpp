#include "sdc/net.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace sdc {

Gradients Gradients::zeros_like(const MLPParams& p) {
    Gradients g;
    g.w1 = Matrix(p.w1.rows, p.w1.cols);
    g.w2 = Matrix(p.w2.rows, p.w2.cols);
    g.wc = Matrix(p.wc.rows, p.wc.cols);
    g.b1.assign(p.b1.size(), 0.0);
    g.b2.assign(p.b2.size(), 0.0);
    g.bc.assign(p.bc.size(), 0.0);
    return g;
}

void Gradients::accumulate(const Gradients& o) {
    auto add_m = [](Matrix& a, const Matrix& b) {
        for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
    };
    auto add_v = [](std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add_m(w1, o.w1);
    add_m(w2, o.w2);
    add_m(wc, o.wc);
    add_v(b1, o.b1);
    add_v(b2, o.b2);
    add_v(bc, o.bc);
}

namespace {

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(fan_in, fan_out);
    for (auto& v : m.data) v = u(rng);
    return m;
}

}  // namespace

MLPParams init_params(int input_dim, int hidden1, int hidden2, int num_classes,
                      std::mt19937_64& rng) {
    if (input_dim < 1 || hidden1 < 1 || hidden2 < 1 || num_classes < 1)
        throw ValidationError("init_params: all dims must be >= 1");
    MLPParams p;
    p.w1 = glorot_uniform(input_dim, hidden1, rng);
    p.w2 = glorot_uniform(hidden1, hidden2, rng);
    p.wc = glorot_uniform(hidden2, num_classes, rng);
    p.b1.assign(hidden1, 0.0);
    p.b2.assign(hidden2, 0.0);
    p.bc.assign(num_classes, 0.0);
    return p;
}

namespace {

void relu_inplace(Matrix& m) {
    for (auto& v : m.data)
        if (v < 0.0) v = 0.0;
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double p, std::mt19937_64& rng) {
    Matrix mask(rows, cols, 1.0);
    if (p <= 0.0) return mask;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - p);
    for (auto& v : mask.data) v = (u(rng) < p) ? 0.0 : keep_scale;
    return mask;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
    return c;
}

}  // namespace

ForwardCache forward(const MLPParams& params, const Matrix& batch, Mode mode,
                     double dropout_p, std::mt19937_64* rng) {
    if (batch.cols != params.w1.rows)
        throw ValidationError("forward: batch width " + std::to_string(batch.cols) +
                              " != input dim " + std::to_string(params.w1.rows));
    if (mode == Mode::train && dropout_p > 0.0 && rng == nullptr)
        throw ValidationError("forward: train mode with dropout needs an rng");

    ForwardCache c;
    c.training = (mode == Mode::train);
    c.input = batch;

    c.z1 = matmul(batch, params.w1);
    add_row_vector(c.z1, params.b1);
    c.h1 = c.z1;
    relu_inplace(c.h1);
    if (c.training && dropout_p > 0.0) {
        c.mask1 = dropout_mask(c.h1.rows, c.h1.cols, dropout_p, *rng);
        c.h1_drop = hadamard(c.h1, c.mask1);
    } else {
        c.h1_drop = c.h1;
    }

    c.z2 = matmul(c.h1_drop, params.w2);
    add_row_vector(c.z2, params.b2);
    c.h2 = c.z2;
    relu_inplace(c.h2);
    if (c.training && dropout_p > 0.0) {
        c.mask2 = dropout_mask(c.h2.rows, c.h2.cols, dropout_p, *rng);
        c.embedding = hadamard(c.h2, c.mask2);
    } else {
        c.embedding = c.h2;
    }

    c.logits = matmul(c.embedding, params.wc);
    add_row_vector(c.logits, params.bc);

    c.probs = Matrix(c.logits.rows, c.logits.cols);
    for (std::size_t i = 0; i < c.logits.rows; ++i) {
        const double* z = c.logits.row(i);
        double* p = c.probs.row(i);
        double zmax = z[0];
        for (std::size_t j = 1; j < c.logits.cols; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c.logits.cols; ++j) {
            p[j] = std::exp(z[j] - zmax);
            sum += p[j];
        }
        for (std::size_t j = 0; j < c.logits.cols; ++j) p[j] /= sum;
    }
    return c;
}

double cross_entropy_loss(const ForwardCache& cache, const std::vector<int>& labels) {
    const std::size_t b = cache.logits.rows;
    if (b == 0) throw ValidationError("cross_entropy_loss: empty batch");
    if (labels.size() != b) throw ValidationError("cross_entropy_loss: label count mismatch");
    const std::size_t c = cache.logits.cols;
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw ValidationError("cross_entropy_loss: label out of range");
        const double* z = cache.logits.row(i);
        double zmax = z[0];
        for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, z[j]);
        double lse = 0.0;
        for (std::size_t j = 0; j < c; ++j) lse += std::exp(z[j] - zmax);
        total += zmax + std::log(lse) - z[labels[i]];
    }
    return total / static_cast<double>(b);
}

Matrix cross_entropy_logit_grad(const ForwardCache& cache, const std::vector<int>& labels) {
    const std::size_t b = cache.probs.rows;
    if (labels.size() != b) throw ValidationError("cross_entropy_logit_grad: label count mismatch");
    Matrix g = cache.probs;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        double* gi = g.row(i);
        gi[labels[i]] -= 1.0;
        for (std::size_t j = 0; j < g.cols; ++j) gi[j] *= inv_b;
    }
    return g;
}

Gradients backward(const MLPParams& params, const ForwardCache& cache,
                   const Matrix& d_logits, const Matrix& d_embedding) {
    const std::size_t b = cache.input.rows;
    if (!d_logits.empty() && (d_logits.rows != b || d_logits.cols != params.wc.cols))
        throw ValidationError("backward: d_logits shape mismatch");
    if (!d_embedding.empty() && (d_embedding.rows != b || d_embedding.cols != params.w2.cols))
        throw ValidationError("backward: d_embedding shape mismatch");

    Gradients g = Gradients::zeros_like(params);

    // Upstream into the embedding: classifier path plus the direct losses.
    Matrix d_emb(b, params.w2.cols);
    if (!d_logits.empty()) {
        g.wc = matmul_transposed_a(cache.embedding, d_logits);
        g.bc = column_sums(d_logits);
        d_emb = matmul_transposed_b(d_logits, params.wc);
    }
    if (!d_embedding.empty())
        for (std::size_t i = 0; i < d_emb.data.size(); ++i)
            d_emb.data[i] += d_embedding.data[i];

    Matrix d_h2 = cache.training && !cache.mask2.empty() ? hadamard(d_emb, cache.mask2) : d_emb;
    Matrix d_z2 = d_h2;
    for (std::size_t i = 0; i < d_z2.data.size(); ++i)
        if (cache.z2.data[i] <= 0.0) d_z2.data[i] = 0.0;

    g.w2 = matmul_transposed_a(cache.h1_drop, d_z2);
    g.b2 = column_sums(d_z2);

    Matrix d_h1d = matmul_transposed_b(d_z2, params.w2);
    Matrix d_h1 = cache.training && !cache.mask1.empty() ? hadamard(d_h1d, cache.mask1) : d_h1d;
    Matrix d_z1 = d_h1;
    for (std::size_t i = 0; i < d_z1.data.size(); ++i)
        if (cache.z1.data[i] <= 0.0) d_z1.data[i] = 0.0;

    g.w1 = matmul_transposed_a(cache.input, d_z1);
    g.b1 = column_sums(d_z1);
    return g;
}

OptimizerState OptimizerState::create(const MLPParams& params, double lr, double momentum) {
    OptimizerState s;
    s.velocity = Gradients::zeros_like(params);
    s.learning_rate = lr;
    s.momentum = momentum;
    return s;
}

void sgd_step(MLPParams& params, const Gradients& grads, OptimizerState& state) {
    auto step_m = [&](Matrix& theta, Matrix& v, const Matrix& g) {
        if (!theta.same_shape(g)) throw ValidationError("sgd_step: shape mismatch");
        for (std::size_t i = 0; i < theta.data.size(); ++i) {
            v.data[i] = state.momentum * v.data[i] + g.data[i];
            theta.data[i] -= state.learning_rate * v.data[i];
        }
    };
    auto step_v = [&](std::vector<double>& theta, std::vector<double>& v,
                      const std::vector<double>& g) {
        if (theta.size() != g.size()) throw ValidationError("sgd_step: shape mismatch");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            v[i] = state.momentum * v[i] + g[i];
            theta[i] -= state.learning_rate * v[i];
        }
    };
    step_m(params.w1, state.velocity.w1, grads.w1);
    step_m(params.w2, state.velocity.w2, grads.w2);
    step_m(params.wc, state.velocity.wc, grads.wc);
    step_v(params.b1, state.velocity.b1, grads.b1);
    step_v(params.b2, state.velocity.b2, grads.b2);
    step_v(params.bc, state.velocity.bc, grads.bc);
}

namespace {

constexpr char kMagic[8] = {'S', 'D', 'C', 'N', 'E', 'T', '0', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw IoError("truncated checkpoint '" + path + "'");
    return v;
}

void write_doubles(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* p, std::size_t n, const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double))))
        throw IoError("truncated checkpoint '" + path + "'");
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof kMagic);
    const auto& p = model.params;
    write_u32(out, static_cast<std::uint32_t>(p.input_dim()));
    write_u32(out, static_cast<std::uint32_t>(p.hidden1()));
    write_u32(out, static_cast<std::uint32_t>(p.hidden2()));
    write_u32(out, static_cast<std::uint32_t>(p.num_classes()));
    write_doubles(out, p.w1.data.data(), p.w1.data.size());
    write_doubles(out, p.b1.data(), p.b1.size());
    write_doubles(out, p.w2.data.data(), p.w2.data.size());
    write_doubles(out, p.b2.data(), p.b2.size());
    write_doubles(out, p.wc.data.data(), p.wc.data.size());
    write_doubles(out, p.bc.data(), p.bc.size());
    write_u32(out, model.scaler.empty() ? 0u : 1u);
    if (!model.scaler.empty()) {
        write_u32(out, static_cast<std::uint32_t>(model.scaler.mean.size()));
        write_doubles(out, model.scaler.mean.data(), model.scaler.mean.size());
        write_doubles(out, model.scaler.stddev.data(), model.scaler.stddev.size());
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw IoError("'" + path + "' is not a checkpoint file");
    Model m;
    const std::uint32_t d = read_u32(in, path);
    const std::uint32_t h1 = read_u32(in, path);
    const std::uint32_t h2 = read_u32(in, path);
    const std::uint32_t c = read_u32(in, path);
    if (d == 0 || h1 == 0 || h2 == 0 || c == 0)
        throw IoError("checkpoint '" + path + "' has zero dimension");
    m.params.w1 = Matrix(d, h1);
    m.params.b1.assign(h1, 0.0);
    m.params.w2 = Matrix(h1, h2);
    m.params.b2.assign(h2, 0.0);
    m.params.wc = Matrix(h2, c);
    m.params.bc.assign(c, 0.0);
    read_doubles(in, m.params.w1.data.data(), m.params.w1.data.size(), path);
    read_doubles(in, m.params.b1.data(), m.params.b1.size(), path);
    read_doubles(in, m.params.w2.data.data(), m.params.w2.data.size(), path);
    read_doubles(in, m.params.b2.data(), m.params.b2.size(), path);
    read_doubles(in, m.params.wc.data.data(), m.params.wc.data.size(), path);
    read_doubles(in, m.params.bc.data(), m.params.bc.size(), path);
    if (read_u32(in, path) == 1u) {
        const std::uint32_t sd = read_u32(in, path);
        if (sd != d) throw IoError("checkpoint '" + path + "' scaler dim mismatch");
        m.scaler.mean.assign(sd, 0.0);
        m.scaler.stddev.assign(sd, 0.0);
        read_doubles(in, m.scaler.mean.data(), sd, path);
        read_doubles(in, m.scaler.stddev.data(), sd, path);
    }
    return m;
}

}  // namespace sdc
