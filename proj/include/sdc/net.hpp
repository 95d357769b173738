#pragma once

#include <random>
#include <string>
#include <vector>

#include "sdc/datamodel.hpp"
#include "sdc/matrix.hpp"

namespace sdc {

// Two hidden layers with ReLU + dropout, linear classifier head.
// w1: d x h1, w2: h1 x h2, wc: h2 x C; activations are row vectors.
struct MLPParams {
    Matrix w1, w2, wc;
    std::vector<double> b1, b2, bc;

    int input_dim() const { return static_cast<int>(w1.rows); }
    int hidden1() const { return static_cast<int>(w1.cols); }
    int hidden2() const { return static_cast<int>(w2.cols); }
    int num_classes() const { return static_cast<int>(wc.cols); }
};

struct Gradients {
    Matrix w1, w2, wc;
    std::vector<double> b1, b2, bc;

    static Gradients zeros_like(const MLPParams& p);
    void accumulate(const Gradients& other);
};

enum class Mode { train, eval };

// Everything backward() needs, including the dropout masks so the same
// stochastic path is differentiated. `embedding` is the post-dropout h2 in
// train mode and h2 itself in eval mode; it is what the alignment and
// similarity losses consume.
struct ForwardCache {
    Matrix input;
    Matrix z1, h1, mask1, h1_drop;
    Matrix z2, h2, mask2;
    Matrix embedding;
    Matrix logits;
    Matrix probs;
    bool training = false;
};

MLPParams init_params(int input_dim, int hidden1, int hidden2, int num_classes,
                      std::mt19937_64& rng);

// rng may be null in eval mode; dropout zeroes units with probability
// dropout_p and scales survivors by 1/(1-p) (inverted dropout).
ForwardCache forward(const MLPParams& params, const Matrix& batch, Mode mode,
                     double dropout_p, std::mt19937_64* rng);

// Mean cross-entropy over the batch, computed via log-sum-exp.
double cross_entropy_loss(const ForwardCache& cache, const std::vector<int>& labels);

// d(mean CE)/d(logits) = (softmax - onehot)/B
Matrix cross_entropy_logit_grad(const ForwardCache& cache, const std::vector<int>& labels);

// Backpropagates the sum of an upstream logit gradient and an upstream
// embedding gradient through the cached forward pass. Either may be empty.
Gradients backward(const MLPParams& params, const ForwardCache& cache,
                   const Matrix& d_logits, const Matrix& d_embedding);

// Heavy-ball: v <- momentum*v + g; theta <- theta - lr*v.
struct OptimizerState {
    Gradients velocity;
    double learning_rate = 0.01;
    double momentum = 0.9;

    static OptimizerState create(const MLPParams& params, double lr, double momentum);
};

void sgd_step(MLPParams& params, const Gradients& grads, OptimizerState& state);

// Trained network plus the feature standardizer it was fitted with; both are
// needed to score raw tables.
struct Model {
    MLPParams params;
    Standardizer scaler;
};

// Binary checkpoint: magic+version, shapes, row-major doubles, optional scaler.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace sdc
