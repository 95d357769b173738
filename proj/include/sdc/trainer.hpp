#pragma once

#include <string>
#include <vector>

#include "sdc/align.hpp"
#include "sdc/datamodel.hpp"
#include "sdc/net.hpp"

namespace sdc {

struct LossWeights {
    double alpha = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
};

struct LossBreakdown {
    double l_ds = 0.0, l_mmd = 0.0, l_cmmd = 0.0, l_ps = 0.0, l_pt = 0.0;
    LossWeights weights;
    double total = 0.0;
    int accepted_pseudo = 0;
    int target_batch_size = 0;
    int cmmd_classes = 0;
    int pairs_positive = 0, pairs_negative = 0, pairs_excluded = 0;
};

// alpha: linear from alpha_start to alpha_end over the epoch range.
double alpha_schedule(int epoch, const RunConfig& config);

// Heaviside gate on the current classification loss; epsilon(0) = 1, so the
// value at l_ds == rho0 is exactly 1.5.
double beta_from_loss(double l_ds, double rho0, double rho1);

// lambda = 2e / epochs.
double lambda_schedule(int epoch, int epochs);

struct TauValues {
    double tau = 0.0;     // pseudo-label confidence gate
    double tau_pu = 0.0;  // positive-pair threshold (raw cosine)
    double tau_pl = 0.0;  // negative-pair threshold (raw cosine)
};

TauValues tau_schedules(int epoch, const RunConfig& config);

struct EpochLog {
    int epoch = 0;
    long long steps = 0;
    double l_ds = 0.0, l_mmd = 0.0, l_cmmd = 0.0, l_ps = 0.0, l_pt = 0.0, total = 0.0;
    double alpha = 0.0, beta_mean = 0.0, lambda = 0.0;
    double tau = 0.0, tau_pu = 0.0, tau_pl = 0.0;
    double pseudo_accept_rate = 0.0;
    long long pairs_positive = 0, pairs_negative = 0, pairs_excluded = 0;
    double target_accuracy = 0.0;
};

// One JSON object (single line, no trailing newline) for the JSONL training log.
std::string epoch_log_json(const EpochLog& log);

struct TrainState {
    RunConfig config;
    int num_classes = 0;
    MLPParams params;
    OptimizerState opt;
    KernelBank bank;
    // current-epoch schedule values
    double alpha = 0.0, lambda = 0.0, tau = 0.0, tau_pu = 0.0, tau_pl = 0.0;
    int epoch = 0;
    long long step = 0;
    std::mt19937_64 dropout_rng_source;
    std::mt19937_64 dropout_rng_target;
};

// One optimization step on a source batch (labeled) and a target batch
// (unlabeled). Ablation flags in state.config skip the corresponding terms.
LossBreakdown train_step(TrainState& state, const Matrix& source_x,
                         const std::vector<int>& source_y, const Matrix& target_x);

struct FitResult {
    Model model;
    std::vector<EpochLog> epochs;
    double final_target_accuracy = 0.0;
};

FitResult fit(const DomainSplit& split, const RunConfig& config);

}  // namespace sdc
