#include "sdc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "sdc/augment.hpp"
#include "sdc/dscl.hpp"
#include "sdc/rng.hpp"

namespace sdc {

namespace {

double lerp_epoch(double start, double end, int epoch, int epochs) {
    if (epochs <= 1) return start;
    double t = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return start + (end - start) * t;
}

}  // namespace

double alpha_schedule(int epoch, const RunConfig& config) {
    double v = lerp_epoch(config.alpha_start, config.alpha_end, epoch, config.epochs);
    double lo = std::min(config.alpha_start, config.alpha_end);
    double hi = std::max(config.alpha_start, config.alpha_end);
    return std::clamp(v, lo, hi);
}

double beta_from_loss(double l_ds, double rho0, double rho1) {
    if (!(rho0 < rho1)) throw ValidationError("beta_from_loss: need rho0 < rho1");
    auto heaviside = [](double x) { return x >= 0.0 ? 1.0 : 0.0; };
    return heaviside(rho0 - l_ds) + 0.5 * heaviside(l_ds - rho0) * heaviside(rho1 - l_ds);
}

double lambda_schedule(int epoch, int epochs) {
    if (epochs < 1) throw ValidationError("lambda_schedule: epochs must be >= 1");
    if (epoch < 0 || epoch > epochs)
        throw ValidationError("lambda_schedule: epoch out of range");
    return 2.0 * static_cast<double>(epoch) / static_cast<double>(epochs);
}

TauValues tau_schedules(int epoch, const RunConfig& config) {
    TauValues t;
    t.tau = lerp_epoch(config.tau_start, config.tau_end, epoch, config.epochs);
    t.tau_pu = lerp_epoch(config.tau_pu_start, config.tau_pu_end, epoch, config.epochs);
    t.tau_pl = lerp_epoch(config.tau_pl_start, config.tau_pl_end, epoch, config.epochs);
    if (!(t.tau_pl < t.tau_pu))
        throw ValidationError("tau_schedules: tau_pl >= tau_pu at epoch " + std::to_string(epoch));
    return t;
}

std::string epoch_log_json(const EpochLog& log) {
    nlohmann::json j;
    j["epoch"] = log.epoch;
    j["steps"] = log.steps;
    j["l_ds"] = log.l_ds;
    j["l_mmd"] = log.l_mmd;
    j["l_cmmd"] = log.l_cmmd;
    j["l_ps"] = log.l_ps;
    j["l_pt"] = log.l_pt;
    j["total"] = log.total;
    j["alpha"] = log.alpha;
    j["beta_mean"] = log.beta_mean;
    j["lambda"] = log.lambda;
    j["tau"] = log.tau;
    j["tau_pu"] = log.tau_pu;
    j["tau_pl"] = log.tau_pl;
    j["pseudo_accept_rate"] = log.pseudo_accept_rate;
    j["pairs_positive"] = log.pairs_positive;
    j["pairs_negative"] = log.pairs_negative;
    j["pairs_excluded"] = log.pairs_excluded;
    j["target_accuracy"] = log.target_accuracy;
    return j.dump();
}

LossBreakdown train_step(TrainState& state, const Matrix& source_x,
                         const std::vector<int>& source_y, const Matrix& target_x) {
    const RunConfig& cfg = state.config;
    LossBreakdown bd;
    bd.target_batch_size = static_cast<int>(target_x.rows);

    const bool use_mmd = !cfg.disable_mmd;
    const bool use_cmmd = !cfg.disable_cmmd;
    const bool use_ps = !cfg.disable_dscl_source && source_x.rows >= 2;
    const bool use_pt = !cfg.disable_dscl_target && target_x.rows >= 2;
    const bool need_target = (use_mmd || use_cmmd || use_pt) && target_x.rows > 0;
    const bool need_pseudo = use_cmmd || (use_pt && cfg.dscl_target_accepted_only);

    // (a) train-mode forwards
    ForwardCache src_cache = forward(state.params, source_x, Mode::train, cfg.dropout,
                                     &state.dropout_rng_source);
    ForwardCache tgt_cache;
    if (need_target)
        tgt_cache = forward(state.params, target_x, Mode::train, cfg.dropout,
                            &state.dropout_rng_target);

    // classification loss and the batch-reactive beta gate
    bd.l_ds = cross_entropy_loss(src_cache, source_y);
    const double beta = beta_from_loss(bd.l_ds, cfg.rho0, cfg.rho1);
    Matrix d_logits = cross_entropy_logit_grad(src_cache, source_y);

    Matrix d_emb_src(src_cache.embedding.rows, src_cache.embedding.cols);
    Matrix d_emb_tgt;
    if (need_target) d_emb_tgt = Matrix(tgt_cache.embedding.rows, tgt_cache.embedding.cols);

    auto accumulate = [](Matrix& acc, const Matrix& g, double w) {
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += w * g.data[i];
    };

    // (b) eval-mode pseudo-label pass; dropout off so confidences are stable
    PseudoLabelSet pseudo;
    if (need_pseudo && target_x.rows > 0) {
        ForwardCache eval_cache = forward(state.params, target_x, Mode::eval, 0.0, nullptr);
        const double gate = cfg.disable_pseudo_confidence ? 0.0 : state.tau;
        pseudo = filter_pseudo_labels(eval_cache.probs, gate);
        bd.accepted_pseudo = static_cast<int>(pseudo.size());
    }

    // (c) alignment and consistency terms with gradients into the embeddings
    if (use_mmd && need_target) {
        MmdResult mmd = mmd2(src_cache.embedding, tgt_cache.embedding, state.bank);
        bd.l_mmd = mmd.value;
        accumulate(d_emb_src, mmd.grad_source, state.alpha);
        accumulate(d_emb_tgt, mmd.grad_target, state.alpha);
    }
    if (use_cmmd && need_target) {
        CmmdResult cm = cmmd2(src_cache.embedding, source_y, tgt_cache.embedding, pseudo,
                              state.bank, state.num_classes, cfg.cmmd_class_mean);
        bd.l_cmmd = cm.value;
        bd.cmmd_classes = cm.participating_classes;
        accumulate(d_emb_src, cm.grad_source, beta);
        accumulate(d_emb_tgt, cm.grad_target, beta);
    }

    // default form weights L_pt by beta and L_ps by lambda; the flag swaps
    // the two coefficients for comparison runs
    const double coeff_ps = cfg.swap_lambda_beta_pt ? beta : state.lambda;
    const double coeff_pt = cfg.swap_lambda_beta_pt ? state.lambda : beta;

    if (use_ps) {
        PairLossResult ps = source_pairwise_loss(src_cache.embedding, source_y);
        bd.l_ps = ps.value;
        accumulate(d_emb_src, ps.grad, coeff_ps);
    }
    if (use_pt && need_target) {
        if (cfg.dscl_target_accepted_only) {
            // restrict pairs to pseudo-label-accepted rows
            Matrix sub(pseudo.size(), tgt_cache.embedding.cols);
            for (std::size_t r = 0; r < pseudo.size(); ++r)
                std::copy_n(tgt_cache.embedding.row(pseudo.indices[r]), sub.cols, sub.row(r));
            if (sub.rows >= 2) {
                PairSelection sel = target_pair_selection(sub, state.tau_pu, state.tau_pl);
                PairLossResult pt = target_pairwise_loss(sub, sel);
                bd.l_pt = pt.value;
                bd.pairs_positive = sel.positive_count;
                bd.pairs_negative = sel.negative_count;
                bd.pairs_excluded = sel.ambiguous_count;
                for (std::size_t r = 0; r < pseudo.size(); ++r) {
                    double* dst = d_emb_tgt.row(pseudo.indices[r]);
                    const double* src = pt.grad.row(r);
                    for (std::size_t k = 0; k < sub.cols; ++k) dst[k] += coeff_pt * src[k];
                }
            }
        } else {
            PairSelection sel = target_pair_selection(tgt_cache.embedding, state.tau_pu,
                                                      state.tau_pl);
            PairLossResult pt = target_pairwise_loss(tgt_cache.embedding, sel);
            bd.l_pt = pt.value;
            bd.pairs_positive = sel.positive_count;
            bd.pairs_negative = sel.negative_count;
            bd.pairs_excluded = sel.ambiguous_count;
            accumulate(d_emb_tgt, pt.grad, coeff_pt);
        }
    }

    // (d)-(f) backward through both domains, then the shared update
    Gradients grads = backward(state.params, src_cache, d_logits, d_emb_src);
    if (need_target) {
        Gradients tgt_grads = backward(state.params, tgt_cache, Matrix(), d_emb_tgt);
        grads.accumulate(tgt_grads);
    }
    sgd_step(state.params, grads, state.opt);
    ++state.step;

    bd.weights = {state.alpha, beta, state.lambda};
    bd.total = bd.l_ds + state.alpha * bd.l_mmd + beta * bd.l_cmmd + coeff_pt * bd.l_pt +
               coeff_ps * bd.l_ps;
    return bd;
}

namespace {

Matrix rows_to_matrix(const FeatureTable& table) {
    Matrix m(table.records.size(), table.dim);
    for (std::size_t i = 0; i < table.records.size(); ++i)
        std::copy(table.records[i].features.begin(), table.records[i].features.end(), m.row(i));
    return m;
}

double accuracy_of(const MLPParams& params, const Matrix& x, const std::vector<int>& y) {
    if (x.rows == 0) return 0.0;
    ForwardCache cache = forward(params, x, Mode::eval, 0.0, nullptr);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* p = cache.probs.row(i);
        int best = 0;
        for (std::size_t c = 1; c < cache.probs.cols; ++c)
            if (p[c] > p[best]) best = static_cast<int>(c);
        if (best == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(x.rows);
}

}  // namespace

FitResult fit(const DomainSplit& split, const RunConfig& config) {
    config.validate();
    for (int e = 0; e < config.epochs; ++e) tau_schedules(e, config);  // fail fast

    const FeatureTable& raw_source = split.source();
    if (raw_source.records.size() < 2)
        throw ValidationError("fit: source domain needs at least 2 records");
    if (split.target().records.empty())
        throw ValidationError("fit: target domain is empty");
    const int num_classes = raw_source.num_classes;
    if (num_classes < 2) throw ValidationError("fit: need at least 2 classes");

    Standardizer scaler;
    FeatureTable source = raw_source;
    FeatureTable target = split.target();
    if (config.standardize) {
        scaler = Standardizer::fit(raw_source);
        source = scaler.apply(raw_source);
        target = scaler.apply(split.target());
    }
    if (!config.disable_ss_mix) {
        MixPolicy policy;
        policy.beta_param = config.mix_beta_param;
        policy.augment_factor = config.augment_factor;
        policy.rng_seed = splitmix64(config.seed ^ fnv1a64("ss-mix-seed"));
        source = ss_mix(source, policy);
    }

    const Matrix source_x = rows_to_matrix(source);
    std::vector<int> source_y(source.records.size());
    for (std::size_t i = 0; i < source.records.size(); ++i) source_y[i] = source.records[i].label;
    const Matrix target_x = rows_to_matrix(target);
    std::vector<int> target_eval_y(split.evaluation_target().records.size());
    for (std::size_t i = 0; i < target_eval_y.size(); ++i)
        target_eval_y[i] = split.evaluation_target().records[i].label;

    TrainState state;
    state.config = config;
    state.num_classes = num_classes;
    {
        auto init_rng = derive_rng(config.seed, "init");
        state.params = init_params(source.dim, config.hidden1, config.hidden2, num_classes,
                                   init_rng);
    }
    state.opt = OptimizerState::create(state.params, config.learning_rate, config.momentum);
    state.dropout_rng_source = derive_rng(config.seed, "dropout-source");
    state.dropout_rng_target = derive_rng(config.seed, "dropout-target");

    auto shuffle_src_rng = derive_rng(config.seed, "shuffle-source");
    auto shuffle_tgt_rng = derive_rng(config.seed, "shuffle-target");
    auto bank_rng = derive_rng(config.seed, "bank-sample");

    const bool use_align = !config.disable_mmd || !config.disable_cmmd;
    const bool need_target = use_align || !config.disable_dscl_target;
    const std::size_t n_src = source_x.rows;
    const std::size_t n_tgt = target_x.rows;
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    const std::size_t steps_per_epoch = (n_src + batch - 1) / batch;

    std::vector<std::size_t> src_order(n_src);
    std::iota(src_order.begin(), src_order.end(), 0);
    std::vector<std::size_t> tgt_order(n_tgt);
    std::iota(tgt_order.begin(), tgt_order.end(), 0);
    if (need_target) std::shuffle(tgt_order.begin(), tgt_order.end(), shuffle_tgt_rng);
    std::size_t tgt_pos = 0;

    FitResult result;
    result.epochs.reserve(config.epochs);

    for (int e = 0; e < config.epochs; ++e) {
        state.epoch = e;
        state.alpha = alpha_schedule(e, config);
        state.lambda = lambda_schedule(e, config.epochs);
        TauValues taus = tau_schedules(e, config);
        state.tau = taus.tau;
        state.tau_pu = taus.tau_pu;
        state.tau_pl = taus.tau_pl;

        // Kernel bank from a bounded sample of current source embeddings;
        // stable within the epoch, adaptive across epochs.
        if (use_align) {
            std::vector<std::size_t> sample = src_order;
            std::shuffle(sample.begin(), sample.end(), bank_rng);
            if (sample.size() > 512) sample.resize(512);
            Matrix sub(sample.size(), source_x.cols);
            for (std::size_t i = 0; i < sample.size(); ++i)
                std::copy_n(source_x.row(sample[i]), source_x.cols, sub.row(i));
            ForwardCache cache = forward(state.params, sub, Mode::eval, 0.0, nullptr);
            double sigma = cache.embedding.rows >= 2 ? median_heuristic(cache.embedding) : 1.0;
            state.bank = KernelBank::around(sigma, config.kernel_count);
        }

        std::shuffle(src_order.begin(), src_order.end(), shuffle_src_rng);

        EpochLog log;
        log.epoch = e;
        log.steps = static_cast<long long>(steps_per_epoch);
        log.alpha = state.alpha;
        log.lambda = state.lambda;
        log.tau = state.tau;
        log.tau_pu = state.tau_pu;
        log.tau_pl = state.tau_pl;
        long long accepted = 0, target_seen = 0;

        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const std::size_t lo = s * batch;
            const std::size_t hi = std::min(n_src, lo + batch);
            Matrix bx(hi - lo, source_x.cols);
            std::vector<int> by(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                std::copy_n(source_x.row(src_order[i]), source_x.cols, bx.row(i - lo));
                by[i - lo] = source_y[src_order[i]];
            }

            Matrix tx;
            if (need_target && n_tgt > 0) {
                tx = Matrix(batch, target_x.cols);
                for (std::size_t i = 0; i < batch; ++i) {
                    if (tgt_pos == n_tgt) {
                        std::shuffle(tgt_order.begin(), tgt_order.end(), shuffle_tgt_rng);
                        tgt_pos = 0;
                    }
                    std::copy_n(target_x.row(tgt_order[tgt_pos++]), target_x.cols, tx.row(i));
                }
            }

            LossBreakdown bd = train_step(state, bx, by, tx);
            log.l_ds += bd.l_ds;
            log.l_mmd += bd.l_mmd;
            log.l_cmmd += bd.l_cmmd;
            log.l_ps += bd.l_ps;
            log.l_pt += bd.l_pt;
            log.total += bd.total;
            log.beta_mean += bd.weights.beta;
            log.pairs_positive += bd.pairs_positive;
            log.pairs_negative += bd.pairs_negative;
            log.pairs_excluded += bd.pairs_excluded;
            accepted += bd.accepted_pseudo;
            target_seen += bd.target_batch_size;
        }

        const double inv_steps = 1.0 / static_cast<double>(steps_per_epoch);
        log.l_ds *= inv_steps;
        log.l_mmd *= inv_steps;
        log.l_cmmd *= inv_steps;
        log.l_ps *= inv_steps;
        log.l_pt *= inv_steps;
        log.total *= inv_steps;
        log.beta_mean *= inv_steps;
        log.pseudo_accept_rate =
            target_seen > 0 ? static_cast<double>(accepted) / static_cast<double>(target_seen) : 0.0;
        log.target_accuracy = accuracy_of(state.params, target_x, target_eval_y);
        result.epochs.push_back(log);
    }

    result.model.params = std::move(state.params);
    result.model.scaler = std::move(scaler);
    result.final_target_accuracy =
        result.epochs.empty() ? 0.0 : result.epochs.back().target_accuracy;
    return result;
}

}  // namespace sdc
