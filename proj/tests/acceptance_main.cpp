// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line each. Exit code is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "sdc/augment.hpp"
#include "sdc/dscl.hpp"
#include "sdc/eval.hpp"
#include "sdc/features.hpp"
#include "sdc/rng.hpp"
#include "sdc/trainer.hpp"
#include "oracles.hpp"

using namespace sdc;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  criterion-%02d  %-34s %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// The desk-scale covariate-shift benchmark shared by criteria 7 and 8.
FeatureTable benchmark_table() {
    return make_synthetic_dataset(6, 5, 40, 20, 3, /*shift=*/1.5, /*noise=*/0.25, 20250807);
}

RunConfig benchmark_config() {
    RunConfig cfg;
    cfg.seed = 1;
    cfg.epochs = 80;
    cfg.batch_size = 32;
    cfg.learning_rate = 0.01;
    cfg.dropout = 0.10;
    cfg.alpha_start = 1.0;
    cfg.alpha_end = 0.5;
    cfg.cmmd_class_mean = true;
    return cfg;
}

RunConfig source_only(RunConfig cfg) {
    cfg.disable_ss_mix = true;
    cfg.disable_mmd = true;
    cfg.disable_cmmd = true;
    cfg.disable_dscl_source = true;
    cfg.disable_dscl_target = true;
    cfg.disable_pseudo_confidence = true;
    return cfg;
}

// ---------------------------------------------------------------------------
// 1. gradient correctness for every loss term
// ---------------------------------------------------------------------------
void criterion_1() {
    const auto start = std::chrono::steady_clock::now();

    auto rng = derive_rng(17, "acceptance-grad");
    MLPParams params = init_params(6, 4, 4, 3, rng);
    // keep pre-activations off the ReLU kinks so central differences are valid
    std::uniform_real_distribution<double> jitter(0.05, 0.3);
    for (auto& v : params.b1) v = jitter(rng);
    for (auto& v : params.b2) v = jitter(rng);

    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix src(8, 6), tgt(7, 6);
    for (auto& v : src.data) v = u(rng);
    for (auto& v : tgt.data) v = u(rng);
    const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1};
    KernelBank bank = KernelBank::around(1.2, 5);

    // frozen pseudo-labels for CMMD and a frozen selection for L_pt
    PseudoLabelSet pseudo;
    for (int i = 0; i < 7; ++i) {
        pseudo.indices.push_back(i);
        pseudo.labels.push_back(i % 3);
        pseudo.confidences.push_back(1.0);
    }
    PairSelection frozen_sel;
    {
        ForwardCache tc = forward(params, tgt, Mode::eval, 0.0, nullptr);
        frozen_sel = target_pair_selection(tc.embedding, 0.9, 0.3);
    }

    struct Term {
        const char* name;
        std::function<double(const MLPParams&)> loss;
        std::function<Gradients(const MLPParams&)> grad;
    };
    std::vector<Term> terms;
    terms.push_back({"ce",
        [&](const MLPParams& p) {
            return cross_entropy_loss(forward(p, src, Mode::eval, 0.0, nullptr), labels);
        },
        [&](const MLPParams& p) {
            ForwardCache c = forward(p, src, Mode::eval, 0.0, nullptr);
            return backward(p, c, cross_entropy_logit_grad(c, labels), Matrix());
        }});
    terms.push_back({"mmd",
        [&](const MLPParams& p) {
            ForwardCache cs = forward(p, src, Mode::eval, 0.0, nullptr);
            ForwardCache ct = forward(p, tgt, Mode::eval, 0.0, nullptr);
            return mmd2(cs.embedding, ct.embedding, bank).value;
        },
        [&](const MLPParams& p) {
            ForwardCache cs = forward(p, src, Mode::eval, 0.0, nullptr);
            ForwardCache ct = forward(p, tgt, Mode::eval, 0.0, nullptr);
            MmdResult r = mmd2(cs.embedding, ct.embedding, bank);
            Gradients g = backward(p, cs, Matrix(), r.grad_source);
            g.accumulate(backward(p, ct, Matrix(), r.grad_target));
            return g;
        }});
    terms.push_back({"cmmd",
        [&](const MLPParams& p) {
            ForwardCache cs = forward(p, src, Mode::eval, 0.0, nullptr);
            ForwardCache ct = forward(p, tgt, Mode::eval, 0.0, nullptr);
            return cmmd2(cs.embedding, labels, ct.embedding, pseudo, bank, 3).value;
        },
        [&](const MLPParams& p) {
            ForwardCache cs = forward(p, src, Mode::eval, 0.0, nullptr);
            ForwardCache ct = forward(p, tgt, Mode::eval, 0.0, nullptr);
            CmmdResult r = cmmd2(cs.embedding, labels, ct.embedding, pseudo, bank, 3);
            Gradients g = backward(p, cs, Matrix(), r.grad_source);
            g.accumulate(backward(p, ct, Matrix(), r.grad_target));
            return g;
        }});
    terms.push_back({"l_ps",
        [&](const MLPParams& p) {
            ForwardCache cs = forward(p, src, Mode::eval, 0.0, nullptr);
            return source_pairwise_loss(cs.embedding, labels).value;
        },
        [&](const MLPParams& p) {
            ForwardCache cs = forward(p, src, Mode::eval, 0.0, nullptr);
            PairLossResult r = source_pairwise_loss(cs.embedding, labels);
            return backward(p, cs, Matrix(), r.grad);
        }});
    terms.push_back({"l_pt",
        [&](const MLPParams& p) {
            ForwardCache ct = forward(p, tgt, Mode::eval, 0.0, nullptr);
            return target_pairwise_loss(ct.embedding, frozen_sel).value;
        },
        [&](const MLPParams& p) {
            ForwardCache ct = forward(p, tgt, Mode::eval, 0.0, nullptr);
            PairLossResult r = target_pairwise_loss(ct.embedding, frozen_sel);
            return backward(p, ct, Matrix(), r.grad);
        }});

    double worst = 0.0;
    std::string worst_term = "-";
    for (const auto& term : terms) {
        const double err = oracle::max_param_grad_error(params, term.loss, term.grad(params));
        if (err > worst) {
            worst = err;
            worst_term = term.name;
        }
    }
    const double seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();
    report(1, "gradient correctness", worst < 1e-4 && seconds < 10.0,
           fmt("max rel err %.3g (worst: %s), %.2fs", worst, worst_term.c_str(), seconds));
}

// ---------------------------------------------------------------------------
// 2. MMD/CMMD against the brute-force double sum
// ---------------------------------------------------------------------------
void criterion_2() {
    double worst = 0.0;
    double worst_self = 0.0;
    double most_negative = 0.0;
    for (int c = 0; c < 100; ++c) {
        auto rng = derive_rng(c, "acceptance-mmd");
        std::uniform_int_distribution<std::size_t> size(1, 8);
        std::uniform_int_distribution<std::size_t> dims(1, 5);
        std::normal_distribution<double> g(0.0, 1.0);
        const std::size_t dim = dims(rng);
        Matrix x(size(rng), dim), y(size(rng), dim);
        for (auto& v : x.data) v = g(rng);
        for (auto& v : y.data) v = g(rng);
        KernelBank bank = KernelBank::around(0.6 + 0.15 * (c % 6), 1 + c % 5);

        std::vector<std::vector<double>> xr(x.rows), yr(y.rows);
        for (std::size_t i = 0; i < x.rows; ++i) xr[i].assign(x.row(i), x.row(i) + dim);
        for (std::size_t i = 0; i < y.rows; ++i) yr[i].assign(y.row(i), y.row(i) + dim);

        const double mine = mmd2(x, y, bank).value;
        const double ref = oracle::brute_force_mmd2(xr, yr, bank.bandwidths, bank.weights);
        worst = std::max(worst, std::abs(mine - ref));
        most_negative = std::min(most_negative, mine);
        worst_self = std::max(worst_self, std::abs(mmd2(x, x, bank).value));
    }
    report(2, "mmd brute-force equivalence",
           worst < 1e-10 && worst_self < 1e-12 && most_negative >= -1e-12,
           fmt("max |diff| %.3g, max self %.3g, min value %.3g", worst, worst_self,
               most_negative));
}

// ---------------------------------------------------------------------------
// 3. differential entropy vs quadrature
// ---------------------------------------------------------------------------
void criterion_3() {
    double worst_quad = 0.0;
    for (double v : {1e-3, 1.0, 1e3})
        worst_quad = std::max(worst_quad, std::abs(differential_entropy(v) -
                                                   oracle::gaussian_entropy_by_quadrature(v)));
    double worst_scale = 0.0;
    for (double v : {1e-3, 0.2, 1.0, 31.0, 1e3})
        worst_scale = std::max(worst_scale, std::abs(differential_entropy(9.0 * v) -
                                                     differential_entropy(v) - std::log(3.0)));
    report(3, "differential entropy", worst_quad < 1e-6 && worst_scale < 1e-12,
           fmt("quadrature err %.3g, scaling err %.3g", worst_quad, worst_scale));
}

// ---------------------------------------------------------------------------
// 4. spectral oracle: 10 Hz sinusoid at 200 Hz
// ---------------------------------------------------------------------------
void criterion_4() {
    bool ok = true;
    double alpha_seen = 0.0, leak_seen = 0.0;
    for (Taper taper : {Taper::rectangular, Taper::hann}) {
        EEGTrial trial;
        trial.sample_rate_hz = 200.0;
        trial.signal = Matrix(1, 600);
        for (std::size_t i = 0; i < 600; ++i)
            trial.signal.at(0, i) = std::sin(2.0 * std::numbers::pi * 10.0 * i / 200.0);
        SpectralConfig cfg;
        cfg.taper = taper;
        auto var = band_variance(trial, cfg);
        for (std::size_t w = 0; w < var.windows; ++w) {
            const double alpha = var.at(w, 0, 2);
            alpha_seen = alpha;
            if (std::abs(alpha - 0.5) > 0.01 * 0.5) ok = false;
            for (std::size_t b = 0; b < var.bands; ++b) {
                if (b == 2) continue;
                leak_seen = std::max(leak_seen, var.at(w, 0, b));
                if (var.at(w, 0, b) >= 0.01 * alpha) ok = false;
            }
        }
    }
    report(4, "spectral band oracle", ok,
           fmt("alpha %.6f (target 0.5), max leak %.3g", alpha_seen, leak_seen));
}

// ---------------------------------------------------------------------------
// 5. schedule exactness
// ---------------------------------------------------------------------------
void criterion_5() {
    const bool beta_ok = beta_from_loss(0.1, 0.3, 0.6) == 1.0 &&
                         beta_from_loss(0.45, 0.3, 0.6) == 0.5 &&
                         beta_from_loss(0.9, 0.3, 0.6) == 0.0;
    const int epochs = 200;
    const bool lambda_ok = lambda_schedule(0, epochs) == 0.0 &&
                           lambda_schedule(epochs / 2, epochs) == 1.0 &&
                           lambda_schedule(epochs, epochs) == 2.0;
    report(5, "schedule exactness", beta_ok && lambda_ok,
           fmt("beta regions %s, lambda endpoints %s", beta_ok ? "exact" : "WRONG",
               lambda_ok ? "exact" : "WRONG"));
}

// ---------------------------------------------------------------------------
// 6. SS-Mix invariants over 10^4 synthetic records
// ---------------------------------------------------------------------------
void criterion_6() {
    int violations = 0;

    // endpoint identities
    std::vector<double> xi{0.25, -1.5, 3.0}, xj{2.0, 0.5, -7.0};
    if (mix_features(xi, xj, 1.0) != xi) ++violations;
    if (mix_features(xi, xj, 0.0) != xj) ++violations;

    FeatureTable table = make_synthetic_dataset(4, 5, 50, 8, 3, 1.0, 0.3, 99);
    MixPolicy policy;
    policy.augment_factor = 10.0;  // 1000 originals -> 10^4 synthetics
    policy.rng_seed = 12345;
    FeatureTable out = ss_mix(table, policy);
    const std::size_t n = table.records.size();
    const std::size_t synth = out.records.size() - n;

    struct Envelope {
        std::vector<double> lo, hi;
        int label = -1;
    };
    std::map<std::pair<int, int>, Envelope> env;
    for (const auto& r : table.records) {
        auto& e = env[{r.subject_id, r.trial_id}];
        if (e.lo.empty()) {
            e.lo = e.hi = r.features;
            e.label = r.label;
            continue;
        }
        for (std::size_t j = 0; j < r.features.size(); ++j) {
            e.lo[j] = std::min(e.lo[j], r.features[j]);
            e.hi[j] = std::max(e.hi[j], r.features[j]);
        }
    }
    for (std::size_t i = n; i < out.records.size(); ++i) {
        const auto& r = out.records[i];
        auto it = env.find({r.subject_id, r.trial_id});
        if (it == env.end()) {  // pair never seen among originals: cross-trial mix
            ++violations;
            continue;
        }
        if (r.label != it->second.label) ++violations;
        for (std::size_t j = 0; j < r.features.size(); ++j)
            if (r.features[j] < it->second.lo[j] - 1e-12 ||
                r.features[j] > it->second.hi[j] + 1e-12)
                ++violations;
    }
    report(6, "ss-mix invariants", violations == 0 && synth == 10000,
           fmt("%zu synthetics, %d violations", synth, violations));
}

// shared state between criteria 7 and 8
double benchmark_full_mean = 0.0;

// ---------------------------------------------------------------------------
// 7. end-to-end synthetic adaptation
// ---------------------------------------------------------------------------
void criterion_7() {
    const auto start = std::chrono::steady_clock::now();
    FeatureTable table = benchmark_table();
    RunConfig cfg = benchmark_config();

    RunReport full = loso_run(table, cfg, 1);       // single core by contract
    RunReport off = loso_run(table, source_only(cfg), 1);
    const double seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();

    benchmark_full_mean = full.mean_accuracy;
    const double gap = full.mean_accuracy - off.mean_accuracy;
    const bool ok = full.mean_accuracy >= 0.90 && gap >= 0.10 &&
                    full.negative_transfer_count == 0 && seconds < 300.0;
    report(7, "end-to-end synthetic adaptation", ok,
           fmt("full %.4f, source-only %.4f, gap %+.1fpp, neg-transfer %d, %.0fs",
               full.mean_accuracy, off.mean_accuracy, 100.0 * gap,
               full.negative_transfer_count, seconds));
}

// ---------------------------------------------------------------------------
// 8. ablation ordering on the same benchmark
// ---------------------------------------------------------------------------
void criterion_8() {
    FeatureTable table = benchmark_table();
    RunConfig cfg = benchmark_config();
    auto rows = ablation_run(table, cfg, 2);  // folds parallelized; deterministic

    bool ok = rows.size() == 7;
    std::string detail;
    double full_mean = rows.empty() ? 0.0 : rows[0].mean_accuracy;
    if (std::abs(full_mean - benchmark_full_mean) > 1e-12) ok = false;  // cross-check vs 7
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double delta = rows[i].mean_accuracy - full_mean;
        if (delta > 0.01) ok = false;
        detail += fmt("%s%+.2f", i > 1 ? " " : "", 100.0 * delta);
    }
    report(8, "ablation ordering", ok,
           fmt("full %.4f; deltas(pp): %s", full_mean, detail.c_str()));
}

// ---------------------------------------------------------------------------
// 9. determinism: hash-identical logs and reports
// ---------------------------------------------------------------------------
void criterion_9() {
    FeatureTable table = make_synthetic_dataset(3, 3, 8, 6, 3, 0.8, 0.25, 55);
    RunConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 8;
    cfg.hidden1 = 8;
    cfg.hidden2 = 8;
    cfg.seed = 3;

    auto run_once = [&](const std::string& tag) {
        RunReport rep = loso_run(table, cfg, 2);
        save_report(rep, "/tmp/sdc_acceptance_report_" + tag + ".json");
        std::vector<EpochLog> logs;
        for (const auto& f : rep.folds)
            logs.insert(logs.end(), f.epochs.begin(), f.epochs.end());
        save_epoch_logs(logs, "/tmp/sdc_acceptance_log_" + tag + ".jsonl");
    };
    run_once("a");
    run_once("b");
    const auto report_a = oracle::fnv_hash(oracle::slurp_file("/tmp/sdc_acceptance_report_a.json"));
    const auto report_b = oracle::fnv_hash(oracle::slurp_file("/tmp/sdc_acceptance_report_b.json"));
    const auto log_a = oracle::fnv_hash(oracle::slurp_file("/tmp/sdc_acceptance_log_a.jsonl"));
    const auto log_b = oracle::fnv_hash(oracle::slurp_file("/tmp/sdc_acceptance_log_b.jsonl"));
    report(9, "determinism", report_a == report_b && log_a == log_b,
           fmt("report hash %016llx%s, log hash %016llx%s",
               static_cast<unsigned long long>(report_a), report_a == report_b ? "==" : "!=",
               static_cast<unsigned long long>(log_a), log_a == log_b ? "==" : "!="));
}

// ---------------------------------------------------------------------------
// 10. MI sanity
// ---------------------------------------------------------------------------
void criterion_10() {
    auto rng = derive_rng(77, "acceptance-mi");
    std::normal_distribution<double> g(0.0, 1.0);
    const int n = 10000, bands = 5, channels = 2;
    FeatureTable t;
    t.dim = bands * channels;
    t.num_classes = 3;
    Matrix probs(n, 3);
    std::vector<double> driver(n);
    for (int i = 0; i < n; ++i) driver[i] = g(rng);
    std::vector<double> shuffled = driver;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (int i = 0; i < n; ++i) {
        const double z0 = driver[i], z1 = 0.3 * driver[i] + 0.5;
        const double e0 = std::exp(z0), e1 = std::exp(z1), e2 = 1.0;
        const double s = e0 + e1 + e2;
        probs.at(i, 0) = e0 / s;
        probs.at(i, 1) = e1 / s;
        probs.at(i, 2) = e2 / s;
        FeatureRecord r;
        r.subject_id = 0;
        r.trial_id = 0;
        r.window_id = i;
        r.label = 0;
        r.features.assign(t.dim, 0.0);
        r.features[0] = driver[i];    // informative
        r.features[1] = shuffled[i];  // statistically independent
        for (int j = 2; j < t.dim; ++j) r.features[j] = g(rng);
        t.records.push_back(std::move(r));
    }
    MiTensor mi = mi_topography(t, probs, bands, channels);
    bool shape_ok = mi.num_classes == 3 && mi.bands == bands && mi.channels == channels &&
                    mi.values.size() == 3u * bands * channels;
    bool range_ok = true;
    for (double v : mi.values)
        if (v < 0.0 || v > 1.0) range_ok = false;
    double shuffled_max = 0.0;  // feature 1 = channel 0, band 1
    for (int c = 0; c < 3; ++c) shuffled_max = std::max(shuffled_max, mi.at(c, 1, 0));
    report(10, "mi sanity", shape_ok && range_ok && shuffled_max < 0.05,
           fmt("shape %s, range %s, shuffled MI %.4f", shape_ok ? "ok" : "WRONG",
               range_ok ? "ok" : "WRONG", shuffled_max));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("%s: %d/10 criteria passed\n", failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
                10 - failures);
    return failures;
}
