#include "sdc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace sdc {

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (long long v : counts) t += v;
    return t;
}

long long ConfusionMatrix::trace() const {
    long long t = 0;
    for (int c = 0; c < num_classes; ++c) t += at(c, c);
    return t;
}

double ConfusionMatrix::accuracy() const {
    long long n = total();
    return n > 0 ? static_cast<double>(trace()) / static_cast<double>(n) : 0.0;
}

namespace {

Matrix table_matrix(const Model& model, const FeatureTable& table) {
    FeatureTable scaled = model.scaler.apply(table);
    Matrix m(scaled.records.size(), scaled.dim);
    for (std::size_t i = 0; i < scaled.records.size(); ++i)
        std::copy(scaled.records[i].features.begin(), scaled.records[i].features.end(), m.row(i));
    return m;
}

}  // namespace

Matrix predict_probabilities(const Model& model, const FeatureTable& table) {
    Matrix x = table_matrix(model, table);
    ForwardCache cache = forward(model.params, x, Mode::eval, 0.0, nullptr);
    return cache.probs;
}

Matrix predict_embeddings(const Model& model, const FeatureTable& table) {
    Matrix x = table_matrix(model, table);
    ForwardCache cache = forward(model.params, x, Mode::eval, 0.0, nullptr);
    return cache.embedding;
}

std::pair<double, ConfusionMatrix> evaluate(const Model& model, const FeatureTable& table) {
    if (table.records.empty()) throw ValidationError("evaluate: empty table");
    if (!table.all_labeled()) throw ValidationError("evaluate: table has unlabeled records");
    const int c = std::max(table.num_classes, model.params.num_classes());
    Matrix probs = predict_probabilities(model, table);
    ConfusionMatrix cm(c);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const double* p = probs.row(i);
        int best = 0;
        for (std::size_t k = 1; k < probs.cols; ++k)
            if (p[k] > p[best]) best = static_cast<int>(k);
        cm.at(table.records[i].label, best) += 1;
    }
    return {cm.accuracy(), cm};
}

bool detect_negative_transfer(double accuracy, int num_classes) {
    if (num_classes < 1) throw ValidationError("detect_negative_transfer: bad class count");
    if (accuracy < 0.0 || accuracy > 1.0)
        throw ValidationError("detect_negative_transfer: accuracy outside [0,1]");
    return accuracy < 1.0 / static_cast<double>(num_classes);
}

RunReport loso_run(const FeatureTable& table, const RunConfig& config, int jobs) {
    config.validate();
    auto splits = loso_splits(table);
    auto subjects = table.subject_ids();

    RunReport report;
    report.folds.resize(splits.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= splits.size()) return;
            FitResult fr = fit(splits[k], config);
            auto [acc, cm] = evaluate(fr.model, splits[k].evaluation_target());
            FoldResult fold;
            fold.fold = static_cast<int>(k);
            fold.target_subject = subjects[k];
            fold.accuracy = acc;
            fold.confusion = cm;
            fold.negative_transfer = detect_negative_transfer(acc, table.num_classes);
            fold.epochs = std::move(fr.epochs);
            report.folds[k] = std::move(fold);
        }
    };

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(splits.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    double sum = 0.0;
    for (const auto& f : report.folds) {
        sum += f.accuracy;
        if (f.negative_transfer) ++report.negative_transfer_count;
    }
    report.mean_accuracy = sum / static_cast<double>(report.folds.size());
    double var = 0.0;
    for (const auto& f : report.folds) {
        double d = f.accuracy - report.mean_accuracy;
        var += d * d;
    }
    report.std_accuracy = std::sqrt(var / static_cast<double>(report.folds.size()));
    return report;
}

std::vector<AblationRow> ablation_run(const FeatureTable& table, const RunConfig& config,
                                      int jobs) {
    struct Variant {
        const char* name;
        bool RunConfig::*flag;
    };
    static const Variant variants[] = {
        {"without_ss_mix", &RunConfig::disable_ss_mix},
        {"without_mmd", &RunConfig::disable_mmd},
        {"without_cmmd", &RunConfig::disable_cmmd},
        {"without_dscl_source", &RunConfig::disable_dscl_source},
        {"without_dscl_target", &RunConfig::disable_dscl_target},
        {"without_pseudo_confidence", &RunConfig::disable_pseudo_confidence},
    };

    std::vector<AblationRow> rows;
    auto run_one = [&](const std::string& name, const RunConfig& cfg) {
        RunReport rep = loso_run(table, cfg, jobs);
        AblationRow row;
        row.name = name;
        row.mean_accuracy = rep.mean_accuracy;
        row.std_accuracy = rep.std_accuracy;
        row.negative_transfer_count = rep.negative_transfer_count;
        rows.push_back(std::move(row));
    };

    run_one("full", config);
    for (const auto& v : variants) {
        RunConfig cfg = config;
        cfg.*(v.flag) = true;
        run_one(v.name, cfg);
    }
    return rows;
}

namespace {

void bin_column(const std::vector<double>& col, int bins, std::vector<int>& out) {
    double lo = col[0], hi = col[0];
    for (double v : col) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    out.resize(col.size());
    if (!(hi > lo)) {
        std::fill(out.begin(), out.end(), 0);
        return;
    }
    const double width = (hi - lo) / bins;
    for (std::size_t i = 0; i < col.size(); ++i) {
        int b = static_cast<int>((col[i] - lo) / width);
        out[i] = std::min(b, bins - 1);
    }
}

double discrete_mi(const std::vector<int>& a, const std::vector<int>& b, int bins) {
    const double n = static_cast<double>(a.size());
    std::vector<double> joint(bins * bins, 0.0), pa(bins, 0.0), pb(bins, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[a[i] * bins + b[i]] += 1.0;
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
    }
    double mi = 0.0;
    for (int u = 0; u < bins; ++u)
        for (int v = 0; v < bins; ++v) {
            double puv = joint[u * bins + v];
            if (puv == 0.0) continue;
            mi += (puv / n) * std::log(puv * n / (pa[u] * pb[v]));
        }
    return mi;
}

}  // namespace

double discrete_mutual_information(const std::vector<double>& x, const std::vector<double>& y,
                                   int bins) {
    if (x.size() != y.size() || x.empty())
        throw ValidationError("discrete_mutual_information: bad input lengths");
    if (bins < 2) throw ValidationError("discrete_mutual_information: bins must be >= 2");
    std::vector<int> bx, by;
    bin_column(x, bins, bx);
    bin_column(y, bins, by);
    return discrete_mi(bx, by, bins);
}

MiTensor mi_topography(const FeatureTable& features, const Matrix& probs, int bands,
                       int channels) {
    if (features.dim != bands * channels)
        throw ValidationError("mi_topography: dim != bands * channels");
    if (probs.rows != features.records.size())
        throw ValidationError("mi_topography: probability row count mismatch");
    if (features.records.empty()) throw ValidationError("mi_topography: empty table");
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < probs.cols; ++c) s += probs.at(i, c);
        if (std::abs(s - 1.0) > 1e-6)
            throw ValidationError("mi_topography: probability rows must sum to 1");
    }
    constexpr int kBins = 10;
    const int num_classes = static_cast<int>(probs.cols);
    const std::size_t n = features.records.size();

    // Pre-bin every feature column and every class-probability column.
    std::vector<std::vector<int>> feat_bins(features.dim);
    {
        std::vector<double> col(n);
        for (int j = 0; j < features.dim; ++j) {
            for (std::size_t i = 0; i < n; ++i) col[i] = features.records[i].features[j];
            bin_column(col, kBins, feat_bins[j]);
        }
    }
    std::vector<std::vector<int>> prob_bins(num_classes);
    {
        std::vector<double> col(n);
        for (int c = 0; c < num_classes; ++c) {
            for (std::size_t i = 0; i < n; ++i) col[i] = probs.at(i, c);
            bin_column(col, kBins, prob_bins[c]);
        }
    }

    MiTensor mi;
    mi.num_classes = num_classes;
    mi.bands = bands;
    mi.channels = channels;
    mi.values.assign(static_cast<std::size_t>(num_classes) * bands * channels, 0.0);
    for (int c = 0; c < num_classes; ++c)
        for (int ch = 0; ch < channels; ++ch)
            for (int b = 0; b < bands; ++b)
                mi.at(c, b, ch) = discrete_mi(feat_bins[ch * bands + b], prob_bins[c], kBins);

    double lo = mi.values[0], hi = mi.values[0];
    for (double v : mi.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi > lo)
        for (double& v : mi.values) v = (v - lo) / (hi - lo);
    else
        std::fill(mi.values.begin(), mi.values.end(), 0.0);
    return mi;
}

void export_embeddings(const Model& model, const FeatureTable& table, const std::string& path) {
    Matrix emb = predict_embeddings(model, table);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "subject,trial,window,label";
    for (std::size_t j = 0; j < emb.cols; ++j) out << ",e" << j;
    out << "\n";
    char buf[40];
    for (std::size_t i = 0; i < emb.rows; ++i) {
        const auto& r = table.records[i];
        out << r.subject_id << ',' << r.trial_id << ',' << r.window_id << ',' << r.label;
        for (std::size_t j = 0; j < emb.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", emb.at(i, j));
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

nlohmann::json fold_to_json(const FoldResult& f) {
    nlohmann::json j;
    j["fold"] = f.fold;
    j["target_subject"] = f.target_subject;
    j["accuracy"] = f.accuracy;
    j["negative_transfer"] = f.negative_transfer;
    std::vector<std::vector<long long>> cm(f.confusion.num_classes);
    for (int t = 0; t < f.confusion.num_classes; ++t)
        for (int p = 0; p < f.confusion.num_classes; ++p) cm[t].push_back(f.confusion.at(t, p));
    j["confusion"] = cm;
    std::vector<nlohmann::json> epochs;
    for (const auto& e : f.epochs) epochs.push_back(nlohmann::json::parse(epoch_log_json(e)));
    j["epochs"] = epochs;
    return j;
}

}  // namespace

std::string report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["mean_accuracy"] = report.mean_accuracy;
    j["std_accuracy"] = report.std_accuracy;
    j["negative_transfer_count"] = report.negative_transfer_count;
    if (!report.mi.empty()) {
        nlohmann::json mi;
        mi["num_classes"] = report.mi.num_classes;
        mi["bands"] = report.mi.bands;
        mi["channels"] = report.mi.channels;
        mi["values"] = report.mi.values;
        j["mi"] = mi;
    }
    std::vector<nlohmann::json> folds;
    for (const auto& f : report.folds) folds.push_back(fold_to_json(f));
    j["folds"] = folds;
    return j.dump(2);
}

void save_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << report_to_json(report) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::string ablation_to_json(const std::vector<AblationRow>& rows) {
    nlohmann::json j;
    std::vector<nlohmann::json> out;
    for (const auto& r : rows) {
        nlohmann::json row;
        row["name"] = r.name;
        row["mean_accuracy"] = r.mean_accuracy;
        row["std_accuracy"] = r.std_accuracy;
        row["negative_transfer_count"] = r.negative_transfer_count;
        out.push_back(row);
    }
    j["rows"] = out;
    return j.dump(2);
}

void save_ablation(const std::vector<AblationRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << ablation_to_json(rows) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

void save_mi_csv(const MiTensor& mi, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "class,band,channel,value\n";
    char buf[40];
    for (int c = 0; c < mi.num_classes; ++c)
        for (int b = 0; b < mi.bands; ++b)
            for (int ch = 0; ch < mi.channels; ++ch) {
                std::snprintf(buf, sizeof(buf), "%.17g", mi.at(c, b, ch));
                out << c << ',' << b << ',' << ch << ',' << buf << "\n";
            }
    if (!out) throw IoError("write failed for '" + path + "'");
}

void save_epoch_logs(const std::vector<EpochLog>& logs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& log : logs) out << epoch_log_json(log) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace sdc
