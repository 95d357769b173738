#pragma once

#include <string>
#include <vector>

#include "sdc/net.hpp"
#include "sdc/trainer.hpp"

namespace sdc {

// rows = true class, columns = predicted class
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<long long> counts;

    explicit ConfusionMatrix(int c = 0) : num_classes(c), counts(static_cast<std::size_t>(c) * c, 0) {}
    long long& at(int truth, int pred) { return counts[truth * num_classes + pred]; }
    long long at(int truth, int pred) const { return counts[truth * num_classes + pred]; }
    long long total() const;
    long long trace() const;
    double accuracy() const;
};

// Eval-mode class probabilities for every record (scaler applied).
Matrix predict_probabilities(const Model& model, const FeatureTable& table);

// Eval-mode embeddings for every record (scaler applied).
Matrix predict_embeddings(const Model& model, const FeatureTable& table);

std::pair<double, ConfusionMatrix> evaluate(const Model& model, const FeatureTable& table);

// True iff accuracy is strictly below chance (1/C).
bool detect_negative_transfer(double accuracy, int num_classes);

struct FoldResult {
    int fold = 0;
    int target_subject = 0;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    bool negative_transfer = false;
    std::vector<EpochLog> epochs;
};

// classes x bands x channels mutual-information tensor, min-max normalized
// globally to [0, 1].
struct MiTensor {
    int num_classes = 0, bands = 0, channels = 0;
    std::vector<double> values;

    double& at(int c, int b, int ch) { return values[(c * bands + b) * channels + ch]; }
    double at(int c, int b, int ch) const { return values[(c * bands + b) * channels + ch]; }
    bool empty() const { return values.empty(); }
};

struct RunReport {
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population std over folds
    int negative_transfer_count = 0;
    MiTensor mi;  // optional; filled by the MI topography path
};

// Runs fit on every LOSO split; folds may run in parallel (jobs > 1) and the
// report is identical either way.
RunReport loso_run(const FeatureTable& table, const RunConfig& config, int jobs = 1);

struct AblationRow {
    std::string name;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    int negative_transfer_count = 0;
};

// Full model plus the six single-component-off configurations.
std::vector<AblationRow> ablation_run(const FeatureTable& table, const RunConfig& config,
                                      int jobs = 1);

// Equal-width-binned mutual information between two continuous variables,
// in nats. Constant columns land in one bin and give MI 0.
double discrete_mutual_information(const std::vector<double>& x, const std::vector<double>& y,
                                   int bins = 10);

// MI between each feature (channel-major: index = channel*bands + band) and
// each class-probability column, estimated with 10 equal-width bins per
// variable, in nats, then min-max scaled over the whole tensor.
MiTensor mi_topography(const FeatureTable& features, const Matrix& probs, int bands,
                       int channels);

// CSV of (subject, trial, window, label, e0..e{h2-1}); stable record order.
void export_embeddings(const Model& model, const FeatureTable& table, const std::string& path);

std::string report_to_json(const RunReport& report);
void save_report(const RunReport& report, const std::string& path);
std::string ablation_to_json(const std::vector<AblationRow>& rows);
void save_ablation(const std::vector<AblationRow>& rows, const std::string& path);
void save_mi_csv(const MiTensor& mi, const std::string& path);
void save_epoch_logs(const std::vector<EpochLog>& logs, const std::string& path);

}  // namespace sdc
