#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdc/errors.hpp"

namespace sdc {

// One windowed feature vector. label == -1 means unlabeled; labels are
// mandatory in the source domain and optional in the target domain.
struct FeatureRecord {
    int subject_id = 0;
    int trial_id = 0;
    int window_id = 0;
    std::vector<double> features;
    int label = -1;

    bool has_label() const { return label >= 0; }
};

struct FeatureTable {
    std::vector<FeatureRecord> records;
    int dim = 0;
    int num_classes = 0;

    std::size_t size() const { return records.size(); }
    bool all_labeled() const;
    std::vector<int> subject_ids() const;  // sorted, unique
    void check_consistent() const;         // widths, label range, finiteness
};

// Source/target pair for one adaptation run. Target labels are retained for
// evaluation only; training code gets a label-stripped view.
class DomainSplit {
public:
    DomainSplit(FeatureTable source, FeatureTable labeled_target);

    const FeatureTable& source() const { return source_; }
    const FeatureTable& target() const { return target_unlabeled_; }

    // Sealed labels; only evaluation code should call this.
    const FeatureTable& evaluation_target() const { return target_labeled_; }

private:
    FeatureTable source_;
    FeatureTable target_unlabeled_;
    FeatureTable target_labeled_;
};

struct RunConfig {
    std::uint64_t seed = 42;
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double dropout = 0.25;
    int hidden1 = 64;
    int hidden2 = 64;
    double mix_beta_param = 0.5;
    double augment_factor = 1.0;
    int kernel_count = 5;
    double tau_start = 0.80, tau_end = 0.95;
    double tau_pu_start = 0.95, tau_pu_end = 0.80;
    double tau_pl_start = 0.05, tau_pl_end = 0.20;
    double alpha_start = 1.0, alpha_end = 0.1;
    double rho0 = 0.3, rho1 = 0.6;
    bool disable_ss_mix = false;
    bool disable_mmd = false;
    bool disable_cmmd = false;
    bool disable_dscl_source = false;
    bool disable_dscl_target = false;
    bool disable_pseudo_confidence = false;
    bool standardize = true;
    bool cmmd_class_mean = false;
    bool swap_lambda_beta_pt = false;
    bool dscl_target_accepted_only = false;

    void validate() const;  // throws ValidationError
};

RunConfig load_run_config(const std::string& path);

// Feature CSV: header `subject,trial,window,label,f0,...,f{d-1}`, label -1
// for unlabeled, values at 17 significant digits so save/load round-trips
// bit-exactly. expected_classes, when >= 0, turns labels >= expected_classes
// into line-numbered format errors.
FeatureTable load_feature_table(const std::string& path, int expected_classes = -1);
void save_feature_table(const FeatureTable& table, const std::string& path);

// Synthetic covariate-shift corpus: classes sit on fixed orthogonal means;
// every subject applies its own random rotation plus a translation of
// magnitude shift_strength to all of its samples. Labels are assigned per
// trial so each trial is label-pure. Pure function of its arguments.
FeatureTable make_synthetic_dataset(int num_subjects, int trials_per_subject,
                                    int windows_per_trial, int dim, int num_classes,
                                    double shift_strength, double noise_sigma,
                                    std::uint64_t seed);

// One split per subject: that subject is the target, everyone else the source.
std::vector<DomainSplit> loso_splits(const FeatureTable& table);

// Per-feature affine standardization fitted on the source domain only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool empty() const { return mean.empty(); }
    static Standardizer fit(const FeatureTable& table);
    FeatureTable apply(const FeatureTable& table) const;
};

}  // namespace sdc
