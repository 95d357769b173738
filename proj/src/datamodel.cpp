#include "sdc/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sdc/rng.hpp"

namespace sdc {

bool FeatureTable::all_labeled() const {
    for (const auto& r : records)
        if (!r.has_label()) return false;
    return true;
}

std::vector<int> FeatureTable::subject_ids() const {
    std::set<int> ids;
    for (const auto& r : records) ids.insert(r.subject_id);
    return std::vector<int>(ids.begin(), ids.end());
}

void FeatureTable::check_consistent() const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (static_cast<int>(r.features.size()) != dim)
            throw ValidationError("feature table: record " + std::to_string(i) +
                                  " has width " + std::to_string(r.features.size()) +
                                  ", table dim is " + std::to_string(dim));
        if (r.has_label() && r.label >= num_classes)
            throw ValidationError("feature table: record " + std::to_string(i) +
                                  " has label " + std::to_string(r.label) +
                                  " >= num_classes " + std::to_string(num_classes));
        for (double v : r.features)
            if (!std::isfinite(v))
                throw ValidationError("feature table: record " + std::to_string(i) +
                                      " contains a non-finite value");
    }
}

DomainSplit::DomainSplit(FeatureTable source, FeatureTable labeled_target)
    : source_(std::move(source)), target_labeled_(std::move(labeled_target)) {
    if (source_.dim != target_labeled_.dim)
        throw ValidationError("domain split: source dim " + std::to_string(source_.dim) +
                              " != target dim " + std::to_string(target_labeled_.dim));
    if (source_.num_classes != target_labeled_.num_classes)
        throw ValidationError("domain split: class counts differ");
    if (!source_.all_labeled())
        throw ValidationError("domain split: source domain contains unlabeled records");
    source_.check_consistent();
    target_labeled_.check_consistent();
    std::set<int> src_subjects;
    for (const auto& r : source_.records) src_subjects.insert(r.subject_id);
    for (const auto& r : target_labeled_.records)
        if (src_subjects.count(r.subject_id))
            throw ValidationError("domain split: subject " + std::to_string(r.subject_id) +
                                  " appears in both domains");
    target_unlabeled_ = target_labeled_;
    for (auto& r : target_unlabeled_.records) r.label = -1;
}

void RunConfig::validate() const {
    if (epochs < 1) throw ValidationError("config: epochs must be >= 1");
    if (batch_size < 2) throw ValidationError("config: batch_size must be >= 2");
    if (learning_rate <= 0.0) throw ValidationError("config: learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("config: momentum must be in [0,1)");
    if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("config: dropout must be in [0,1)");
    if (hidden1 < 1 || hidden2 < 1) throw ValidationError("config: hidden dims must be >= 1");
    if (mix_beta_param <= 0.0) throw ValidationError("config: mix_beta_param must be > 0");
    if (augment_factor < 0.0) throw ValidationError("config: augment_factor must be >= 0");
    if (kernel_count < 1) throw ValidationError("config: kernel_count must be >= 1");
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(tau_start) || !in_unit(tau_end))
        throw ValidationError("config: tau endpoints must be in [0,1]");
    if (!in_unit(tau_pu_start) || !in_unit(tau_pu_end) || !in_unit(tau_pl_start) || !in_unit(tau_pl_end))
        throw ValidationError("config: pair-threshold endpoints must be in [0,1]");
    // Linear schedules: checking both endpoints covers every epoch.
    if (tau_pl_start >= tau_pu_start || tau_pl_end >= tau_pu_end)
        throw ValidationError("config: tau_pl must stay below tau_pu at every epoch");
    if (!(rho0 > 0.0) || !(rho0 < rho1)) throw ValidationError("config: need 0 < rho0 < rho1");
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValidationError("config: bad boolean '" + v + "' for key '" + key + "'");
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config " + path + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        try {
            if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "epochs") cfg.epochs = std::stoi(val);
            else if (key == "batch_size") cfg.batch_size = std::stoi(val);
            else if (key == "learning_rate") cfg.learning_rate = std::stod(val);
            else if (key == "momentum") cfg.momentum = std::stod(val);
            else if (key == "dropout") cfg.dropout = std::stod(val);
            else if (key == "hidden1") cfg.hidden1 = std::stoi(val);
            else if (key == "hidden2") cfg.hidden2 = std::stoi(val);
            else if (key == "mix_beta_param") cfg.mix_beta_param = std::stod(val);
            else if (key == "augment_factor") cfg.augment_factor = std::stod(val);
            else if (key == "kernel_count") cfg.kernel_count = std::stoi(val);
            else if (key == "tau_start") cfg.tau_start = std::stod(val);
            else if (key == "tau_end") cfg.tau_end = std::stod(val);
            else if (key == "tau_pu_start") cfg.tau_pu_start = std::stod(val);
            else if (key == "tau_pu_end") cfg.tau_pu_end = std::stod(val);
            else if (key == "tau_pl_start") cfg.tau_pl_start = std::stod(val);
            else if (key == "tau_pl_end") cfg.tau_pl_end = std::stod(val);
            else if (key == "alpha_start") cfg.alpha_start = std::stod(val);
            else if (key == "alpha_end") cfg.alpha_end = std::stod(val);
            else if (key == "rho0") cfg.rho0 = std::stod(val);
            else if (key == "rho1") cfg.rho1 = std::stod(val);
            else if (key == "disable_ss_mix") cfg.disable_ss_mix = parse_bool(val, key);
            else if (key == "disable_mmd") cfg.disable_mmd = parse_bool(val, key);
            else if (key == "disable_cmmd") cfg.disable_cmmd = parse_bool(val, key);
            else if (key == "disable_dscl_source") cfg.disable_dscl_source = parse_bool(val, key);
            else if (key == "disable_dscl_target") cfg.disable_dscl_target = parse_bool(val, key);
            else if (key == "disable_pseudo_confidence") cfg.disable_pseudo_confidence = parse_bool(val, key);
            else if (key == "standardize") cfg.standardize = parse_bool(val, key);
            else if (key == "cmmd_class_mean") cfg.cmmd_class_mean = parse_bool(val, key);
            else if (key == "swap_lambda_beta_pt") cfg.swap_lambda_beta_pt = parse_bool(val, key);
            else if (key == "dscl_target_accepted_only") cfg.dscl_target_accepted_only = parse_bool(val, key);
            else
                throw ValidationError("config " + path + ":" + std::to_string(line_no) +
                                      ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ValidationError("config " + path + ":" + std::to_string(line_no) +
                                  ": bad value '" + val + "' for key '" + key + "'");
        } catch (const std::out_of_range&) {
            throw ValidationError("config " + path + ":" + std::to_string(line_no) +
                                  ": value out of range for key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

namespace {

// Strict double parse; rejects trailing garbage like "1.2x".
double parse_double(const std::string& s, const std::string& context) {
    const char* p = s.c_str();
    char* end = nullptr;
    double v = std::strtod(p, &end);
    if (end == p || *end != '\0')
        throw ValidationError(context + ": bad number '" + s + "'");
    return v;
}

long parse_int(const std::string& s, const std::string& context) {
    const char* p = s.c_str();
    char* end = nullptr;
    long v = std::strtol(p, &end, 10);
    if (end == p || *end != '\0')
        throw ValidationError(context + ": bad integer '" + s + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

FeatureTable load_feature_table(const std::string& path, int expected_classes) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feature file '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path + ":1: missing header");
    auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "subject" || header[1] != "trial" ||
        header[2] != "window" || header[3] != "label")
        throw ValidationError(path + ":1: header must start with subject,trial,window,label");
    const int dim = static_cast<int>(header.size()) - 4;
    for (int j = 0; j < dim; ++j)
        if (header[4 + j] != "f" + std::to_string(j))
            throw ValidationError(path + ":1: feature column " + std::to_string(j) +
                                  " must be named f" + std::to_string(j));

    FeatureTable table;
    table.dim = dim;
    int max_label = -1;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        const std::string ctx = path + ":" + std::to_string(line_no);
        if (static_cast<int>(cells.size()) != dim + 4)
            throw ValidationError(ctx + ": row has " + std::to_string(cells.size()) +
                                  " columns, expected " + std::to_string(dim + 4));
        FeatureRecord rec;
        rec.subject_id = static_cast<int>(parse_int(cells[0], ctx));
        rec.trial_id = static_cast<int>(parse_int(cells[1], ctx));
        rec.window_id = static_cast<int>(parse_int(cells[2], ctx));
        rec.label = static_cast<int>(parse_int(cells[3], ctx));
        if (rec.subject_id < 0 || rec.trial_id < 0 || rec.window_id < 0)
            throw ValidationError(ctx + ": negative id");
        if (rec.label < -1)
            throw ValidationError(ctx + ": label must be >= -1");
        if (expected_classes >= 0 && rec.label >= expected_classes)
            throw ValidationError(ctx + ": label " + std::to_string(rec.label) +
                                  " >= num_classes " + std::to_string(expected_classes));
        rec.features.reserve(dim);
        for (int j = 0; j < dim; ++j) {
            double v = parse_double(cells[4 + j], ctx);
            if (!std::isfinite(v)) throw ValidationError(ctx + ": non-finite feature value");
            rec.features.push_back(v);
        }
        max_label = std::max(max_label, rec.label);
        table.records.push_back(std::move(rec));
    }
    table.num_classes = std::max(max_label + 1, expected_classes < 0 ? 0 : expected_classes);
    return table;
}

void save_feature_table(const FeatureTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: keep LF endings everywhere
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "subject,trial,window,label";
    for (int j = 0; j < table.dim; ++j) out << ",f" << j;
    out << "\n";
    char buf[40];
    for (const auto& r : table.records) {
        out << r.subject_id << ',' << r.trial_id << ',' << r.window_id << ',' << r.label;
        for (double v : r.features) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

// Orthonormal class directions via Gram-Schmidt on seeded Gaussian draws.
std::vector<std::vector<double>> class_means(int num_classes, int dim, double radius,
                                             std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> dirs;
    while (static_cast<int>(dirs.size()) < num_classes) {
        std::vector<double> v(dim);
        for (auto& x : v) x = gauss(rng);
        for (const auto& u : dirs) {
            double dot = 0.0;
            for (int i = 0; i < dim; ++i) dot += v[i] * u[i];
            for (int i = 0; i < dim; ++i) v[i] -= dot * u[i];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;  // rare collinear draw; redraw
        for (auto& x : v) x /= norm;
        dirs.push_back(std::move(v));
    }
    for (auto& d : dirs)
        for (auto& x : d) x *= radius;
    return dirs;
}

// Orthogonal matrix built from `dim` Givens rotations in random planes with
// angles scaled by shift_strength.
std::vector<std::vector<double>> subject_rotation(int dim, double shift_strength,
                                                  std::mt19937_64& rng) {
    std::vector<std::vector<double>> r(dim, std::vector<double>(dim, 0.0));
    for (int i = 0; i < dim; ++i) r[i][i] = 1.0;
    std::uniform_int_distribution<int> pick(0, dim - 1);
    std::uniform_real_distribution<double> angle(-0.6, 0.6);
    for (int k = 0; k < dim; ++k) {
        int p = pick(rng);
        int q = pick(rng);
        if (p == q) continue;
        double theta = shift_strength * angle(rng);
        double c = std::cos(theta), s = std::sin(theta);
        // left-multiply by G(p,q,theta): rows p and q of r change
        for (int j = 0; j < dim; ++j) {
            double rp = r[p][j], rq = r[q][j];
            r[p][j] = c * rp - s * rq;
            r[q][j] = s * rp + c * rq;
        }
    }
    return r;
}

}  // namespace

FeatureTable make_synthetic_dataset(int num_subjects, int trials_per_subject,
                                    int windows_per_trial, int dim, int num_classes,
                                    double shift_strength, double noise_sigma,
                                    std::uint64_t seed) {
    if (num_subjects < 1 || trials_per_subject < 1 || windows_per_trial < 1 || num_classes < 1)
        throw ValidationError("make_synthetic_dataset: all counts must be >= 1");
    if (dim < num_classes)
        throw ValidationError("make_synthetic_dataset: dim must be >= num_classes");
    if (noise_sigma < 0.0 || shift_strength < 0.0)
        throw ValidationError("make_synthetic_dataset: negative magnitude");

    // Orthonormal means at radius r have pairwise distance sqrt(2)*r; the
    // radius keeps that at >= 4*noise_sigma.
    const double radius = std::max(1.0, 3.0 * noise_sigma);
    auto means_rng = derive_rng(seed, "class-means");
    auto means = class_means(num_classes, dim, radius, means_rng);

    FeatureTable table;
    table.dim = dim;
    table.num_classes = num_classes;
    table.records.reserve(static_cast<std::size_t>(num_subjects) * trials_per_subject *
                          windows_per_trial);

    for (int s = 0; s < num_subjects; ++s) {
        auto rng = derive_rng(seed, "subject", static_cast<std::uint64_t>(s));
        auto rot = subject_rotation(dim, shift_strength, rng);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> shift(dim, 0.0);
        if (shift_strength > 0.0) {
            double norm = 0.0;
            for (auto& x : shift) {
                x = gauss(rng);
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (auto& x : shift) x = shift_strength * x / (norm > 0 ? norm : 1.0);
        }
        for (int t = 0; t < trials_per_subject; ++t) {
            const int label = t % num_classes;  // label-pure trials, balanced per subject
            for (int w = 0; w < windows_per_trial; ++w) {
                std::vector<double> x(dim);
                for (int i = 0; i < dim; ++i)
                    x[i] = means[label][i] + noise_sigma * gauss(rng);
                FeatureRecord rec;
                rec.subject_id = s;
                rec.trial_id = t;
                rec.window_id = w;
                rec.label = label;
                rec.features.assign(dim, 0.0);
                for (int i = 0; i < dim; ++i) {
                    double acc = shift[i];
                    for (int j = 0; j < dim; ++j) acc += rot[i][j] * x[j];
                    rec.features[i] = acc;
                }
                table.records.push_back(std::move(rec));
            }
        }
    }
    return table;
}

std::vector<DomainSplit> loso_splits(const FeatureTable& table) {
    if (!table.all_labeled())
        throw ValidationError("loso_splits: every record must be labeled");
    auto subjects = table.subject_ids();
    if (subjects.size() < 2)
        throw ValidationError("loso_splits: need at least 2 distinct subjects");
    std::vector<DomainSplit> splits;
    splits.reserve(subjects.size());
    for (int target_subject : subjects) {
        FeatureTable src, tgt;
        src.dim = tgt.dim = table.dim;
        src.num_classes = tgt.num_classes = table.num_classes;
        for (const auto& r : table.records) {
            if (r.subject_id == target_subject)
                tgt.records.push_back(r);
            else
                src.records.push_back(r);
        }
        splits.emplace_back(std::move(src), std::move(tgt));
    }
    return splits;
}

Standardizer Standardizer::fit(const FeatureTable& table) {
    if (table.records.empty())
        throw ValidationError("standardizer: cannot fit on an empty table");
    const int d = table.dim;
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 0.0);
    const double n = static_cast<double>(table.records.size());
    for (const auto& r : table.records)
        for (int j = 0; j < d; ++j) s.mean[j] += r.features[j];
    for (int j = 0; j < d; ++j) s.mean[j] /= n;
    for (const auto& r : table.records)
        for (int j = 0; j < d; ++j) {
            double c = r.features[j] - s.mean[j];
            s.stddev[j] += c * c;
        }
    for (int j = 0; j < d; ++j) s.stddev[j] = std::sqrt(s.stddev[j] / n);
    return s;
}

FeatureTable Standardizer::apply(const FeatureTable& table) const {
    if (empty()) return table;
    if (table.dim != static_cast<int>(mean.size()))
        throw ValidationError("standardizer: dim mismatch");
    FeatureTable out = table;
    for (auto& r : out.records)
        for (std::size_t j = 0; j < mean.size(); ++j) {
            double sd = stddev[j];
            r.features[j] = sd > 0.0 ? (r.features[j] - mean[j]) / sd : 0.0;
        }
    return out;
}

}  // namespace sdc
