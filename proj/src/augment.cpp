#include "sdc/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sdc/rng.hpp"

namespace sdc {

double sample_mix_coefficient(const MixPolicy& policy, std::mt19937_64& rng) {
    if (!(policy.beta_param > 0.0))
        throw ValidationError("mix policy: beta_param must be > 0");
    std::gamma_distribution<double> gamma(policy.beta_param, 1.0);
    double g1 = gamma(rng);
    double g2 = gamma(rng);
    double omega = (g1 + g2) > 0.0 ? g1 / (g1 + g2) : 0.5;
    return std::clamp(omega, 1e-12, 1.0 - 1e-12);
}

std::vector<double> mix_features(const std::vector<double>& xi,
                                 const std::vector<double>& xj, double omega) {
    if (xi.size() != xj.size())
        throw ValidationError("mix_features: width mismatch");
    std::vector<double> out(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k)
        out[k] = omega * xi[k] + (1.0 - omega) * xj[k];
    return out;
}

namespace {

struct TrialGroup {
    int subject_id;
    int trial_id;
    int label;
    int max_window_id;
    std::vector<std::size_t> rows;  // indices into table.records
};

}  // namespace

FeatureTable ss_mix(const FeatureTable& table, const MixPolicy& policy) {
    if (table.records.empty())
        throw ValidationError("ss_mix: empty table");
    if (!table.all_labeled())
        throw ValidationError("ss_mix: requires a fully labeled (source) table");
    if (!(policy.beta_param > 0.0) || policy.augment_factor < 0.0)
        throw ValidationError("ss_mix: invalid policy");

    // Group rows by (subject, trial) in first-appearance order and assert
    // trial label purity; a mixed-label trial would silently soften labels.
    std::vector<TrialGroup> groups;
    std::map<std::pair<int, int>, std::size_t> index;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const auto& r = table.records[i];
        auto key = std::make_pair(r.subject_id, r.trial_id);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, groups.size());
            groups.push_back({r.subject_id, r.trial_id, r.label, r.window_id, {i}});
        } else {
            TrialGroup& g = groups[it->second];
            if (g.label != r.label)
                throw ValidationError("ss_mix: trial (" + std::to_string(r.subject_id) + "," +
                                      std::to_string(r.trial_id) +
                                      ") mixes labels " + std::to_string(g.label) + " and " +
                                      std::to_string(r.label));
            g.max_window_id = std::max(g.max_window_id, r.window_id);
            g.rows.push_back(i);
        }
    }

    // Largest-remainder split of the synthetic budget across groups, so the
    // total is exactly round(augment_factor * N).
    const auto total = static_cast<long long>(
        std::llround(policy.augment_factor * static_cast<double>(table.records.size())));
    std::vector<long long> quota(groups.size(), 0);
    {
        long long assigned = 0;
        std::vector<std::pair<double, std::size_t>> remainders;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            double exact = policy.augment_factor * static_cast<double>(groups[g].rows.size());
            quota[g] = static_cast<long long>(std::floor(exact));
            assigned += quota[g];
            remainders.emplace_back(exact - std::floor(exact), g);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned)
            ++quota[remainders[k].second];
        // Rounding can still leave a gap when every remainder is zero.
        for (std::size_t g = 0; assigned < total; g = (g + 1) % groups.size(), ++assigned)
            ++quota[g];
        for (std::size_t g = 0; assigned > total && g < groups.size(); ++g)
            while (quota[g] > 0 && assigned > total) { --quota[g]; --assigned; }
    }

    FeatureTable out = table;
    out.records.reserve(table.records.size() + static_cast<std::size_t>(total));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const TrialGroup& group = groups[g];
        auto rng = derive_rng(policy.rng_seed, "ss-mix",
                              static_cast<std::uint64_t>(group.subject_id),
                              static_cast<std::uint64_t>(group.trial_id));
        const std::size_t n = group.rows.size();
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (long long k = 0; k < quota[g]; ++k) {
            std::size_t i = pick(rng);
            std::size_t j = i;
            if (n >= 2) {
                std::uniform_int_distribution<std::size_t> pick_other(0, n - 2);
                j = pick_other(rng);
                if (j >= i) ++j;
            }
            double omega = sample_mix_coefficient(policy, rng);
            const auto& ri = table.records[group.rows[i]];
            const auto& rj = table.records[group.rows[j]];
            FeatureRecord rec;
            rec.subject_id = group.subject_id;
            rec.trial_id = group.trial_id;
            rec.window_id = group.max_window_id + 1 + static_cast<int>(k);
            rec.label = group.label;  // omega*y_i + (1-omega)*y_j with equal hard labels
            rec.features = mix_features(ri.features, rj.features, omega);
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

}  // namespace sdc
