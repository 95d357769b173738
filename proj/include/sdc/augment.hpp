#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sdc/datamodel.hpp"

namespace sdc {

struct MixPolicy {
    double beta_param = 0.5;     // symmetric Beta(a, a)
    double augment_factor = 1.0; // synthetic records per original
    std::uint64_t rng_seed = 0;
};

// Draws omega ~ Beta(a, a), clamped strictly inside (0, 1).
double sample_mix_coefficient(const MixPolicy& policy, std::mt19937_64& rng);

// Convex combination omega*xi + (1-omega)*xj.
std::vector<double> mix_features(const std::vector<double>& xi,
                                 const std::vector<double>& xj, double omega);

// Intra-subject, intra-trial Mixup on a labeled table. Returns the original
// records followed by round(augment_factor * N) synthetic records, each mixed
// from two windows of one (subject, trial) group and carrying that group's
// label and a fresh window_id. Deterministic in (table, policy).
FeatureTable ss_mix(const FeatureTable& table, const MixPolicy& policy);

}  // namespace sdc
