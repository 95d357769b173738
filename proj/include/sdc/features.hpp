#pragma once

#include <string>
#include <vector>

#include "sdc/datamodel.hpp"
#include "sdc/matrix.hpp"

namespace sdc {

// Raw multichannel trial; signal is channels x samples.
struct EEGTrial {
    int subject_id = 0;
    int trial_id = 0;
    double sample_rate_hz = 0.0;
    Matrix signal;
    int label = -1;
};

struct BandDefinition {
    std::string name;
    double low_hz = 0.0;
    double high_hz = 0.0;
};

enum class Taper { rectangular, hann };

// delta 1-4, theta 4-8, alpha 8-13, beta 13-30, gamma 30-50 Hz
std::vector<BandDefinition> canonical_bands();

struct SpectralConfig {
    double window_seconds = 1.0;
    double hop_seconds = 1.0;  // == window: non-overlapping
    Taper taper = Taper::hann;
    std::vector<BandDefinition> bands = canonical_bands();
};

// windows x channels x bands, flattened
struct BandVarianceTensor {
    std::size_t windows = 0, channels = 0, bands = 0;
    std::vector<double> values;

    double& at(std::size_t w, std::size_t c, std::size_t b) {
        return values[(w * channels + c) * bands + b];
    }
    double at(std::size_t w, std::size_t c, std::size_t b) const {
        return values[(w * channels + c) * bands + b];
    }
};

// Band-limited variance per window/channel/band: each window is demeaned,
// tapered, DFT'd, and one-sided power is summed over bins in [low_hz, high_hz).
// Normalized so the sum over all bins equals the windowed signal variance
// (Parseval).
BandVarianceTensor band_variance(const EEGTrial& trial, const SpectralConfig& config);

// Gaussian closed form 0.5*ln(2*pi*e*variance), in nats.
// Throws ValidationError for variance <= 0; callers floor silent windows
// at kVarianceFloor instead.
double differential_entropy(double variance);

inline constexpr double kVarianceFloor = 1e-12;

// One record per (trial, window); channel-major layout, index = channel*bands + band.
FeatureTable extract_de_features(const std::vector<EEGTrial>& trials,
                                 const SpectralConfig& config);

// Raw trial CSV: header `subject,trial,label,sample_rate,channels,samples`,
// then per trial one metadata row followed by `channels` rows of samples.
std::vector<EEGTrial> load_raw_trials(const std::string& path);
void save_raw_trials(const std::vector<EEGTrial>& trials, const std::string& path);

}  // namespace sdc
