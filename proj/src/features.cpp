#include "sdc/features.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace sdc {

std::vector<BandDefinition> canonical_bands() {
    return {{"delta", 1.0, 4.0},
            {"theta", 4.0, 8.0},
            {"alpha", 8.0, 13.0},
            {"beta", 13.0, 30.0},
            {"gamma", 30.0, 50.0}};
}

namespace {

void validate_spectral(const EEGTrial& trial, const SpectralConfig& config,
                       std::size_t& window_len, std::size_t& hop_len) {
    if (trial.sample_rate_hz <= 0.0)
        throw ValidationError("band_variance: sample rate must be > 0");
    if (trial.signal.empty())
        throw ValidationError("band_variance: empty signal");
    if (config.window_seconds <= 0.0 || config.hop_seconds <= 0.0 ||
        config.hop_seconds > config.window_seconds)
        throw ValidationError("band_variance: need 0 < hop_seconds <= window_seconds");
    window_len = static_cast<std::size_t>(std::llround(config.window_seconds * trial.sample_rate_hz));
    hop_len = static_cast<std::size_t>(std::llround(config.hop_seconds * trial.sample_rate_hz));
    if (window_len < 2 || hop_len < 1)
        throw ValidationError("band_variance: window too short at this sample rate");
    if (window_len > trial.signal.cols)
        throw ValidationError("band_variance: signal shorter than one window");
    const double nyquist = trial.sample_rate_hz / 2.0;
    if (config.bands.empty()) throw ValidationError("band_variance: no bands");
    for (const auto& b : config.bands) {
        if (!(b.low_hz > 0.0) || !(b.low_hz < b.high_hz))
            throw ValidationError("band '" + b.name + "': need 0 < low_hz < high_hz");
        if (!(b.high_hz < nyquist))
            throw ValidationError("band '" + b.name + "' exceeds Nyquist (" +
                                  std::to_string(nyquist) + " Hz)");
    }
    for (double v : trial.signal.data)
        if (!std::isfinite(v)) throw ValidationError("band_variance: non-finite sample");
}

}  // namespace

BandVarianceTensor band_variance(const EEGTrial& trial, const SpectralConfig& config) {
    std::size_t window_len = 0, hop_len = 0;
    validate_spectral(trial, config, window_len, hop_len);

    const std::size_t n = window_len;
    const std::size_t channels = trial.signal.rows;
    const std::size_t samples = trial.signal.cols;
    const std::size_t windows = (samples - window_len) / hop_len + 1;
    const double fs = trial.sample_rate_hz;

    // Periodic Hann; its on-bin leakage is confined to +-1 bin.
    std::vector<double> taper(n, 1.0);
    if (config.taper == Taper::hann)
        for (std::size_t i = 0; i < n; ++i)
            taper[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(n));
    double taper_power = 0.0;
    for (double w : taper) taper_power += w * w;

    // Precompute DFT twiddles for bins 0..n/2.
    const std::size_t half = n / 2;
    std::vector<double> cos_tab((half + 1) * n), sin_tab((half + 1) * n);
    for (std::size_t k = 0; k <= half; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            double ang = 2.0 * std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(n);
            cos_tab[k * n + i] = std::cos(ang);
            sin_tab[k * n + i] = std::sin(ang);
        }

    // Map each band to its half-open bin range [low, high).
    const std::size_t nbands = config.bands.size();
    std::vector<std::pair<std::size_t, std::size_t>> bin_range(nbands);
    for (std::size_t b = 0; b < nbands; ++b) {
        const double lo = config.bands[b].low_hz, hi = config.bands[b].high_hz;
        std::size_t k_lo = static_cast<std::size_t>(std::ceil(lo * n / fs - 1e-9));
        std::size_t k_hi = k_lo;
        while (k_hi <= half && static_cast<double>(k_hi) * fs / static_cast<double>(n) < hi - 1e-9)
            ++k_hi;
        bin_range[b] = {k_lo, k_hi};  // [k_lo, k_hi)
    }

    BandVarianceTensor out;
    out.windows = windows;
    out.channels = channels;
    out.bands = nbands;
    out.values.assign(windows * channels * nbands, 0.0);

    std::vector<double> seg(n);
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t start = w * hop_len;
        for (std::size_t c = 0; c < channels; ++c) {
            const double* sig = trial.signal.row(c) + start;
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += sig[i];
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) seg[i] = (sig[i] - mean) * taper[i];

            for (std::size_t b = 0; b < nbands; ++b) {
                double power = 0.0;
                for (std::size_t k = bin_range[b].first; k < bin_range[b].second; ++k) {
                    const double* ct = &cos_tab[k * n];
                    const double* st = &sin_tab[k * n];
                    double re = 0.0, im = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        re += seg[i] * ct[i];
                        im -= seg[i] * st[i];
                    }
                    double scale = (k == 0 || (n % 2 == 0 && k == half)) ? 1.0 : 2.0;
                    power += scale * (re * re + im * im);
                }
                out.at(w, c, b) = power / (static_cast<double>(n) * taper_power);
            }
        }
    }
    return out;
}

double differential_entropy(double variance) {
    if (!(variance > 0.0))
        throw ValidationError("differential_entropy: variance must be > 0");
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

FeatureTable extract_de_features(const std::vector<EEGTrial>& trials,
                                 const SpectralConfig& config) {
    if (trials.empty()) throw ValidationError("extract_de_features: no trials");
    const std::size_t channels = trials[0].signal.rows;
    const double fs = trials[0].sample_rate_hz;
    for (const auto& t : trials) {
        if (t.signal.rows != channels)
            throw ValidationError("extract_de_features: channel counts differ across trials");
        if (t.sample_rate_hz != fs)
            throw ValidationError("extract_de_features: sample rates differ across trials");
    }
    const std::size_t nbands = config.bands.size();

    FeatureTable table;
    table.dim = static_cast<int>(channels * nbands);
    int max_label = -1;
    for (const auto& trial : trials) {
        auto var = band_variance(trial, config);
        for (std::size_t w = 0; w < var.windows; ++w) {
            FeatureRecord rec;
            rec.subject_id = trial.subject_id;
            rec.trial_id = trial.trial_id;
            rec.window_id = static_cast<int>(w);
            rec.label = trial.label;
            rec.features.resize(table.dim);
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t b = 0; b < nbands; ++b)
                    rec.features[c * nbands + b] =
                        differential_entropy(std::max(var.at(w, c, b), kVarianceFloor));
            max_label = std::max(max_label, rec.label);
            table.records.push_back(std::move(rec));
        }
    }
    table.num_classes = max_label + 1;
    return table;
}

std::vector<EEGTrial> load_raw_trials(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open raw trial file '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path + ":1: missing header");
    if (line.find("subject,trial,label,sample_rate,channels,samples") != 0)
        throw ValidationError(path + ":1: bad raw trial header");

    std::vector<EEGTrial> trials;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        EEGTrial t;
        std::size_t channels = 0, samples = 0;
        {
            const std::string ctx = path + ":" + std::to_string(line_no);
            std::vector<std::string> cells;
            std::string cur;
            for (char c : line) {
                if (c == ',') { cells.push_back(cur); cur.clear(); }
                else if (c != '\r') cur.push_back(c);
            }
            cells.push_back(cur);
            if (cells.size() != 6)
                throw ValidationError(ctx + ": trial row needs 6 fields");
            t.subject_id = std::stoi(cells[0]);
            t.trial_id = std::stoi(cells[1]);
            t.label = std::stoi(cells[2]);
            t.sample_rate_hz = std::stod(cells[3]);
            channels = static_cast<std::size_t>(std::stoul(cells[4]));
            samples = static_cast<std::size_t>(std::stoul(cells[5]));
            if (channels == 0 || samples == 0)
                throw ValidationError(ctx + ": zero channels or samples");
        }
        t.signal = Matrix(channels, samples);
        for (std::size_t c = 0; c < channels; ++c) {
            ++line_no;
            if (!std::getline(in, line))
                throw ValidationError(path + ":" + std::to_string(line_no) +
                                      ": truncated trial block");
            const std::string ctx = path + ":" + std::to_string(line_no);
            std::size_t j = 0, pos = 0;
            while (pos <= line.size() && j < samples) {
                std::size_t comma = line.find(',', pos);
                std::string cell = line.substr(pos, comma == std::string::npos
                                                        ? std::string::npos
                                                        : comma - pos);
                if (!cell.empty() && cell.back() == '\r') cell.pop_back();
                char* end = nullptr;
                t.signal.at(c, j) = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str() || *end != '\0')
                    throw ValidationError(ctx + ": bad sample '" + cell + "'");
                ++j;
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            if (j != samples)
                throw ValidationError(ctx + ": expected " + std::to_string(samples) +
                                      " samples, got " + std::to_string(j));
        }
        trials.push_back(std::move(t));
    }
    return trials;
}

void save_raw_trials(const std::vector<EEGTrial>& trials, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "subject,trial,label,sample_rate,channels,samples\n";
    char buf[40];
    for (const auto& t : trials) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.sample_rate_hz);
        out << t.subject_id << ',' << t.trial_id << ',' << t.label << ',' << buf << ','
            << t.signal.rows << ',' << t.signal.cols << "\n";
        for (std::size_t c = 0; c < t.signal.rows; ++c) {
            const double* row = t.signal.row(c);
            for (std::size_t j = 0; j < t.signal.cols; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
                if (j) out << ',';
                out << buf;
            }
            out << "\n";
        }
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace sdc
