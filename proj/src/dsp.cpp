#include "opm/dsp.hpp"

#include "opm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace opm::dsp {

namespace {

constexpr int kTapsPerBranch = 64;
constexpr double kDivergenceLimit = 1e6;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

// Prototype low-pass for upsample-by-L / downsample-by-M: windowed sinc,
// kTapsPerBranch taps per polyphase branch, cutoff at the tighter of the
// two Nyquist limits, normalized to DC gain L.
std::vector<double> design_lowpass(std::int64_t up, std::int64_t down) {
    const std::size_t n = static_cast<std::size_t>(kTapsPerBranch * up);
    const double fc = 1.0 / static_cast<double>(std::max(up, down)); // fraction of Nyquist
    const double center = 0.5 * static_cast<double>(n - 1);
    std::vector<double> h(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) - center;
        const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
        const double window = 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * frac) +
                              0.08 * std::cos(4.0 * std::numbers::pi * frac);
        h[i] = fc * sinc(fc * t) * window;
        sum += h[i];
    }
    const double gain = static_cast<double>(up) / sum;
    for (double& v : h) v *= gain;
    return h;
}

} // namespace

void EqualizerConfig::validate() const {
    if (n_taps < 3 || n_taps % 2 == 0) throw ConfigError("equalizer.n_taps must be odd and >= 3");
    if (!(step_size >= 0.0) || step_size > 0.1)
        throw ConfigError("equalizer.step_size must be in [0, 0.1]");
    if (n_passes < 1) throw ConfigError("equalizer.n_passes must be >= 1");
}

sigsim::WaveformFrame remove_dc(const sigsim::WaveformFrame& frame) {
    if (frame.samples.empty()) throw InvalidArgumentError("remove_dc: frame is empty");
    double mean = 0.0;
    for (double x : frame.samples) mean += x;
    mean /= static_cast<double>(frame.samples.size());
    sigsim::WaveformFrame out = frame;
    for (double& x : out.samples) x -= mean;
    return out;
}

sigsim::WaveformFrame resample_to_2sps(const sigsim::WaveformFrame& frame) {
    const std::int64_t p = frame.sps_num;
    const std::int64_t q = frame.sps_den;
    if (p <= 0 || q <= 0) throw InvalidArgumentError("resample_to_2sps: invalid sps ratio");
    if (p < 2 * q)
        throw UnsupportedRatioError("resample_to_2sps: input is below 2 samples per symbol");

    sigsim::WaveformFrame out = frame;
    out.sps_num = 2;
    out.sps_den = 1;
    if (p == 2 * q) return out; // already at the target rate

    const std::int64_t g = std::gcd(2 * q, p);
    const std::int64_t up = 2 * q / g;
    const std::int64_t down = p / g;

    const std::vector<double> h = design_lowpass(up, down);
    const std::int64_t n_in = static_cast<std::int64_t>(frame.samples.size());
    const std::int64_t n_out = n_in * up / down;
    const std::int64_t shift = static_cast<std::int64_t>(h.size()) / 2; // group delay

    out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
    for (std::int64_t k = 0; k < n_out; ++k) {
        const std::int64_t pos = k * down + shift; // upsampled-domain index
        const std::int64_t phase = pos % up;
        const std::int64_t start = (pos - phase) / up;
        double acc = 0.0;
        for (std::int64_t t = 0; t * up + phase < static_cast<std::int64_t>(h.size()); ++t) {
            const std::int64_t j = start - t;
            if (j < 0) break;
            if (j < n_in) acc += h[static_cast<std::size_t>(phase + t * up)] * frame.samples[static_cast<std::size_t>(j)];
        }
        out.samples[static_cast<std::size_t>(k)] = acc;
    }
    return out;
}

double estimate_modulus(const std::vector<double>& samples) {
    double m2 = 0.0, m4 = 0.0;
    for (double x : samples) {
        const double x2 = x * x;
        m2 += x2;
        m4 += x2 * x2;
    }
    if (m2 <= 0.0) throw ZeroSignalError("estimate_modulus: zero-power input");
    return m4 / m2;
}

EqualizedFrame cma_equalize(const sigsim::WaveformFrame& frame, const EqualizerConfig& cfg) {
    cfg.validate();
    if (frame.sps_num != 2 || frame.sps_den != 1)
        throw InvalidArgumentError("cma_equalize: frame must be at 2 samples per symbol");
    const std::size_t n = frame.samples.size();
    const std::size_t taps = static_cast<std::size_t>(cfg.n_taps);
    if (n <= 10 * taps) throw InvalidArgumentError("cma_equalize: frame too short for tap count");

    const double r2 = estimate_modulus(frame.samples);
    const std::vector<double>& x = frame.samples;

    std::vector<double> w(taps, 0.0);
    w[taps / 2] = 1.0; // center spike

    EqualizedFrame out;
    out.truth_format = frame.truth_format;
    out.truth_osnr_db = frame.truth_osnr_db;

    const std::size_t last_start = n - taps; // inclusive window start bound
    auto filter_at = [&](std::size_t i) {
        double y = 0.0;
        for (std::size_t t = 0; t < taps; ++t) y += w[t] * x[i + t];
        return y;
    };
    auto update_at = [&](std::size_t i, double y) {
        const double e = y * (y * y - r2);
        const double mu_e = cfg.step_size * e;
        for (std::size_t t = 0; t < taps; ++t) {
            w[t] -= mu_e * x[i + t];
            if (std::fabs(w[t]) > kDivergenceLimit)
                throw DivergedError("cma_equalize: tap magnitude exceeded 1e6; reduce step size");
        }
    };

    // Adaptation-only passes: updates advance one symbol (two samples).
    for (int pass = 0; pass + 1 < cfg.n_passes; ++pass)
        for (std::size_t i = 0; i <= last_start; i += 2) update_at(i, filter_at(i));

    // Final pass: emit |y| at every half-symbol phase, adapt at symbol phase.
    out.amplitudes.resize(last_start + 1);
    double cost = 0.0;
    std::size_t cost_terms = 0;
    for (std::size_t i = 0; i <= last_start; ++i) {
        const double y = filter_at(i);
        out.amplitudes[i] = std::fabs(y);
        if (i % 2 == 0) {
            const double d = y * y - r2;
            cost += d * d;
            ++cost_terms;
            update_at(i, y);
        }
    }
    out.final_cm_cost = cost / static_cast<double>(cost_terms);
    return out;
}

EqualizedFrame normalize_amplitude(const EqualizedFrame& eq) {
    if (eq.amplitudes.empty()) throw InvalidArgumentError("normalize_amplitude: empty frame");
    std::vector<double> sorted = eq.amplitudes;
    std::sort(sorted.begin(), sorted.end());
    // Nearest-rank 99.9th percentile: at most 0.1% of samples sit above it.
    const std::size_t n = sorted.size();
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.999 * static_cast<double>(n)));
    const double p = sorted[std::min(rank == 0 ? 0 : rank - 1, n - 1)];
    if (p == 0.0) throw ZeroSignalError("normalize_amplitude: 99.9th percentile is zero");

    EqualizedFrame out = eq;
    for (double& a : out.amplitudes) a = std::min(a / p, 1.0);
    return out;
}

EqualizedFrame process_frame(const sigsim::WaveformFrame& frame, const EqualizerConfig& cfg) {
    return normalize_amplitude(cma_equalize(resample_to_2sps(remove_dc(frame)), cfg));
}

} // namespace opm::dsp
