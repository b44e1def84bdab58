#ifndef OPM_SIGSIM_HPP
#define OPM_SIGSIM_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace opm::sigsim {

enum class ModulationFormat { OOK = 0, PAM4 = 1, PAM8 = 2 };

inline constexpr int kFormatCount = 3;

// Number of amplitude levels of the format (2, 4, 8).
int levels(ModulationFormat fmt);
const char* format_name(ModulationFormat fmt);
ModulationFormat format_from_name(const std::string& name);

// Transmitter / channel / noise-loading parameters for one frame.
struct SimConfig {
    double symbol_rate_hz = 2.0e10;
    std::size_t n_symbols = 8191; // 2^13 - 1
    int gen_samples_per_symbol = 5;
    std::vector<double> channel_taps = {0.12, 1.0, 0.12}; // unit peak
    double osnr_db = 40.0;
    double ref_bandwidth_hz = 1.25e10; // 0.1 nm convention
    int dac_bits = 0;                  // 0 = no quantization
    std::uint64_t seed = 1;

    void validate() const; // throws ConfigError on violation
};

// Sampled real-valued signal. The samples-per-symbol ratio is carried as an
// exact rational so downstream rate checks never touch floating point.
struct WaveformFrame {
    std::vector<double> samples;
    double symbol_rate_hz = 0.0;
    std::int64_t sps_num = 1; // sample_rate = symbol_rate * sps_num / sps_den
    std::int64_t sps_den = 1;
    ModulationFormat truth_format = ModulationFormat::OOK;
    double truth_osnr_db = 0.0;

    double sample_rate_hz() const {
        return symbol_rate_hz * static_cast<double>(sps_num) / static_cast<double>(sps_den);
    }
};

// I.i.d. uniform draw over the format's amplitude alphabet
// {0, 1/(M-1), ..., 1}; deterministic for fixed (format, n, seed).
std::vector<double> generate_symbols(ModulationFormat fmt, std::size_t n, std::uint64_t seed);

// Rectangular NRZ sample-and-hold followed by the config's channel filter.
WaveformFrame modulate(const std::vector<double>& symbols, const SimConfig& cfg,
                       ModulationFormat fmt);

// Causal FIR convolution truncated to the input length; metadata preserved.
WaveformFrame apply_channel(const WaveformFrame& frame, const std::vector<double>& taps);

// Adds white Gaussian noise calibrated so that
//   sigma^2 = P_sig / (10^(osnr_db/10) * ref_bandwidth / symbol_rate)
// with P_sig the mean square of the DC-removed signal. An osnr_db of +inf
// is the no-noise sentinel and returns the frame unchanged.
WaveformFrame load_noise(const WaveformFrame& frame, double osnr_db, double ref_bandwidth_hz,
                         std::uint64_t seed);

// Noise variance the formula above prescribes for the given frame.
double noise_variance_for(const WaveformFrame& frame, double osnr_db, double ref_bandwidth_hz);

// Uniform mid-tread quantization to 2^bits levels spanning [min, max] of
// the frame; bits in [2, 16].
WaveformFrame quantize(const WaveformFrame& frame, int bits);

// Full transmitter-side pipeline for one (format, osnr, frame-index) tuple.
// RNG streams derive from (cfg.seed, format, osnr_index, frame_index) so
// tuples can be generated concurrently in any order.
WaveformFrame simulate_frame(const SimConfig& cfg, ModulationFormat fmt, int osnr_index,
                             double osnr_db, int frame_index);

} // namespace opm::sigsim

#endif
