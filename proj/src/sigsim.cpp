#include "opm/sigsim.hpp"

#include "opm/errors.hpp"
#include "opm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace opm::sigsim {

namespace {

// Stream tags for per-tuple RNG derivation.
constexpr std::uint64_t kTagFrame = 0xf7a3;
constexpr std::uint64_t kTagSymbols = 0x51;
constexpr std::uint64_t kTagNoise = 0x52;

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Mean square of the DC-removed samples.
double ac_power(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

} // namespace

int levels(ModulationFormat fmt) {
    switch (fmt) {
        case ModulationFormat::OOK: return 2;
        case ModulationFormat::PAM4: return 4;
        case ModulationFormat::PAM8: return 8;
    }
    throw InvalidArgumentError("unknown modulation format");
}

const char* format_name(ModulationFormat fmt) {
    switch (fmt) {
        case ModulationFormat::OOK: return "OOK";
        case ModulationFormat::PAM4: return "PAM4";
        case ModulationFormat::PAM8: return "PAM8";
    }
    throw InvalidArgumentError("unknown modulation format");
}

ModulationFormat format_from_name(const std::string& name) {
    if (name == "OOK") return ModulationFormat::OOK;
    if (name == "PAM4") return ModulationFormat::PAM4;
    if (name == "PAM8") return ModulationFormat::PAM8;
    throw ParseError("unknown modulation format name: '" + name + "'");
}

void SimConfig::validate() const {
    if (!(symbol_rate_hz > 0.0)) throw ConfigError("sim.symbol_rate_hz must be > 0");
    if (n_symbols < 64) throw ConfigError("sim.n_symbols must be >= 64");
    if (gen_samples_per_symbol < 2) throw ConfigError("sim.gen_samples_per_symbol must be >= 2");
    if (channel_taps.empty()) throw ConfigError("sim.channel_taps must be nonempty");
    double peak = 0.0;
    int peak_hits = 0;
    for (double t : channel_taps) {
        const double a = std::fabs(t);
        if (a > peak) {
            peak = a;
            peak_hits = 1;
        } else if (a == peak) {
            ++peak_hits;
        }
    }
    if (peak == 0.0 || peak_hits != 1)
        throw ConfigError("sim.channel_taps must have a strict maximum-magnitude tap");
    if (!(ref_bandwidth_hz > 0.0)) throw ConfigError("sim.ref_bandwidth_hz must be > 0");
    if (!std::isfinite(osnr_db)) throw ConfigError("sim.osnr_db must be finite");
    if (dac_bits != 0 && (dac_bits < 2 || dac_bits > 16))
        throw ConfigError("sim.dac_bits must be 0 (off) or in [2, 16]");
}

std::vector<double> generate_symbols(ModulationFormat fmt, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidArgumentError("generate_symbols: n must be >= 1");
    const int m = levels(fmt);
    const double scale = 1.0 / static_cast<double>(m - 1);
    Rng rng(seed);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<double>(rng.next_below(static_cast<std::uint64_t>(m))) * scale;
    return out;
}

WaveformFrame modulate(const std::vector<double>& symbols, const SimConfig& cfg,
                       ModulationFormat fmt) {
    if (symbols.empty()) throw InvalidArgumentError("modulate: symbols must be nonempty");
    WaveformFrame frame;
    frame.symbol_rate_hz = cfg.symbol_rate_hz;
    frame.sps_num = cfg.gen_samples_per_symbol;
    frame.sps_den = 1;
    frame.truth_format = fmt;
    frame.truth_osnr_db = std::numeric_limits<double>::infinity();

    frame.samples.resize(symbols.size() * static_cast<std::size_t>(cfg.gen_samples_per_symbol));
    std::size_t k = 0;
    for (double s : symbols)
        for (int r = 0; r < cfg.gen_samples_per_symbol; ++r) frame.samples[k++] = s;

    // Normalize the channel to unit peak magnitude before filtering.
    double peak = 0.0;
    for (double t : cfg.channel_taps) peak = std::max(peak, std::fabs(t));
    std::vector<double> taps = cfg.channel_taps;
    if (peak > 0.0)
        for (double& t : taps) t /= peak;
    return apply_channel(frame, taps);
}

WaveformFrame apply_channel(const WaveformFrame& frame, const std::vector<double>& taps) {
    if (taps.empty()) throw InvalidArgumentError("apply_channel: taps must be nonempty");
    WaveformFrame out = frame;
    const std::size_t n = frame.samples.size();
    const std::size_t t = taps.size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const std::size_t kmax = std::min(t - 1, i);
        for (std::size_t k = 0; k <= kmax; ++k) acc += taps[k] * frame.samples[i - k];
        out.samples[i] = acc;
    }
    return out;
}

double noise_variance_for(const WaveformFrame& frame, double osnr_db, double ref_bandwidth_hz) {
    const double p_sig = ac_power(frame.samples);
    if (p_sig <= 0.0) throw ZeroSignalError("load_noise: frame has no AC power");
    const double osnr_lin = std::pow(10.0, osnr_db / 10.0);
    return p_sig / (osnr_lin * ref_bandwidth_hz / frame.symbol_rate_hz);
}

WaveformFrame load_noise(const WaveformFrame& frame, double osnr_db, double ref_bandwidth_hz,
                         std::uint64_t seed) {
    if (std::isinf(osnr_db) && osnr_db > 0.0) {
        WaveformFrame out = frame;
        out.truth_osnr_db = osnr_db;
        return out;
    }
    const double sigma = std::sqrt(noise_variance_for(frame, osnr_db, ref_bandwidth_hz));
    WaveformFrame out = frame;
    out.truth_osnr_db = osnr_db;
    Rng rng(seed);
    for (double& x : out.samples) x += sigma * rng.next_gaussian();
    return out;
}

WaveformFrame quantize(const WaveformFrame& frame, int bits) {
    if (bits < 2 || bits > 16) throw InvalidArgumentError("quantize: bits must be in [2, 16]");
    if (frame.samples.empty()) return frame;
    auto [lo_it, hi_it] = std::minmax_element(frame.samples.begin(), frame.samples.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi == lo) return frame;
    const double step = (hi - lo) / static_cast<double>((1 << bits) - 1);
    WaveformFrame out = frame;
    for (double& x : out.samples) x = lo + std::round((x - lo) / step) * step;
    return out;
}

WaveformFrame simulate_frame(const SimConfig& cfg, ModulationFormat fmt, int osnr_index,
                             double osnr_db, int frame_index) {
    cfg.validate();
    std::uint64_t base = derive_seed(cfg.seed, kTagFrame);
    base = derive_seed(base, static_cast<std::uint64_t>(fmt));
    base = derive_seed(base, static_cast<std::uint64_t>(osnr_index));
    base = derive_seed(base, static_cast<std::uint64_t>(frame_index));

    const auto symbols = generate_symbols(fmt, cfg.n_symbols, derive_seed(base, kTagSymbols));
    WaveformFrame frame = modulate(symbols, cfg, fmt);
    frame = load_noise(frame, osnr_db, cfg.ref_bandwidth_hz, derive_seed(base, kTagNoise));
    if (cfg.dac_bits != 0) frame = quantize(frame, cfg.dac_bits);
    return frame;
}

} // namespace opm::sigsim
