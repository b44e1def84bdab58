#ifndef OPM_DSP_HPP
#define OPM_DSP_HPP

#include "opm/sigsim.hpp"

#include <cstdint>
#include <vector>

namespace opm::dsp {

// Free parameters of the blind T/2-spaced CMA equalizer. A step size of 0
// turns adaptation off and leaves the center-spike filter in place.
struct EqualizerConfig {
    int n_taps = 11; // odd
    double step_size = 1e-3;
    int n_passes = 3;

    void validate() const;
};

// |equalizer output| at two samples per symbol, ready for histogramming.
struct EqualizedFrame {
    std::vector<double> amplitudes;
    sigsim::ModulationFormat truth_format = sigsim::ModulationFormat::OOK;
    double truth_osnr_db = 0.0;
    double final_cm_cost = 0.0;
};

// Subtracts the sample mean.
sigsim::WaveformFrame remove_dc(const sigsim::WaveformFrame& frame);

// Rational resampling to exactly two samples per symbol via polyphase
// windowed-sinc filtering (64 taps per branch). Throws UnsupportedRatio if
// the frame is below 2 samples/symbol.
sigsim::WaveformFrame resample_to_2sps(const sigsim::WaveformFrame& frame);

// Blind constant-modulus equalization. R2 = E[x^4]/E[x^2] is estimated
// from the input, taps start as a center spike, updates advance two
// samples per symbol, and the final pass emits |y| at both half-symbol
// phases. final_cm_cost is the mean of (y^2 - R2)^2 over the final pass's
// symbol-spaced outputs.
EqualizedFrame cma_equalize(const sigsim::WaveformFrame& frame, const EqualizerConfig& cfg);

// Scales by the 99.9th-percentile amplitude and clips to [0, 1].
EqualizedFrame normalize_amplitude(const EqualizedFrame& eq);

// Dispersion constant E[x^4]/E[x^2] of a sample block.
double estimate_modulus(const std::vector<double>& samples);

// Receiver chain: remove_dc -> resample_to_2sps -> cma_equalize ->
// normalize_amplitude.
EqualizedFrame process_frame(const sigsim::WaveformFrame& frame, const EqualizerConfig& cfg);

} // namespace opm::dsp

#endif
