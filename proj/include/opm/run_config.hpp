#ifndef OPM_RUN_CONFIG_HPP
#define OPM_RUN_CONFIG_HPP

#include "opm/dsp.hpp"
#include "opm/features.hpp"
#include "opm/mtlnet.hpp"
#include "opm/sigsim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace opm::config {

enum class SweepKind { Bins = 0, SharedNeurons = 1, LossRatio = 2 };

const char* sweep_kind_name(SweepKind k);
SweepKind sweep_kind_from_name(const std::string& name);

enum class StlMode { None = 0, Mfi = 1, Osnr = 2 };

struct NetworkConfig {
    std::size_t shared_neurons = 60; // 0 = half the bin count
    std::size_t branch_hidden = 0;   // 0 = half the shared width
    StlMode stl = StlMode::None;
};

struct SweepConfig {
    SweepKind kind = SweepKind::Bins;
    std::vector<double> values; // empty = per-kind default list
    int n_seeds = 8;

    std::vector<double> resolved_values() const;
    void validate() const;
};

// Resolved configuration for a whole run. Defaults reproduce the reference
// operating point: 100 bins, 60 shared neurons, OSNR:MFI loss ratio 5.
struct RunConfig {
    std::uint64_t seed = 1;
    unsigned jobs = 0; // worker cap for frame generation and sweep cells; 0 = auto
    sigsim::SimConfig sim;
    dsp::EqualizerConfig equalizer;
    features::DatasetSpec dataset;
    NetworkConfig network;
    mtl::TrainConfig train;
    mtl::LossWeights loss_weights;
    SweepConfig sweep;

    static RunConfig defaults();
    void validate() const;

    // Topology implied by the dataset bin count and network sizing rules.
    mtl::MtlTopology topology() const;
    mtl::MtlTopology topology_for(std::size_t bins, std::size_t shared_neurons) const;
};

// Strict JSON parsing: unknown keys anywhere are rejected. Absent keys keep
// the defaults of `base`.
RunConfig from_json(const std::string& text, const RunConfig& base = RunConfig::defaults());

// Scientific configuration only (seed + module settings); IO and scheduling
// knobs are excluded so sidecars depend solely on what shapes the numbers.
std::string to_json(const RunConfig& cfg);

} // namespace opm::config

#endif
