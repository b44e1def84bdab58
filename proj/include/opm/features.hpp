#ifndef OPM_FEATURES_HPP
#define OPM_FEATURES_HPP

#include "opm/dsp.hpp"
#include "opm/sigsim.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace opm::features {

// Binned occurrences over the fixed range [0, 1]. Bin i covers
// [i/B, (i+1)/B); the last bin is closed at 1.
struct AmplitudeHistogram {
    std::size_t bin_count = 0;
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const;
};

enum class Partition { Train = 0, Val = 1, Test = 2 };

const char* partition_name(Partition p);
Partition partition_from_name(const std::string& name);

struct LabeledExample {
    std::vector<double> features; // relative frequencies (or raw counts, flagged)
    std::array<double, 3> format_onehot{};
    double osnr_norm = 0.0;
    double osnr_db = 0.0;
    sigsim::ModulationFormat format = sigsim::ModulationFormat::OOK;
    int frame_index = 0;
    Partition partition = Partition::Train;
};

struct DatasetSpec {
    std::vector<double> osnr_grid_db; // strictly increasing
    std::vector<sigsim::ModulationFormat> formats;
    int frames_per_point = 10;
    std::size_t bin_count = 100;
    double test_frac = 0.05;
    double val_frac_of_train = 0.10;
    bool raw_counts = false;      // keep occurrences instead of frequencies
    bool stratified_split = false; // apply the floor rule per format class
    std::uint64_t seed = 1;

    static DatasetSpec defaults(); // 32..45 dB step 1, all formats, 10 frames
    void validate() const;
    double grid_min() const { return osnr_grid_db.front(); }
    double grid_max() const { return osnr_grid_db.back(); }
};

struct Dataset {
    DatasetSpec spec;
    std::vector<LabeledExample> examples;

    std::size_t count(Partition p) const;
    std::vector<const LabeledExample*> partition(Partition p) const;
};

// Normalized post-equalization amplitudes for one pipeline tuple; kept so
// hyperparameter sweeps can re-bin without re-simulating.
struct ProcessedFrame {
    std::vector<double> amplitudes;
    sigsim::ModulationFormat format = sigsim::ModulationFormat::OOK;
    double osnr_db = 0.0;
    int frame_index = 0;
};

struct FrameCache {
    DatasetSpec spec;
    std::vector<ProcessedFrame> frames; // canonical order: format, osnr, frame
};

AmplitudeHistogram compute_histogram(const std::vector<double>& amplitudes, std::size_t bin_count);

// One-hot class target (order OOK, PAM4, PAM8) and min-max normalized OSNR.
// Throws OutOfGrid when osnr_db falls outside [grid_min, grid_max].
std::pair<std::array<double, 3>, double> encode_targets(sigsim::ModulationFormat fmt,
                                                        double osnr_db,
                                                        const std::vector<double>& grid);

double decode_osnr(double osnr_norm, double grid_min, double grid_max);

// Runs sigsim + dsp for every (format, osnr, frame) tuple of the spec.
// `jobs` caps worker threads (0 = hardware concurrency); output order is
// canonical regardless of scheduling.
FrameCache build_frames(const DatasetSpec& spec, const sigsim::SimConfig& sim,
                        const dsp::EqualizerConfig& eq, unsigned jobs = 0);

// Histograms a frame cache at the spec's bin count; examples unpartitioned.
Dataset bin_frames(const FrameCache& cache, std::size_t bin_count);

// bin_frames followed by the same seeded split that build_dataset applies,
// so re-binned datasets share one partition assignment per master seed.
Dataset bin_and_split(const FrameCache& cache, std::size_t bin_count);

// build_frames + bin_frames + split_dataset with seeds derived from spec.seed.
Dataset build_dataset(const DatasetSpec& spec, const sigsim::SimConfig& sim,
                      const dsp::EqualizerConfig& eq, unsigned jobs = 0);

// Seeded permutation split: test = floor(test_frac * N), then
// val = floor(val_frac_of_train * (N - test)), remainder train.
void split_dataset(Dataset& ds, std::uint64_t seed);

// UTF-8 CSV with header format,osnr_db,frame_index,partition,bin_0,... and a
// JSON sidecar carrying the spec and pipeline configuration.
void save_dataset(const Dataset& ds, const std::string& csv_path, const std::string& meta_path,
                  const std::string& pipeline_config_json);
Dataset load_dataset(const std::string& csv_path, const std::string& meta_path);

// Resolved pipeline configuration stored in the sidecar on save; returned
// verbatim by load for provenance checks.
std::string dataset_pipeline_config(const std::string& meta_path);

} // namespace opm::features

#endif
