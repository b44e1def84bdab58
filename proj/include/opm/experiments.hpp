#ifndef OPM_EXPERIMENTS_HPP
#define OPM_EXPERIMENTS_HPP

#include "opm/features.hpp"
#include "opm/mtlnet.hpp"
#include "opm/run_config.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace opm::experiments {

enum class NetworkKind { MTL = 0, STL_MFI = 1, STL_OSNR = 2 };

const char* network_kind_name(NetworkKind k);

// Single-task reference operating point (bin count and shared width used
// wherever an STL comparison network is built).
inline constexpr std::size_t kStlReferenceBins = 200;
inline constexpr std::size_t kStlReferenceShared = 110;

struct Metrics {
    double mfi_accuracy = 0.0; // nan when the network has no MFI branch
    double osnr_rmse_db = 0.0; // nan when the network has no OSNR branch
    std::array<std::array<std::uint64_t, 3>, 3> confusion{}; // rows true, cols predicted
    struct PerOsnr {
        double true_db = 0.0;
        double mean_est_db = 0.0;
        double rmse_db = 0.0;
    };
    std::vector<PerOsnr> per_osnr;
    std::size_t n_examples = 0;
};

// Accuracy, RMSE, confusion and per-OSNR errors of a trained network over
// one dataset partition. Throws EmptyPartition when it holds no examples.
Metrics evaluate(const mtl::MtlNetwork& net, const features::Dataset& ds,
                 features::Partition part);

std::string metrics_to_json(const Metrics& m);

struct Aggregate {
    double avg = 0.0;
    double min = 0.0;
    double max = 0.0;
};

Aggregate aggregate(const std::vector<double>& values);

struct RunStats {
    std::vector<Metrics> per_seed;
    Aggregate accuracy;
    Aggregate rmse_db;
};

// Trains n_seeds networks on the fixed dataset (seed_i = hash(master, i)
// varies only initialization and shuffling) and aggregates test metrics.
RunStats multi_seed_run(const mtl::MtlTopology& topo, const features::Dataset& ds,
                        const mtl::TrainConfig& train_cfg, const mtl::LossWeights& weights,
                        std::uint64_t master_seed, int n_seeds, unsigned jobs = 0);

struct SweepRow {
    double value = 0.0;
    NetworkKind kind = NetworkKind::MTL;
    RunStats stats;
    std::size_t n_neurons = 0;
    std::size_t n_params = 0;
    double stl_baseline_rmse = 0.0; // loss-ratio sweep only, else nan
};

struct SweepTable {
    config::SweepKind kind = config::SweepKind::Bins;
    std::vector<SweepRow> rows;
};

// Bin-number sweep: one set of simulated frames, re-histogrammed per bin
// count; MTL and both STL variants trained at every value.
SweepTable sweep_bins(const config::RunConfig& cfg);

// Shared-layer width sweep at fixed bin counts (MTL 100, STL 200); MTL and
// the STL OSNR network.
SweepTable sweep_shared_neurons(const config::RunConfig& cfg);

// OSNR:MFI loss-weight-ratio sweep at the fixed reference topology, with
// the STL OSNR RMSE carried along as a baseline column.
SweepTable sweep_loss_ratio(const config::RunConfig& cfg);

SweepTable run_sweep(const config::RunConfig& cfg); // dispatch on cfg.sweep.kind

std::string sweep_table_csv(const SweepTable& table);

// Row of the table whose MTL rmse_avg is minimal (ties to the smaller
// value). Returns the row index.
std::size_t sweep_argmin_row(const SweepTable& table);

// One (true dB, estimated dB) row per partition example, sorted by true OSNR.
std::vector<std::pair<double, double>> scatter_true_vs_estimated(const mtl::MtlNetwork& net,
                                                                 const features::Dataset& ds,
                                                                 features::Partition part);

std::string scatter_csv(const std::vector<std::pair<double, double>>& rows);

struct CompareRow {
    NetworkKind kind = NetworkKind::MTL;
    std::size_t n_neurons = 0;
    std::size_t n_params = 0;
    RunStats stats;
};

// Side-by-side multi-seed comparison of the MTL network against both
// single-task variants at their reference operating points.
std::vector<CompareRow> compare_stl_mtl(const config::RunConfig& cfg);

std::string compare_csv(const std::vector<CompareRow>& rows);

} // namespace opm::experiments

#endif
