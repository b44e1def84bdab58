#include "opm/experiments.hpp"

#include "opm/errors.hpp"
#include "opm/parallel.hpp"
#include "opm/rng.hpp"
#include "opm/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace opm::experiments {

namespace {

using nlohmann::json;

} // namespace

const char* network_kind_name(NetworkKind k) {
    switch (k) {
        case NetworkKind::MTL: return "mtl";
        case NetworkKind::STL_MFI: return "stl-mfi";
        case NetworkKind::STL_OSNR: return "stl-osnr";
    }
    throw InvalidArgumentError("unknown network kind");
}

Metrics evaluate(const mtl::MtlNetwork& net, const features::Dataset& ds,
                 features::Partition part) {
    const auto examples = ds.partition(part);
    if (examples.empty())
        throw EmptyPartitionError(std::string("evaluate: partition '") +
                                  features::partition_name(part) + "' is empty");

    const bool has_mfi = !net.mfi_layers.empty();
    const bool has_osnr = !net.osnr_layers.empty();
    const double grid_min = ds.spec.grid_min();
    const double grid_max = ds.spec.grid_max();

    Metrics m;
    m.n_examples = examples.size();
    std::size_t correct = 0;
    double se = 0.0;
    std::map<double, std::pair<std::vector<double>, double>> by_osnr; // true -> (ests, se)

    for (const auto* ex : examples) {
        const auto pred = mtl::predict(net, ex->features, grid_min, grid_max);
        if (has_mfi) {
            const auto t = static_cast<std::size_t>(ex->format);
            const auto p = static_cast<std::size_t>(pred.format_index);
            ++m.confusion[t][p];
            if (t == p) ++correct;
        }
        if (has_osnr) {
            const double err = pred.osnr_db - ex->osnr_db;
            se += err * err;
            auto& cell = by_osnr[ex->osnr_db];
            cell.first.push_back(pred.osnr_db);
            cell.second += err * err;
        }
    }
    const double n = static_cast<double>(examples.size());
    m.mfi_accuracy = has_mfi ? static_cast<double>(correct) / n : std::nan("");
    m.osnr_rmse_db = has_osnr ? std::sqrt(se / n) : std::nan("");
    for (const auto& [true_db, cell] : by_osnr) {
        double mean = 0.0;
        for (double e : cell.first) mean += e;
        mean /= static_cast<double>(cell.first.size());
        m.per_osnr.push_back(Metrics::PerOsnr{
            true_db, mean, std::sqrt(cell.second / static_cast<double>(cell.first.size()))});
    }
    return m;
}

std::string metrics_to_json(const Metrics& m) {
    json j;
    j["n_examples"] = m.n_examples;
    j["mfi_accuracy"] = m.mfi_accuracy;
    j["osnr_rmse_db"] = m.osnr_rmse_db;
    json conf = json::array();
    for (const auto& row : m.confusion) conf.push_back(row);
    j["confusion"] = conf;
    json per = json::array();
    for (const auto& p : m.per_osnr)
        per.push_back(
            {{"true_db", p.true_db}, {"mean_est_db", p.mean_est_db}, {"rmse_db", p.rmse_db}});
    j["per_osnr"] = per;
    return j.dump(2);
}

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    if (values.empty()) return a;
    a.avg = 0.0;
    a.min = values.front();
    a.max = values.front();
    for (double v : values) {
        a.avg += v;
        a.min = std::min(a.min, v);
        a.max = std::max(a.max, v);
    }
    a.avg /= static_cast<double>(values.size());
    return a;
}

RunStats multi_seed_run(const mtl::MtlTopology& topo, const features::Dataset& ds,
                        const mtl::TrainConfig& train_cfg, const mtl::LossWeights& weights,
                        std::uint64_t master_seed, int n_seeds, unsigned jobs) {
    if (n_seeds < 1) throw InvalidArgumentError("multi_seed_run: n_seeds must be >= 1");
    RunStats stats;
    stats.per_seed.resize(static_cast<std::size_t>(n_seeds));

    parallel_for(static_cast<std::size_t>(n_seeds), jobs, [&](std::size_t i) {
        const std::uint64_t seed_i = derive_seed(master_seed, i);
        try {
            auto net = mtl::init_network(topo, seed_i);
            mtl::TrainConfig cfg = train_cfg;
            cfg.seed = seed_i;
            const auto trained = mtl::train(std::move(net), ds, cfg, weights);
            stats.per_seed[i] = evaluate(trained.best, ds, features::Partition::Test);
        } catch (const Error& e) {
            throw Error(e.code(),
                        std::string(e.what()) + " [seed index " + std::to_string(i) + "]");
        }
    });

    std::vector<double> accs, rmses;
    for (const auto& m : stats.per_seed) {
        accs.push_back(m.mfi_accuracy);
        rmses.push_back(m.osnr_rmse_db);
    }
    stats.accuracy = aggregate(accs);
    stats.rmse_db = aggregate(rmses);
    return stats;
}

namespace {

mtl::MtlTopology topology_for_kind(NetworkKind kind, std::size_t bins, std::size_t shared) {
    auto topo = mtl::MtlTopology::standard(bins, shared);
    switch (kind) {
        case NetworkKind::MTL: return topo;
        case NetworkKind::STL_MFI: return mtl::make_stl(topo, mtl::Task::MFI);
        case NetworkKind::STL_OSNR: return mtl::make_stl(topo, mtl::Task::OSNR);
    }
    throw InvalidArgumentError("unknown network kind");
}

SweepRow make_row(double value, NetworkKind kind, const mtl::MtlTopology& topo,
                  const features::Dataset& ds, const config::RunConfig& cfg) {
    SweepRow row;
    row.value = value;
    row.kind = kind;
    row.n_neurons = mtl::count_neurons(topo);
    row.n_params = mtl::count_parameters(topo);
    row.stats = multi_seed_run(topo, ds, cfg.train, cfg.loss_weights, cfg.seed,
                               cfg.sweep.n_seeds, cfg.jobs);
    row.stl_baseline_rmse = std::nan("");
    return row;
}

} // namespace

SweepTable sweep_bins(const config::RunConfig& cfg) {
    cfg.validate();
    const auto cache = features::build_frames(cfg.dataset, cfg.sim, cfg.equalizer, cfg.jobs);
    SweepTable table;
    table.kind = config::SweepKind::Bins;
    for (double value : cfg.sweep.resolved_values()) {
        const auto bins = static_cast<std::size_t>(value);
        const auto ds = features::bin_and_split(cache, bins);
        // Shared width tracks half the input at every swept bin count.
        for (NetworkKind kind :
             {NetworkKind::MTL, NetworkKind::STL_MFI, NetworkKind::STL_OSNR}) {
            const auto topo = topology_for_kind(kind, bins, 0);
            table.rows.push_back(make_row(value, kind, topo, ds, cfg));
        }
    }
    return table;
}

SweepTable sweep_shared_neurons(const config::RunConfig& cfg) {
    cfg.validate();
    const auto cache = features::build_frames(cfg.dataset, cfg.sim, cfg.equalizer, cfg.jobs);
    const auto ds_mtl = features::bin_and_split(cache, cfg.dataset.bin_count);
    const auto ds_stl = features::bin_and_split(cache, kStlReferenceBins);

    SweepTable table;
    table.kind = config::SweepKind::SharedNeurons;
    for (double value : cfg.sweep.resolved_values()) {
        const auto shared = static_cast<std::size_t>(value);
        table.rows.push_back(make_row(
            value, NetworkKind::MTL, topology_for_kind(NetworkKind::MTL, cfg.dataset.bin_count, shared),
            ds_mtl, cfg));
        table.rows.push_back(make_row(
            value, NetworkKind::STL_OSNR,
            topology_for_kind(NetworkKind::STL_OSNR, kStlReferenceBins, shared), ds_stl, cfg));
    }
    return table;
}

SweepTable sweep_loss_ratio(const config::RunConfig& cfg) {
    cfg.validate();
    const auto cache = features::build_frames(cfg.dataset, cfg.sim, cfg.equalizer, cfg.jobs);
    const auto ds = features::bin_and_split(cache, cfg.dataset.bin_count);
    const auto ds_stl = features::bin_and_split(cache, kStlReferenceBins);

    // Reference line: the single-task OSNR network at its own operating point.
    const auto stl_topo =
        topology_for_kind(NetworkKind::STL_OSNR, kStlReferenceBins, kStlReferenceShared);
    const auto stl_stats = multi_seed_run(stl_topo, ds_stl, cfg.train, cfg.loss_weights, cfg.seed,
                                          cfg.sweep.n_seeds, cfg.jobs);
    const double baseline = stl_stats.rmse_db.avg;

    const auto topo = cfg.topology_for(cfg.dataset.bin_count, cfg.network.shared_neurons);
    SweepTable table;
    table.kind = config::SweepKind::LossRatio;
    for (double ratio : cfg.sweep.resolved_values()) {
        config::RunConfig cell = cfg;
        cell.loss_weights.w_mfi = 1.0;
        cell.loss_weights.w_osnr = ratio;
        SweepRow row = make_row(ratio, NetworkKind::MTL, topo, ds, cell);
        row.stl_baseline_rmse = baseline;
        table.rows.push_back(row);
    }
    return table;
}

SweepTable run_sweep(const config::RunConfig& cfg) {
    switch (cfg.sweep.kind) {
        case config::SweepKind::Bins: return sweep_bins(cfg);
        case config::SweepKind::SharedNeurons: return sweep_shared_neurons(cfg);
        case config::SweepKind::LossRatio: return sweep_loss_ratio(cfg);
    }
    throw InvalidArgumentError("unknown sweep kind");
}

std::string sweep_table_csv(const SweepTable& table) {
    const bool with_baseline = table.kind == config::SweepKind::LossRatio;
    std::ostringstream out;
    out << "value,kind,acc_avg,acc_min,acc_max,rmse_avg,rmse_min,rmse_max,n_neurons,n_params";
    if (with_baseline) out << ",stl_baseline_rmse";
    out << "\n";
    for (const auto& row : table.rows) {
        out << textio::fmt17(row.value) << ',' << network_kind_name(row.kind) << ','
            << textio::fmt17(row.stats.accuracy.avg) << ',' << textio::fmt17(row.stats.accuracy.min)
            << ',' << textio::fmt17(row.stats.accuracy.max) << ','
            << textio::fmt17(row.stats.rmse_db.avg) << ',' << textio::fmt17(row.stats.rmse_db.min)
            << ',' << textio::fmt17(row.stats.rmse_db.max) << ',' << row.n_neurons << ','
            << row.n_params;
        if (with_baseline) out << ',' << textio::fmt17(row.stl_baseline_rmse);
        out << "\n";
    }
    return out.str();
}

std::size_t sweep_argmin_row(const SweepTable& table) {
    std::size_t best = table.rows.size();
    double best_rmse = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].kind != NetworkKind::MTL) continue;
        const double r = table.rows[i].stats.rmse_db.avg;
        if (std::isfinite(r) && r < best_rmse) { // first minimum wins: ties go to the smaller value
            best_rmse = r;
            best = i;
        }
    }
    if (best == table.rows.size())
        throw InvalidArgumentError("sweep_argmin_row: table has no finite MTL rows");
    return best;
}

std::vector<std::pair<double, double>> scatter_true_vs_estimated(const mtl::MtlNetwork& net,
                                                                 const features::Dataset& ds,
                                                                 features::Partition part) {
    const auto examples = ds.partition(part);
    if (examples.empty())
        throw EmptyPartitionError(std::string("scatter: partition '") +
                                  features::partition_name(part) + "' is empty");
    std::vector<std::pair<double, double>> rows;
    rows.reserve(examples.size());
    for (const auto* ex : examples) {
        const auto pred = mtl::predict(net, ex->features, ds.spec.grid_min(), ds.spec.grid_max());
        rows.emplace_back(ex->osnr_db, pred.osnr_db);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return rows;
}

std::string scatter_csv(const std::vector<std::pair<double, double>>& rows) {
    std::ostringstream out;
    out << "true_osnr_db,est_osnr_db\n";
    for (const auto& [t, e] : rows) out << textio::fmt17(t) << ',' << textio::fmt17(e) << "\n";
    return out.str();
}

std::vector<CompareRow> compare_stl_mtl(const config::RunConfig& cfg) {
    cfg.validate();
    const auto cache = features::build_frames(cfg.dataset, cfg.sim, cfg.equalizer, cfg.jobs);
    const auto ds_mtl = features::bin_and_split(cache, cfg.dataset.bin_count);
    const auto ds_stl = features::bin_and_split(cache, kStlReferenceBins);

    std::vector<CompareRow> rows;
    for (NetworkKind kind : {NetworkKind::MTL, NetworkKind::STL_MFI, NetworkKind::STL_OSNR}) {
        const bool is_mtl = kind == NetworkKind::MTL;
        const auto topo =
            is_mtl ? topology_for_kind(kind, cfg.dataset.bin_count, cfg.network.shared_neurons)
                   : topology_for_kind(kind, kStlReferenceBins, kStlReferenceShared);
        CompareRow row;
        row.kind = kind;
        row.n_neurons = mtl::count_neurons(topo);
        row.n_params = mtl::count_parameters(topo);
        row.stats = multi_seed_run(topo, is_mtl ? ds_mtl : ds_stl, cfg.train, cfg.loss_weights,
                                   cfg.seed, cfg.sweep.n_seeds, cfg.jobs);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << "kind,n_neurons,n_params,acc_avg,acc_min,acc_max,rmse_avg,rmse_min,rmse_max,"
           "rmse_spread\n";
    for (const auto& row : rows) {
        out << network_kind_name(row.kind) << ',' << row.n_neurons << ',' << row.n_params << ','
            << textio::fmt17(row.stats.accuracy.avg) << ',' << textio::fmt17(row.stats.accuracy.min)
            << ',' << textio::fmt17(row.stats.accuracy.max) << ','
            << textio::fmt17(row.stats.rmse_db.avg) << ',' << textio::fmt17(row.stats.rmse_db.min)
            << ',' << textio::fmt17(row.stats.rmse_db.max) << ','
            << textio::fmt17(row.stats.rmse_db.max - row.stats.rmse_db.min) << "\n";
    }
    return out.str();
}

} // namespace opm::experiments
