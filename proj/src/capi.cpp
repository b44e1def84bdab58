#include "opm/opm.h"

#include "opm/errors.hpp"
#include "opm/experiments.hpp"
#include "opm/features.hpp"
#include "opm/mtlnet.hpp"
#include "opm/rng.hpp"
#include "opm/run_config.hpp"
#include "opm/textio.hpp"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

struct opm_config {
    opm::config::RunConfig cfg;
};

struct opm_dataset {
    opm::features::Dataset ds;
    std::string pipeline_config_json; // resolved config captured at build time
};

struct opm_model {
    opm::mtl::MtlNetwork net;
};

namespace {

thread_local std::string g_last_error;

opm_status status_from_code(opm::ErrorCode code) {
    using opm::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidArgument: return OPM_E_INVALID_ARGUMENT;
        case ErrorCode::Config: return OPM_E_CONFIG;
        case ErrorCode::Parse: return OPM_E_PARSE;
        case ErrorCode::Io: return OPM_E_IO;
        case ErrorCode::ZeroSignal: return OPM_E_ZERO_SIGNAL;
        case ErrorCode::UnsupportedRatio: return OPM_E_UNSUPPORTED_RATIO;
        case ErrorCode::Diverged: return OPM_E_DIVERGED;
        case ErrorCode::NonFinite: return OPM_E_NON_FINITE;
        case ErrorCode::OutOfGrid: return OPM_E_OUT_OF_GRID;
        case ErrorCode::EmptyPartition: return OPM_E_EMPTY_PARTITION;
    }
    return OPM_E_INTERNAL;
}

template <typename Fn>
opm_status guarded(Fn&& fn) {
    try {
        fn();
        return OPM_OK;
    } catch (const opm::Error& e) {
        g_last_error = e.what();
        return status_from_code(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return OPM_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return OPM_E_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

opm_status require(bool cond, const char* message) {
    if (cond) return OPM_OK;
    g_last_error = message;
    return OPM_E_INVALID_ARGUMENT;
}

} // namespace

extern "C" {

const char* opm_version(void) { return "0.1.0"; }

const char* opm_status_name(opm_status status) {
    switch (status) {
        case OPM_OK: return "ok";
        case OPM_E_INVALID_ARGUMENT: return "invalid argument";
        case OPM_E_CONFIG: return "configuration error";
        case OPM_E_PARSE: return "parse error";
        case OPM_E_IO: return "I/O error";
        case OPM_E_ZERO_SIGNAL: return "zero signal";
        case OPM_E_UNSUPPORTED_RATIO: return "unsupported rate ratio";
        case OPM_E_DIVERGED: return "equalizer diverged";
        case OPM_E_NON_FINITE: return "non-finite loss";
        case OPM_E_OUT_OF_GRID: return "OSNR outside grid";
        case OPM_E_EMPTY_PARTITION: return "empty partition";
        case OPM_E_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* opm_last_error(void) { return g_last_error.c_str(); }

void opm_string_free(char* s) { std::free(s); }

opm_status opm_config_create_default(opm_config** out) {
    if (auto st = require(out != nullptr, "opm_config_create_default: out is NULL")) return st;
    return guarded([&] { *out = new opm_config{opm::config::RunConfig::defaults()}; });
}

opm_status opm_config_create(const char* json_utf8, opm_config** out) {
    if (auto st = require(out && json_utf8, "opm_config_create: NULL argument")) return st;
    return guarded([&] {
        auto cfg = opm::config::from_json(json_utf8);
        cfg.validate();
        *out = new opm_config{std::move(cfg)};
    });
}

opm_status opm_config_override(const opm_config* base, const char* json_utf8, opm_config** out) {
    if (auto st = require(base && json_utf8 && out, "opm_config_override: NULL argument"))
        return st;
    return guarded([&] {
        auto cfg = opm::config::from_json(json_utf8, base->cfg);
        cfg.validate();
        *out = new opm_config{std::move(cfg)};
    });
}

opm_status opm_config_to_json(const opm_config* cfg, char** out_json) {
    if (auto st = require(cfg && out_json, "opm_config_to_json: NULL argument")) return st;
    return guarded([&] { *out_json = dup_string(opm::config::to_json(cfg->cfg)); });
}

void opm_config_destroy(opm_config* cfg) { delete cfg; }

opm_status opm_dataset_build(const opm_config* cfg, opm_dataset** out) {
    if (auto st = require(cfg && out, "opm_dataset_build: NULL argument")) return st;
    return guarded([&] {
        cfg->cfg.validate();
        auto ds = opm::features::build_dataset(cfg->cfg.dataset, cfg->cfg.sim, cfg->cfg.equalizer,
                                               cfg->cfg.jobs);
        *out = new opm_dataset{std::move(ds), opm::config::to_json(cfg->cfg)};
    });
}

opm_status opm_dataset_save(const opm_dataset* ds, const char* csv_path, const char* meta_path) {
    if (auto st = require(ds && csv_path && meta_path, "opm_dataset_save: NULL argument"))
        return st;
    return guarded(
        [&] { opm::features::save_dataset(ds->ds, csv_path, meta_path, ds->pipeline_config_json); });
}

opm_status opm_dataset_load(const char* csv_path, const char* meta_path, opm_dataset** out) {
    if (auto st = require(csv_path && meta_path && out, "opm_dataset_load: NULL argument"))
        return st;
    return guarded([&] {
        auto ds = opm::features::load_dataset(csv_path, meta_path);
        auto pipeline = opm::features::dataset_pipeline_config(meta_path);
        *out = new opm_dataset{std::move(ds), std::move(pipeline)};
    });
}

opm_status opm_dataset_counts(const opm_dataset* ds, uint32_t* out_total, uint32_t* out_train,
                              uint32_t* out_val, uint32_t* out_test) {
    if (auto st = require(ds != nullptr, "opm_dataset_counts: dataset is NULL")) return st;
    return guarded([&] {
        using opm::features::Partition;
        if (out_total) *out_total = static_cast<uint32_t>(ds->ds.examples.size());
        if (out_train) *out_train = static_cast<uint32_t>(ds->ds.count(Partition::Train));
        if (out_val) *out_val = static_cast<uint32_t>(ds->ds.count(Partition::Val));
        if (out_test) *out_test = static_cast<uint32_t>(ds->ds.count(Partition::Test));
    });
}

opm_status opm_dataset_bin_count(const opm_dataset* ds, uint32_t* out_bins) {
    if (auto st = require(ds && out_bins, "opm_dataset_bin_count: NULL argument")) return st;
    *out_bins = static_cast<uint32_t>(ds->ds.spec.bin_count);
    return OPM_OK;
}

void opm_dataset_destroy(opm_dataset* ds) { delete ds; }

opm_status opm_train(const opm_config* cfg, const opm_dataset* ds, opm_model** out_model,
                     char** out_history_csv, uint32_t* out_best_epoch,
                     double* out_best_val_loss) {
    if (auto st = require(cfg && ds && out_model, "opm_train: NULL argument")) return st;
    return guarded([&] {
        const auto topo =
            cfg->cfg.topology_for(ds->ds.spec.bin_count, cfg->cfg.network.shared_neurons);
        const std::uint64_t seed0 = opm::derive_seed(cfg->cfg.seed, 0);
        auto net = opm::mtl::init_network(topo, seed0);
        opm::mtl::TrainConfig tc = cfg->cfg.train;
        tc.seed = seed0;
        auto result = opm::mtl::train(std::move(net), ds->ds, tc, cfg->cfg.loss_weights);

        if (out_history_csv) {
            std::ostringstream csv;
            csv << "epoch,train_loss,val_loss,val_acc,val_rmse_db\n";
            for (const auto& rec : result.history)
                csv << rec.epoch << ',' << opm::textio::fmt17(rec.train_loss) << ','
                    << opm::textio::fmt17(rec.val_loss) << ',' << opm::textio::fmt17(rec.val_acc)
                    << ',' << opm::textio::fmt17(rec.val_rmse_db) << "\n";
            *out_history_csv = dup_string(csv.str());
        }
        if (out_best_epoch) *out_best_epoch = static_cast<uint32_t>(result.best_epoch);
        if (out_best_val_loss) *out_best_val_loss = result.best_val_loss;
        *out_model = new opm_model{std::move(result.best)};
    });
}

opm_status opm_model_save(const opm_model* model, const char* path) {
    if (auto st = require(model && path, "opm_model_save: NULL argument")) return st;
    return guarded([&] { opm::mtl::save_model(model->net, path); });
}

opm_status opm_model_load(const char* path, opm_model** out) {
    if (auto st = require(path && out, "opm_model_load: NULL argument")) return st;
    return guarded([&] { *out = new opm_model{opm::mtl::load_model(path)}; });
}

opm_status opm_model_to_json(const opm_model* model, char** out_json) {
    if (auto st = require(model && out_json, "opm_model_to_json: NULL argument")) return st;
    return guarded([&] { *out_json = dup_string(opm::mtl::model_to_json(model->net)); });
}

void opm_model_destroy(opm_model* model) { delete model; }

opm_status opm_model_predict(const opm_model* model, const double* features, size_t n_features,
                             double grid_min_db, double grid_max_db, int32_t* out_format_index,
                             double* out_osnr_db) {
    if (auto st = require(model && features, "opm_model_predict: NULL argument")) return st;
    return guarded([&] {
        const auto pred = opm::mtl::predict(
            model->net, std::span<const double>(features, n_features), grid_min_db, grid_max_db);
        if (out_format_index) *out_format_index = pred.format_index;
        if (out_osnr_db) *out_osnr_db = pred.osnr_db;
    });
}

opm_status opm_evaluate(const opm_model* model, const opm_dataset* ds, opm_partition partition,
                        char** out_metrics_json, char** out_scatter_csv) {
    if (auto st = require(model && ds, "opm_evaluate: NULL argument")) return st;
    if (auto st = require(partition >= OPM_PARTITION_TRAIN && partition <= OPM_PARTITION_TEST,
                          "opm_evaluate: invalid partition"))
        return st;
    return guarded([&] {
        const auto part = static_cast<opm::features::Partition>(partition);
        const auto metrics = opm::experiments::evaluate(model->net, ds->ds, part);
        if (out_metrics_json)
            *out_metrics_json = dup_string(opm::experiments::metrics_to_json(metrics));
        if (out_scatter_csv) {
            const auto rows =
                opm::experiments::scatter_true_vs_estimated(model->net, ds->ds, part);
            *out_scatter_csv = dup_string(opm::experiments::scatter_csv(rows));
        }
    });
}

opm_status opm_sweep(const opm_config* cfg, opm_sweep_kind kind, char** out_table_csv,
                     double* out_best_value, double* out_best_rmse_avg) {
    if (auto st = require(cfg && out_table_csv, "opm_sweep: NULL argument")) return st;
    if (auto st = require(kind >= OPM_SWEEP_BINS && kind <= OPM_SWEEP_LOSS_RATIO,
                          "opm_sweep: invalid sweep kind"))
        return st;
    return guarded([&] {
        opm::config::RunConfig run = cfg->cfg;
        run.sweep.kind = static_cast<opm::config::SweepKind>(kind);
        const auto table = opm::experiments::run_sweep(run);
        *out_table_csv = dup_string(opm::experiments::sweep_table_csv(table));
        const auto best = opm::experiments::sweep_argmin_row(table);
        if (out_best_value) *out_best_value = table.rows[best].value;
        if (out_best_rmse_avg) *out_best_rmse_avg = table.rows[best].stats.rmse_db.avg;
    });
}

opm_status opm_compare_networks(const opm_config* cfg, char** out_table_csv) {
    if (auto st = require(cfg && out_table_csv, "opm_compare_networks: NULL argument")) return st;
    return guarded([&] {
        const auto rows = opm::experiments::compare_stl_mtl(cfg->cfg);
        *out_table_csv = dup_string(opm::experiments::compare_csv(rows));
    });
}

} // extern "C"
