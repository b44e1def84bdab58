/*
 * opm - optical performance monitoring workbench.
 *
 * C interface to the simulation, DSP, feature-extraction and multi-task
 * network pipeline. All functions return OPM_OK on success; on failure they
 * return a status code and leave a human-readable detail string readable
 * through opm_last_error() (thread-local, valid until the next failing call
 * on the same thread). Strings returned through char** out-parameters are
 * heap-allocated and must be released with opm_string_free().
 */

#ifndef OPM_OPM_H
#define OPM_OPM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OPM_API __declspec(dllexport)
#else
#define OPM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum opm_status {
    OPM_OK = 0,
    OPM_E_INVALID_ARGUMENT = 1,
    OPM_E_CONFIG = 2,
    OPM_E_PARSE = 3,
    OPM_E_IO = 4,
    OPM_E_ZERO_SIGNAL = 5,
    OPM_E_UNSUPPORTED_RATIO = 6,
    OPM_E_DIVERGED = 7,
    OPM_E_NON_FINITE = 8,
    OPM_E_OUT_OF_GRID = 9,
    OPM_E_EMPTY_PARTITION = 10,
    OPM_E_INTERNAL = 11
} opm_status;

typedef enum opm_partition {
    OPM_PARTITION_TRAIN = 0,
    OPM_PARTITION_VAL = 1,
    OPM_PARTITION_TEST = 2
} opm_partition;

typedef enum opm_sweep_kind {
    OPM_SWEEP_BINS = 0,
    OPM_SWEEP_SHARED = 1,
    OPM_SWEEP_LOSS_RATIO = 2
} opm_sweep_kind;

/* Opaque handles. */
typedef struct opm_config opm_config;
typedef struct opm_dataset opm_dataset;
typedef struct opm_model opm_model;

OPM_API const char* opm_version(void);
OPM_API const char* opm_status_name(opm_status status);
OPM_API const char* opm_last_error(void);
OPM_API void opm_string_free(char* s);

/*
 * Configuration. JSON mirrors the run-configuration schema (see README);
 * unknown keys are rejected. opm_config_override layers a partial JSON
 * document over an existing configuration, which gives the usual
 * defaults < file < flags precedence when applied twice.
 */
OPM_API opm_status opm_config_create_default(opm_config** out);
OPM_API opm_status opm_config_create(const char* json_utf8, opm_config** out);
OPM_API opm_status opm_config_override(const opm_config* base, const char* json_utf8,
                                       opm_config** out);
OPM_API opm_status opm_config_to_json(const opm_config* cfg, char** out_json);
OPM_API void opm_config_destroy(opm_config* cfg);

/*
 * Dataset pipeline: simulate frames, equalize, histogram, label and split.
 * A built dataset remembers the resolved configuration and stores it in the
 * JSON sidecar on save.
 */
OPM_API opm_status opm_dataset_build(const opm_config* cfg, opm_dataset** out);
OPM_API opm_status opm_dataset_save(const opm_dataset* ds, const char* csv_path,
                                    const char* meta_path);
OPM_API opm_status opm_dataset_load(const char* csv_path, const char* meta_path,
                                    opm_dataset** out);
OPM_API opm_status opm_dataset_counts(const opm_dataset* ds, uint32_t* out_total,
                                      uint32_t* out_train, uint32_t* out_val, uint32_t* out_test);
OPM_API opm_status opm_dataset_bin_count(const opm_dataset* ds, uint32_t* out_bins);
OPM_API void opm_dataset_destroy(opm_dataset* ds);

/*
 * Training. The network topology follows the configuration's sizing rules
 * at the dataset's bin count; the initialization/shuffle seed is seed
 * index 0 of the master seed's schedule. The history CSV has columns
 * epoch,train_loss,val_loss,val_acc,val_rmse_db.
 */
OPM_API opm_status opm_train(const opm_config* cfg, const opm_dataset* ds, opm_model** out_model,
                             char** out_history_csv, uint32_t* out_best_epoch,
                             double* out_best_val_loss);

OPM_API opm_status opm_model_save(const opm_model* model, const char* path);
OPM_API opm_status opm_model_load(const char* path, opm_model** out);
OPM_API opm_status opm_model_to_json(const opm_model* model, char** out_json);
OPM_API void opm_model_destroy(opm_model* model);

/*
 * Single prediction. `features` must match the model's input size.
 * out_format_index: 0 = OOK, 1 = PAM4, 2 = PAM8, -1 when the model has no
 * MFI branch; out_osnr_db is NaN when the model has no OSNR branch.
 */
OPM_API opm_status opm_model_predict(const opm_model* model, const double* features,
                                     size_t n_features, double grid_min_db, double grid_max_db,
                                     int32_t* out_format_index, double* out_osnr_db);

/*
 * Evaluation over one dataset partition: metrics JSON (accuracy, RMSE,
 * confusion matrix, per-OSNR errors) plus the true-vs-estimated scatter
 * table CSV sorted by true OSNR.
 */
OPM_API opm_status opm_evaluate(const opm_model* model, const opm_dataset* ds,
                                opm_partition partition, char** out_metrics_json,
                                char** out_scatter_csv);

/*
 * Hyperparameter sweeps and the MTL-vs-STL comparison. The sweep table CSV
 * has columns value,kind,acc_avg,acc_min,acc_max,rmse_avg,rmse_min,
 * rmse_max,n_neurons,n_params (loss-ratio adds stl_baseline_rmse).
 * out_best_value/out_best_rmse_avg report the MTL row with the lowest
 * average RMSE (ties to the smaller value); both may be NULL.
 */
OPM_API opm_status opm_sweep(const opm_config* cfg, opm_sweep_kind kind, char** out_table_csv,
                             double* out_best_value, double* out_best_rmse_avg);
OPM_API opm_status opm_compare_networks(const opm_config* cfg, char** out_table_csv);

#ifdef __cplusplus
}
#endif

#endif
