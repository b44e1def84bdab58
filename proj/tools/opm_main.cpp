// Command-line front end for the monitoring pipeline. Talks to the core
// exclusively through the C API in opm/opm.h.

#include <opm/opm.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::string out_dir = ".";
    bool force = false;
};

[[noreturn]] void die(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    std::exit(1);
}

void check(opm_status status, const std::string& context) {
    if (status == OPM_OK) return;
    die(context + ": " + opm_status_name(status) + ": " + opm_last_error());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) die("cannot read " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Refuses to overwrite existing outputs unless --force was given.
void write_output(const std::string& path, const std::string& text, bool force) {
    if (fs::exists(path) && !force) die(path + " already exists (use --force to overwrite)");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) die("cannot write " + path);
    out << text;
    if (!out.good()) die("write failed: " + path);
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    // a:b:step expands to an inclusive range.
    if (text.find(':') != std::string::npos) {
        double lo = 0, hi = 0, step = 1;
        char extra = 0;
        const int n = std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &lo, &hi, &step, &extra);
        if (n < 2 || extra != 0) die(flag + ": expected LO:HI[:STEP], got '" + text + "'");
        if (!(step > 0)) die(flag + ": step must be positive");
        for (double v = lo; v <= hi + 1e-9; v += step) values.push_back(v);
        return values;
    }
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        try {
            values.push_back(std::stod(cell));
        } catch (const std::exception&) {
            die(flag + ": malformed number '" + cell + "'");
        }
    }
    if (values.empty()) die(flag + ": empty list");
    return values;
}

std::vector<std::string> parse_name_list(const std::string& text) {
    std::vector<std::string> names;
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) names.push_back(cell);
    return names;
}

class ConfigHandle {
public:
    explicit ConfigHandle(opm_config* cfg) : cfg_(cfg) {}
    ~ConfigHandle() { opm_config_destroy(cfg_); }
    ConfigHandle(const ConfigHandle&) = delete;
    ConfigHandle& operator=(const ConfigHandle&) = delete;
    opm_config* get() const { return cfg_; }

private:
    opm_config* cfg_;
};

// defaults < config file < flag overrides
opm_config* resolve_config(const CommonOpts& common, const json& overrides) {
    opm_config* cfg = nullptr;
    check(opm_config_create_default(&cfg), "config");
    if (!common.config_path.empty()) {
        const std::string text = slurp(common.config_path);
        opm_config* next = nullptr;
        check(opm_config_override(cfg, text.c_str(), &next), common.config_path);
        opm_config_destroy(cfg);
        cfg = next;
    }
    json merged = overrides;
    if (common.seed) merged["seed"] = *common.seed;
    if (common.jobs) merged["jobs"] = *common.jobs;
    if (!merged.empty()) {
        opm_config* next = nullptr;
        check(opm_config_override(cfg, merged.dump().c_str(), &next), "flags");
        opm_config_destroy(cfg);
        cfg = next;
    }
    return cfg;
}

std::string config_json(const ConfigHandle& cfg) {
    char* text = nullptr;
    check(opm_config_to_json(cfg.get(), &text), "config");
    std::string out(text);
    opm_string_free(text);
    return out;
}

std::string out_path(const CommonOpts& common, const std::string& name) {
    fs::create_directories(common.out_dir);
    return (fs::path(common.out_dir) / name).string();
}

std::string derive_meta_path(const std::string& csv_path) {
    const fs::path p(csv_path);
    if (p.extension() == ".csv") {
        fs::path q = p;
        q.replace_extension(".meta.json");
        return q.string();
    }
    return csv_path + ".meta.json";
}

struct FlagValues {
    // simulation / dataset
    std::string osnr;
    std::string formats;
    std::string channel_taps;
    std::uint64_t bins = 0;
    int frames_per_point = 0;
    std::uint64_t n_symbols = 0;
    int sps = 0;
    double symbol_rate = 0;
    double ref_bandwidth = 0;
    int dac_bits = 0;
    bool raw_counts = false;
    bool stratified = false;
    // equalizer
    int eq_taps = 0;
    double eq_step = 0;
    int eq_passes = 0;
    // network / training
    std::string stl;
    double loss_ratio = 0;
    double w_mfi = 0;
    double w_osnr = 0;
    std::uint64_t shared_neurons = 0;
    std::uint64_t branch_hidden = 0;
    double lr = 0;
    std::uint64_t batch_size = 0;
    std::uint64_t epochs = 0;
    std::uint64_t patience = 0;
    // sweep
    std::string sweep_values;
    int n_seeds = 0;
};

void add_common_flags(CLI::App* cmd, CommonOpts& common) {
    cmd->add_option("--config", common.config_path, "JSON config file (flags override it)");
    cmd->add_option("--seed", common.seed, "master seed; every random stream derives from it")
        ->default_str("1");
    cmd->add_option("--jobs", common.jobs, "worker thread cap (0 = hardware concurrency)")
        ->default_str("0");
    cmd->add_option("--out", common.out_dir, "output directory")->capture_default_str();
    cmd->add_flag("--force", common.force, "overwrite existing output files");
}

void add_pipeline_flags(CLI::App* cmd, FlagValues& fl) {
    cmd->add_option("--bins", fl.bins, "histogram bin count (network input size)")
        ->default_str("100");
    cmd->add_option("--frames-per-point", fl.frames_per_point,
                    "frames per (format, OSNR) grid point")
        ->default_str("10");
    cmd->add_option("--formats", fl.formats, "comma list of formats (OOK,PAM4,PAM8)")
        ->default_str("OOK,PAM4,PAM8");
    cmd->add_option("--osnr", fl.osnr, "OSNR grid: LO:HI[:STEP] or comma list, dB")
        ->default_str("32:45:1");
    cmd->add_option("--n-symbols", fl.n_symbols, "symbols per frame")->default_str("8191");
    cmd->add_option("--sps", fl.sps, "generator samples per symbol")->default_str("5");
    cmd->add_option("--symbol-rate", fl.symbol_rate, "symbol rate, Hz")->default_str("2e10");
    cmd->add_option("--ref-bandwidth", fl.ref_bandwidth, "OSNR reference bandwidth, Hz")
        ->default_str("1.25e10");
    cmd->add_option("--channel-taps", fl.channel_taps, "comma list of channel FIR taps")
        ->default_str("0.12,1,0.12");
    cmd->add_option("--dac-bits", fl.dac_bits, "DAC quantization bits (0 = off)")
        ->default_str("0");
    cmd->add_flag("--raw-counts", fl.raw_counts, "store raw occurrences instead of frequencies");
    cmd->add_flag("--stratified", fl.stratified, "stratify the split per format class");
    cmd->add_option("--eq-taps", fl.eq_taps, "equalizer tap count (odd)")->default_str("11");
    cmd->add_option("--eq-step", fl.eq_step, "equalizer step size")->default_str("1e-3");
    cmd->add_option("--eq-passes", fl.eq_passes, "equalizer passes over each frame")
        ->default_str("3");
}

void add_train_flags(CLI::App* cmd, FlagValues& fl) {
    cmd->add_option("--stl", fl.stl, "train a single-task variant: mfi or osnr")
        ->default_str("none");
    cmd->add_option("--loss-ratio", fl.loss_ratio, "OSNR:MFI loss weight ratio (sets weights 1:R)")
        ->default_str("5");
    cmd->add_option("--w-mfi", fl.w_mfi, "MFI loss weight")->default_str("1");
    cmd->add_option("--w-osnr", fl.w_osnr, "OSNR loss weight")->default_str("5");
    cmd->add_option("--shared-neurons", fl.shared_neurons,
                    "shared hidden layer width (0 = half the bins)")
        ->default_str("60");
    cmd->add_option("--branch-hidden", fl.branch_hidden,
                    "task branch hidden width (0 = half the shared width)")
        ->default_str("0");
    cmd->add_option("--lr", fl.lr, "Adam learning rate")->default_str("1e-3");
    cmd->add_option("--batch-size", fl.batch_size, "minibatch size")->default_str("32");
    cmd->add_option("--epochs", fl.epochs, "maximum training epochs")->default_str("2000");
    cmd->add_option("--patience", fl.patience, "early-stop patience, epochs")->default_str("100");
}

json overrides_from_flags(const CLI::App* cmd, const FlagValues& fl) {
    json j;
    auto passed = [&](const char* name) {
        const auto* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };

    if (passed("--bins")) j["dataset"]["bin_count"] = fl.bins;
    if (passed("--frames-per-point")) j["dataset"]["frames_per_point"] = fl.frames_per_point;
    if (passed("--formats")) j["dataset"]["formats"] = parse_name_list(fl.formats);
    if (passed("--osnr")) j["dataset"]["osnr_grid_db"] = parse_double_list(fl.osnr, "--osnr");
    if (passed("--raw-counts")) j["dataset"]["raw_counts"] = fl.raw_counts;
    if (passed("--stratified")) j["dataset"]["stratified_split"] = fl.stratified;
    if (passed("--n-symbols")) j["sim"]["n_symbols"] = fl.n_symbols;
    if (passed("--sps")) j["sim"]["gen_samples_per_symbol"] = fl.sps;
    if (passed("--symbol-rate")) j["sim"]["symbol_rate_hz"] = fl.symbol_rate;
    if (passed("--ref-bandwidth")) j["sim"]["ref_bandwidth_hz"] = fl.ref_bandwidth;
    if (passed("--channel-taps"))
        j["sim"]["channel_taps"] = parse_double_list(fl.channel_taps, "--channel-taps");
    if (passed("--dac-bits")) j["sim"]["dac_bits"] = fl.dac_bits;
    if (passed("--eq-taps")) j["equalizer"]["n_taps"] = fl.eq_taps;
    if (passed("--eq-step")) j["equalizer"]["step_size"] = fl.eq_step;
    if (passed("--eq-passes")) j["equalizer"]["n_passes"] = fl.eq_passes;

    if (passed("--stl")) j["network"]["stl"] = fl.stl;
    if (passed("--shared-neurons")) j["network"]["shared_neurons"] = fl.shared_neurons;
    if (passed("--branch-hidden")) j["network"]["branch_hidden"] = fl.branch_hidden;
    if (passed("--loss-ratio")) {
        j["loss_weights"]["w_mfi"] = 1.0;
        j["loss_weights"]["w_osnr"] = fl.loss_ratio;
    }
    if (passed("--w-mfi")) j["loss_weights"]["w_mfi"] = fl.w_mfi;
    if (passed("--w-osnr")) j["loss_weights"]["w_osnr"] = fl.w_osnr;
    if (passed("--lr")) j["train"]["learning_rate"] = fl.lr;
    if (passed("--batch-size")) j["train"]["batch_size"] = fl.batch_size;
    if (passed("--epochs")) j["train"]["max_epochs"] = fl.epochs;
    if (passed("--patience")) j["train"]["early_stop_patience"] = fl.patience;

    if (passed("--values")) j["sweep"]["values"] = parse_double_list(fl.sweep_values, "--values");
    if (passed("--n-seeds")) j["sweep"]["n_seeds"] = fl.n_seeds;
    return j;
}

int run_simulate(const CommonOpts& common, const CLI::App* cmd, const FlagValues& fl) {
    ConfigHandle cfg(resolve_config(common, overrides_from_flags(cmd, fl)));

    opm_dataset* ds = nullptr;
    check(opm_dataset_build(cfg.get(), &ds), "simulate");

    const std::string csv = out_path(common, "dataset.csv");
    const std::string meta = out_path(common, "dataset.meta.json");
    if (fs::exists(csv) && !common.force) die(csv + " already exists (use --force to overwrite)");
    if (fs::exists(meta) && !common.force)
        die(meta + " already exists (use --force to overwrite)");
    check(opm_dataset_save(ds, csv.c_str(), meta.c_str()), "simulate");

    uint32_t total = 0, train = 0, val = 0, test = 0;
    check(opm_dataset_counts(ds, &total, &train, &val, &test), "simulate");
    opm_dataset_destroy(ds);

    std::cout << total << " examples (" << train << " train / " << val << " val / " << test
              << " test)\n";
    std::cout << "wrote " << csv << " and " << meta << "\n";
    return 0;
}

int run_train(const CommonOpts& common, const CLI::App* cmd, const FlagValues& fl,
              const std::string& dataset_path, const std::string& meta_path) {
    ConfigHandle cfg(resolve_config(common, overrides_from_flags(cmd, fl)));
    const std::string meta = meta_path.empty() ? derive_meta_path(dataset_path) : meta_path;

    opm_dataset* ds = nullptr;
    check(opm_dataset_load(dataset_path.c_str(), meta.c_str(), &ds), dataset_path);

    opm_model* model = nullptr;
    char* history = nullptr;
    uint32_t best_epoch = 0;
    double best_val = 0.0;
    check(opm_train(cfg.get(), ds, &model, &history, &best_epoch, &best_val), "train");
    opm_dataset_destroy(ds);

    const std::string model_path = out_path(common, "model.json");
    const std::string history_path = out_path(common, "history.csv");
    if (fs::exists(model_path) && !common.force)
        die(model_path + " already exists (use --force to overwrite)");
    write_output(history_path, history, common.force);
    opm_string_free(history);
    check(opm_model_save(model, model_path.c_str()), "train");
    opm_model_destroy(model);

    std::cout << "best epoch " << best_epoch << " (val_loss " << best_val << ")\n";
    std::cout << "wrote " << model_path << " and " << history_path << "\n";
    return 0;
}

int run_evaluate(const CommonOpts& common, const std::string& model_path,
                 const std::string& dataset_path, const std::string& meta_path,
                 const std::string& partition) {
    const std::string meta = meta_path.empty() ? derive_meta_path(dataset_path) : meta_path;

    opm_partition part = OPM_PARTITION_TEST;
    if (partition == "train")
        part = OPM_PARTITION_TRAIN;
    else if (partition == "val")
        part = OPM_PARTITION_VAL;
    else if (partition != "test")
        die("--partition must be train, val or test");

    opm_model* model = nullptr;
    check(opm_model_load(model_path.c_str(), &model), model_path);
    opm_dataset* ds = nullptr;
    check(opm_dataset_load(dataset_path.c_str(), meta.c_str(), &ds), dataset_path);

    char* metrics = nullptr;
    char* scatter = nullptr;
    check(opm_evaluate(model, ds, part, &metrics, &scatter), "evaluate");
    opm_model_destroy(model);
    opm_dataset_destroy(ds);

    const std::string metrics_path = out_path(common, "metrics.json");
    const std::string scatter_path = out_path(common, "scatter.csv");
    write_output(metrics_path, metrics, common.force);
    write_output(scatter_path, scatter, common.force);

    const json m = json::parse(metrics);
    std::cout << "accuracy " << m.at("mfi_accuracy").dump() << ", osnr_rmse_db "
              << m.at("osnr_rmse_db").dump() << " over " << m.at("n_examples").get<int>()
              << " examples\n";
    std::cout << "wrote " << metrics_path << " and " << scatter_path << "\n";
    opm_string_free(metrics);
    opm_string_free(scatter);
    return 0;
}

int run_sweep(const CommonOpts& common, const CLI::App* cmd, const FlagValues& fl,
              const std::string& kind_name) {
    opm_sweep_kind kind = OPM_SWEEP_BINS;
    if (kind_name == "bins")
        kind = OPM_SWEEP_BINS;
    else if (kind_name == "shared")
        kind = OPM_SWEEP_SHARED;
    else if (kind_name == "loss-ratio")
        kind = OPM_SWEEP_LOSS_RATIO;
    else
        die("sweep kind must be bins, shared or loss-ratio");

    json overrides = overrides_from_flags(cmd, fl);
    overrides["sweep"]["kind"] = kind_name;
    ConfigHandle cfg(resolve_config(common, overrides));

    char* table = nullptr;
    double best_value = 0.0, best_rmse = 0.0;
    check(opm_sweep(cfg.get(), kind, &table, &best_value, &best_rmse), "sweep");

    const std::string csv_path = out_path(common, "sweep_" + kind_name + ".csv");
    const std::string meta_path = out_path(common, "sweep_" + kind_name + ".meta.json");
    write_output(csv_path, table, common.force);
    write_output(meta_path, config_json(cfg) + "\n", common.force);
    opm_string_free(table);

    std::cout << "optimal value " << best_value << " (rmse_avg " << best_rmse << ")\n";
    std::cout << "wrote " << csv_path << " and " << meta_path << "\n";
    return 0;
}

int run_compare(const CommonOpts& common, const CLI::App* cmd, const FlagValues& fl) {
    ConfigHandle cfg(resolve_config(common, overrides_from_flags(cmd, fl)));
    char* table = nullptr;
    check(opm_compare_networks(cfg.get(), &table), "compare");

    const std::string csv_path = out_path(common, "compare.csv");
    const std::string meta_path = out_path(common, "compare.meta.json");
    write_output(csv_path, table, common.force);
    write_output(meta_path, config_json(cfg) + "\n", common.force);
    opm_string_free(table);

    std::cout << "wrote " << csv_path << " and " << meta_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"optical performance monitoring workbench (simulate, train, evaluate, sweep)"};
    app.require_subcommand(1);

    CommonOpts common;
    FlagValues fl;
    std::string dataset_path, meta_path, model_path, partition = "test", sweep_kind;

    auto* sim = app.add_subcommand("simulate", "generate a labeled amplitude-histogram dataset");
    add_common_flags(sim, common);
    add_pipeline_flags(sim, fl);

    auto* train = app.add_subcommand("train", "train a network on a saved dataset");
    add_common_flags(train, common);
    add_train_flags(train, fl);
    train->add_option("--dataset", dataset_path, "dataset CSV path")->required();
    train->add_option("--meta", meta_path, "dataset sidecar path (default: <dataset>.meta.json)");

    auto* eval = app.add_subcommand("evaluate", "evaluate a saved model on a dataset partition");
    add_common_flags(eval, common);
    eval->add_option("--model", model_path, "model JSON path")->required();
    eval->add_option("--dataset", dataset_path, "dataset CSV path")->required();
    eval->add_option("--meta", meta_path, "dataset sidecar path (default: <dataset>.meta.json)");
    eval->add_option("--partition", partition, "partition to evaluate")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "run a hyperparameter sweep and emit its table");
    add_common_flags(sweep, common);
    add_pipeline_flags(sweep, fl);
    add_train_flags(sweep, fl);
    sweep->add_option("kind", sweep_kind, "bins | shared | loss-ratio")->required();
    sweep->add_option("--values", fl.sweep_values, "comma list of swept values");
    sweep->add_option("--n-seeds", fl.n_seeds, "seeds per sweep cell")->default_str("8");

    auto* compare = app.add_subcommand("compare", "multi-seed MTL vs STL comparison table");
    add_common_flags(compare, common);
    add_pipeline_flags(compare, fl);
    add_train_flags(compare, fl);
    compare->add_option("--n-seeds", fl.n_seeds, "seeds per network")->default_str("8");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) return run_simulate(common, sim, fl);
    if (train->parsed()) return run_train(common, train, fl, dataset_path, meta_path);
    if (eval->parsed()) return run_evaluate(common, model_path, dataset_path, meta_path, partition);
    if (sweep->parsed()) return run_sweep(common, sweep, fl, sweep_kind);
    if (compare->parsed()) return run_compare(common, compare, fl);
    return 1;
}
