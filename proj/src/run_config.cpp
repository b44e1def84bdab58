#include "opm/run_config.hpp"

#include "opm/errors.hpp"
#include "opm/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace opm::config {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& scope) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.contains(it.key()))
            throw ConfigError("unknown config key '" + scope + it.key() + "'");
}

template <typename T>
void take(const json& obj, const char* key, T& into) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

} // namespace

const char* sweep_kind_name(SweepKind k) {
    switch (k) {
        case SweepKind::Bins: return "bins";
        case SweepKind::SharedNeurons: return "shared";
        case SweepKind::LossRatio: return "loss-ratio";
    }
    throw InvalidArgumentError("unknown sweep kind");
}

SweepKind sweep_kind_from_name(const std::string& name) {
    if (name == "bins") return SweepKind::Bins;
    if (name == "shared") return SweepKind::SharedNeurons;
    if (name == "loss-ratio") return SweepKind::LossRatio;
    throw ConfigError("unknown sweep kind '" + name + "' (expected bins, shared or loss-ratio)");
}

std::vector<double> SweepConfig::resolved_values() const {
    if (!values.empty()) return values;
    switch (kind) {
        case SweepKind::Bins: return {50, 80, 100, 150, 200, 250, 300};
        case SweepKind::SharedNeurons: return {20, 40, 60, 80, 100, 110, 120, 140};
        case SweepKind::LossRatio: return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    }
    throw InvalidArgumentError("unknown sweep kind");
}

void SweepConfig::validate() const {
    const auto vals = resolved_values();
    if (vals.empty()) throw ConfigError("sweep.values must be nonempty");
    for (std::size_t i = 1; i < vals.size(); ++i)
        if (!(vals[i] > vals[i - 1]))
            throw ConfigError("sweep.values must be strictly increasing");
    for (double v : vals) {
        if (!(v > 0.0)) throw ConfigError("sweep.values must be positive");
        if (kind != SweepKind::LossRatio && v != std::floor(v))
            throw ConfigError("sweep.values must be integers for this sweep kind");
    }
    if (n_seeds < 1) throw ConfigError("sweep.n_seeds must be >= 1");
}

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    cfg.dataset = features::DatasetSpec::defaults();
    cfg.dataset.seed = cfg.seed;
    cfg.sim.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    return cfg;
}

void RunConfig::validate() const {
    sim.validate();
    equalizer.validate();
    dataset.validate();
    train.validate();
    loss_weights.validate();
    sweep.validate();
    topology().validate();
}

mtl::MtlTopology RunConfig::topology() const {
    return topology_for(dataset.bin_count, network.shared_neurons);
}

mtl::MtlTopology RunConfig::topology_for(std::size_t bins, std::size_t shared_neurons) const {
    auto topo = mtl::MtlTopology::standard(bins, shared_neurons, network.branch_hidden);
    switch (network.stl) {
        case StlMode::None: return topo;
        case StlMode::Mfi: return mtl::make_stl(topo, mtl::Task::MFI);
        case StlMode::Osnr: return mtl::make_stl(topo, mtl::Task::OSNR);
    }
    throw InvalidArgumentError("unknown STL mode");
}

RunConfig from_json(const std::string& text, const RunConfig& base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    RunConfig cfg = base;
    check_keys(j,
               {"seed", "jobs", "sim", "equalizer", "dataset", "network", "train", "loss_weights",
                "sweep"},
               "");
    take(j, "seed", cfg.seed);
    take(j, "jobs", cfg.jobs);

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        check_keys(s,
                   {"symbol_rate_hz", "n_symbols", "gen_samples_per_symbol", "channel_taps",
                    "ref_bandwidth_hz", "dac_bits"},
                   "sim.");
        take(s, "symbol_rate_hz", cfg.sim.symbol_rate_hz);
        take(s, "n_symbols", cfg.sim.n_symbols);
        take(s, "gen_samples_per_symbol", cfg.sim.gen_samples_per_symbol);
        take(s, "channel_taps", cfg.sim.channel_taps);
        take(s, "ref_bandwidth_hz", cfg.sim.ref_bandwidth_hz);
        take(s, "dac_bits", cfg.sim.dac_bits);
    }
    if (j.contains("equalizer")) {
        const json& e = j.at("equalizer");
        check_keys(e, {"n_taps", "step_size", "n_passes"}, "equalizer.");
        take(e, "n_taps", cfg.equalizer.n_taps);
        take(e, "step_size", cfg.equalizer.step_size);
        take(e, "n_passes", cfg.equalizer.n_passes);
    }
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        check_keys(d,
                   {"osnr_grid_db", "formats", "frames_per_point", "bin_count", "test_frac",
                    "val_frac_of_train", "raw_counts", "stratified_split"},
                   "dataset.");
        take(d, "osnr_grid_db", cfg.dataset.osnr_grid_db);
        if (d.contains("formats")) {
            cfg.dataset.formats.clear();
            for (const auto& name : d.at("formats"))
                cfg.dataset.formats.push_back(sigsim::format_from_name(name.get<std::string>()));
        }
        take(d, "frames_per_point", cfg.dataset.frames_per_point);
        take(d, "bin_count", cfg.dataset.bin_count);
        take(d, "test_frac", cfg.dataset.test_frac);
        take(d, "val_frac_of_train", cfg.dataset.val_frac_of_train);
        take(d, "raw_counts", cfg.dataset.raw_counts);
        take(d, "stratified_split", cfg.dataset.stratified_split);
    }
    if (j.contains("network")) {
        const json& n = j.at("network");
        check_keys(n, {"shared_neurons", "branch_hidden", "stl"}, "network.");
        take(n, "shared_neurons", cfg.network.shared_neurons);
        take(n, "branch_hidden", cfg.network.branch_hidden);
        if (n.contains("stl")) {
            const std::string mode = n.at("stl").get<std::string>();
            if (mode == "none")
                cfg.network.stl = StlMode::None;
            else if (mode == "mfi")
                cfg.network.stl = StlMode::Mfi;
            else if (mode == "osnr")
                cfg.network.stl = StlMode::Osnr;
            else
                throw ConfigError("network.stl must be none, mfi or osnr");
        }
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t,
                   {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs",
                    "early_stop_patience"},
                   "train.");
        take(t, "learning_rate", cfg.train.learning_rate);
        take(t, "beta1", cfg.train.beta1);
        take(t, "beta2", cfg.train.beta2);
        take(t, "epsilon", cfg.train.epsilon);
        take(t, "batch_size", cfg.train.batch_size);
        take(t, "max_epochs", cfg.train.max_epochs);
        take(t, "early_stop_patience", cfg.train.early_stop_patience);
    }
    if (j.contains("loss_weights")) {
        const json& w = j.at("loss_weights");
        check_keys(w, {"w_mfi", "w_osnr"}, "loss_weights.");
        take(w, "w_mfi", cfg.loss_weights.w_mfi);
        take(w, "w_osnr", cfg.loss_weights.w_osnr);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        check_keys(s, {"kind", "values", "n_seeds"}, "sweep.");
        if (s.contains("kind")) cfg.sweep.kind = sweep_kind_from_name(s.at("kind").get<std::string>());
        take(s, "values", cfg.sweep.values);
        take(s, "n_seeds", cfg.sweep.n_seeds);
    }

    // One master seed drives every stream.
    cfg.sim.seed = cfg.seed;
    cfg.dataset.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    return cfg;
}

std::string to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["sim"] = {{"symbol_rate_hz", cfg.sim.symbol_rate_hz},
                {"n_symbols", cfg.sim.n_symbols},
                {"gen_samples_per_symbol", cfg.sim.gen_samples_per_symbol},
                {"channel_taps", cfg.sim.channel_taps},
                {"ref_bandwidth_hz", cfg.sim.ref_bandwidth_hz},
                {"dac_bits", cfg.sim.dac_bits}};
    j["equalizer"] = {{"n_taps", cfg.equalizer.n_taps},
                      {"step_size", cfg.equalizer.step_size},
                      {"n_passes", cfg.equalizer.n_passes}};
    json fmts = json::array();
    for (auto f : cfg.dataset.formats) fmts.push_back(sigsim::format_name(f));
    j["dataset"] = {{"osnr_grid_db", cfg.dataset.osnr_grid_db},
                    {"formats", fmts},
                    {"frames_per_point", cfg.dataset.frames_per_point},
                    {"bin_count", cfg.dataset.bin_count},
                    {"test_frac", cfg.dataset.test_frac},
                    {"val_frac_of_train", cfg.dataset.val_frac_of_train},
                    {"raw_counts", cfg.dataset.raw_counts},
                    {"stratified_split", cfg.dataset.stratified_split}};
    const char* stl_name = cfg.network.stl == StlMode::None ? "none"
                           : cfg.network.stl == StlMode::Mfi ? "mfi"
                                                             : "osnr";
    j["network"] = {{"shared_neurons", cfg.network.shared_neurons},
                    {"branch_hidden", cfg.network.branch_hidden},
                    {"stl", stl_name}};
    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"epsilon", cfg.train.epsilon},
                  {"batch_size", cfg.train.batch_size},
                  {"max_epochs", cfg.train.max_epochs},
                  {"early_stop_patience", cfg.train.early_stop_patience}};
    j["loss_weights"] = {{"w_mfi", cfg.loss_weights.w_mfi}, {"w_osnr", cfg.loss_weights.w_osnr}};
    j["sweep"] = {{"kind", sweep_kind_name(cfg.sweep.kind)},
                  {"values", cfg.sweep.resolved_values()},
                  {"n_seeds", cfg.sweep.n_seeds}};
    return j.dump(2);
}

} // namespace opm::config
