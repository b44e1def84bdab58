#include "opm/features.hpp"

#include "opm/errors.hpp"
#include "opm/parallel.hpp"
#include "opm/rng.hpp"
#include "opm/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace opm::features {

namespace {

constexpr std::uint64_t kTagSplit = 0x5b17;

using nlohmann::json;

} // namespace

std::uint64_t AmplitudeHistogram::total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

const char* partition_name(Partition p) {
    switch (p) {
        case Partition::Train: return "train";
        case Partition::Val: return "val";
        case Partition::Test: return "test";
    }
    throw InvalidArgumentError("unknown partition");
}

Partition partition_from_name(const std::string& name) {
    if (name == "train") return Partition::Train;
    if (name == "val") return Partition::Val;
    if (name == "test") return Partition::Test;
    throw ParseError("unknown partition tag: '" + name + "'");
}

DatasetSpec DatasetSpec::defaults() {
    DatasetSpec spec;
    for (int db = 32; db <= 45; ++db) spec.osnr_grid_db.push_back(static_cast<double>(db));
    spec.formats = {sigsim::ModulationFormat::OOK, sigsim::ModulationFormat::PAM4,
                    sigsim::ModulationFormat::PAM8};
    return spec;
}

void DatasetSpec::validate() const {
    if (osnr_grid_db.empty()) throw ConfigError("dataset.osnr_grid_db must be nonempty");
    for (std::size_t i = 1; i < osnr_grid_db.size(); ++i)
        if (!(osnr_grid_db[i] > osnr_grid_db[i - 1]))
            throw ConfigError("dataset.osnr_grid_db must be strictly increasing");
    for (double v : osnr_grid_db)
        if (!std::isfinite(v)) throw ConfigError("dataset.osnr_grid_db must be finite");
    if (formats.empty()) throw ConfigError("dataset.formats must be nonempty");
    if (frames_per_point < 1) throw ConfigError("dataset.frames_per_point must be >= 1");
    if (bin_count < 2) throw ConfigError("dataset.bin_count must be >= 2");
    if (!(test_frac > 0.0) || !(test_frac < 1.0))
        throw ConfigError("dataset.test_frac must be in (0, 1)");
    if (!(val_frac_of_train >= 0.0) || !(val_frac_of_train < 1.0))
        throw ConfigError("dataset.val_frac_of_train must be in [0, 1)");
}

std::size_t Dataset::count(Partition p) const {
    std::size_t n = 0;
    for (const auto& ex : examples)
        if (ex.partition == p) ++n;
    return n;
}

std::vector<const LabeledExample*> Dataset::partition(Partition p) const {
    std::vector<const LabeledExample*> out;
    for (const auto& ex : examples)
        if (ex.partition == p) out.push_back(&ex);
    return out;
}

AmplitudeHistogram compute_histogram(const std::vector<double>& amplitudes, std::size_t bin_count) {
    if (bin_count < 2) throw InvalidArgumentError("compute_histogram: bin_count must be >= 2");
    AmplitudeHistogram h;
    h.bin_count = bin_count;
    h.counts.assign(bin_count, 0);
    const double b = static_cast<double>(bin_count);
    for (double a : amplitudes) {
        if (!(a >= 0.0 && a <= 1.0))
            throw InvalidArgumentError("compute_histogram: amplitude outside [0, 1]");
        std::size_t idx = static_cast<std::size_t>(a * b);
        if (idx >= bin_count) idx = bin_count - 1; // closed last bin
        ++h.counts[idx];
    }
    return h;
}

std::pair<std::array<double, 3>, double> encode_targets(sigsim::ModulationFormat fmt,
                                                        double osnr_db,
                                                        const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidArgumentError("encode_targets: empty OSNR grid");
    const double lo = grid.front(), hi = grid.back();
    if (osnr_db < lo || osnr_db > hi)
        throw OutOfGridError("encode_targets: OSNR " + textio::fmt17(osnr_db) +
                             " dB outside grid [" + textio::fmt17(lo) + ", " + textio::fmt17(hi) +
                             "]");
    std::array<double, 3> onehot{0.0, 0.0, 0.0};
    onehot[static_cast<std::size_t>(fmt)] = 1.0;
    const double span = hi - lo;
    const double norm = span > 0.0 ? (osnr_db - lo) / span : 0.0;
    return {onehot, norm};
}

double decode_osnr(double osnr_norm, double grid_min, double grid_max) {
    return grid_min + osnr_norm * (grid_max - grid_min);
}

FrameCache build_frames(const DatasetSpec& spec, const sigsim::SimConfig& sim,
                        const dsp::EqualizerConfig& eq, unsigned jobs) {
    spec.validate();
    sim.validate();
    eq.validate();

    FrameCache cache;
    cache.spec = spec;
    const std::size_t n_formats = spec.formats.size();
    const std::size_t n_osnr = spec.osnr_grid_db.size();
    const std::size_t n_frames = static_cast<std::size_t>(spec.frames_per_point);
    cache.frames.resize(n_formats * n_osnr * n_frames);

    parallel_for(cache.frames.size(), jobs, [&](std::size_t i) {
        const std::size_t f = i / (n_osnr * n_frames);
        const std::size_t o = (i / n_frames) % n_osnr;
        const std::size_t r = i % n_frames;
        const auto fmt = spec.formats[f];
        const double osnr = spec.osnr_grid_db[o];
        try {
            const auto wave = sigsim::simulate_frame(sim, fmt, static_cast<int>(o), osnr,
                                                     static_cast<int>(r));
            const auto eqd = dsp::process_frame(wave, eq);
            cache.frames[i] = ProcessedFrame{eqd.amplitudes, fmt, osnr, static_cast<int>(r)};
        } catch (const Error& e) {
            throw Error(e.code(), std::string(e.what()) + " [format=" + sigsim::format_name(fmt) +
                                      " osnr_db=" + textio::fmt17(osnr) +
                                      " frame=" + std::to_string(r) + "]");
        }
    });
    return cache;
}

Dataset bin_frames(const FrameCache& cache, std::size_t bin_count) {
    Dataset ds;
    ds.spec = cache.spec;
    ds.spec.bin_count = bin_count;
    ds.examples.reserve(cache.frames.size());
    for (const auto& fr : cache.frames) {
        const auto hist = compute_histogram(fr.amplitudes, bin_count);
        LabeledExample ex;
        ex.features.resize(bin_count);
        const double total = static_cast<double>(hist.total());
        for (std::size_t b = 0; b < bin_count; ++b) {
            const double c = static_cast<double>(hist.counts[b]);
            ex.features[b] = cache.spec.raw_counts ? c : c / total;
        }
        auto [onehot, norm] = encode_targets(fr.format, fr.osnr_db, cache.spec.osnr_grid_db);
        ex.format_onehot = onehot;
        ex.osnr_norm = norm;
        ex.osnr_db = fr.osnr_db;
        ex.format = fr.format;
        ex.frame_index = fr.frame_index;
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

Dataset bin_and_split(const FrameCache& cache, std::size_t bin_count) {
    Dataset ds = bin_frames(cache, bin_count);
    split_dataset(ds, derive_seed(cache.spec.seed, kTagSplit));
    return ds;
}

Dataset build_dataset(const DatasetSpec& spec, const sigsim::SimConfig& sim,
                      const dsp::EqualizerConfig& eq, unsigned jobs) {
    return bin_and_split(build_frames(spec, sim, eq, jobs), spec.bin_count);
}

namespace {

void assign_partitions(std::vector<LabeledExample*>& group, double test_frac,
                       double val_frac_of_train, Rng& rng) {
    const std::size_t n = group.size();
    // Seeded Fisher-Yates permutation.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(order[i - 1], order[j]);
    }
    const std::size_t n_test = static_cast<std::size_t>(std::floor(test_frac * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(val_frac_of_train * static_cast<double>(n - n_test)));
    for (std::size_t i = 0; i < n; ++i) {
        Partition p = Partition::Train;
        if (i < n_test)
            p = Partition::Test;
        else if (i < n_test + n_val)
            p = Partition::Val;
        group[order[i]]->partition = p;
    }
}

} // namespace

void split_dataset(Dataset& ds, std::uint64_t seed) {
    Rng rng(seed);
    if (!ds.spec.stratified_split) {
        std::vector<LabeledExample*> all;
        all.reserve(ds.examples.size());
        for (auto& ex : ds.examples) all.push_back(&ex);
        assign_partitions(all, ds.spec.test_frac, ds.spec.val_frac_of_train, rng);
        return;
    }
    // Per-format stratification: the floor rule applies within each class.
    for (auto fmt : ds.spec.formats) {
        std::vector<LabeledExample*> group;
        for (auto& ex : ds.examples)
            if (ex.format == fmt) group.push_back(&ex);
        assign_partitions(group, ds.spec.test_frac, ds.spec.val_frac_of_train, rng);
    }
}

void save_dataset(const Dataset& ds, const std::string& csv_path, const std::string& meta_path,
                  const std::string& pipeline_config_json) {
    std::ostringstream csv;
    csv << "format,osnr_db,frame_index,partition";
    for (std::size_t b = 0; b < ds.spec.bin_count; ++b) csv << ",bin_" << b;
    csv << "\n";
    for (const auto& ex : ds.examples) {
        csv << sigsim::format_name(ex.format) << ',' << textio::fmt17(ex.osnr_db) << ','
            << ex.frame_index << ',' << partition_name(ex.partition);
        for (double f : ex.features) csv << ',' << textio::fmt17(f);
        csv << "\n";
    }
    textio::write_file(csv_path, csv.str());

    json meta;
    meta["format_version"] = 1;
    meta["bin_count"] = ds.spec.bin_count;
    meta["osnr_grid_db"] = ds.spec.osnr_grid_db;
    json fmts = json::array();
    for (auto f : ds.spec.formats) fmts.push_back(sigsim::format_name(f));
    meta["formats"] = fmts;
    meta["frames_per_point"] = ds.spec.frames_per_point;
    meta["raw_counts"] = ds.spec.raw_counts;
    meta["stratified_split"] = ds.spec.stratified_split;
    meta["seeds"] = {{"master", ds.spec.seed}};
    meta["pipeline_config"] =
        pipeline_config_json.empty() ? json::object() : json::parse(pipeline_config_json);
    textio::write_file(meta_path, meta.dump(2) + "\n");
}

Dataset load_dataset(const std::string& csv_path, const std::string& meta_path) {
    json meta;
    try {
        meta = json::parse(textio::read_file(meta_path));
    } catch (const json::exception& e) {
        throw ParseError(meta_path + ": invalid JSON sidecar: " + e.what());
    }

    Dataset ds;
    try {
        ds.spec.bin_count = meta.at("bin_count").get<std::size_t>();
        ds.spec.osnr_grid_db = meta.at("osnr_grid_db").get<std::vector<double>>();
        for (const auto& name : meta.at("formats"))
            ds.spec.formats.push_back(sigsim::format_from_name(name.get<std::string>()));
        ds.spec.frames_per_point = meta.at("frames_per_point").get<int>();
        ds.spec.raw_counts = meta.at("raw_counts").get<bool>();
        ds.spec.stratified_split = meta.at("stratified_split").get<bool>();
        ds.spec.seed = meta.at("seeds").at("master").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ParseError(meta_path + ": missing or malformed sidecar field: " + e.what());
    }

    const std::string text = textio::read_file(csv_path);
    if (text.empty()) throw ParseError(csv_path + ": dataset CSV is empty");

    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(csv_path + ": dataset CSV is empty");
    const auto header = textio::split_csv_line(line);
    if (header.size() < 5 || header[0] != "format" || header[1] != "osnr_db" ||
        header[2] != "frame_index" || header[3] != "partition")
        throw ParseError(csv_path + ": unexpected CSV header");
    const std::size_t bins_in_header = header.size() - 4;
    if (bins_in_header != ds.spec.bin_count)
        throw ParseError(csv_path + ": header has " + std::to_string(bins_in_header) +
                         " bins but sidecar declares " + std::to_string(ds.spec.bin_count));

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = textio::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError(csv_path + ": line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " fields, expected " +
                             std::to_string(header.size()));
        LabeledExample ex;
        try {
            ex.format = sigsim::format_from_name(cells[0]);
            ex.osnr_db = std::stod(cells[1]);
            ex.frame_index = std::stoi(cells[2]);
            ex.partition = partition_from_name(cells[3]);
            ex.features.resize(bins_in_header);
            for (std::size_t b = 0; b < bins_in_header; ++b) ex.features[b] = std::stod(cells[4 + b]);
        } catch (const Error&) {
            throw ParseError(csv_path + ": line " + std::to_string(line_no) +
                             ": unrecognized format or partition tag");
        } catch (const std::exception&) {
            throw ParseError(csv_path + ": line " + std::to_string(line_no) +
                             ": malformed numeric field");
        }
        auto [onehot, norm] = encode_targets(ex.format, ex.osnr_db, ds.spec.osnr_grid_db);
        ex.format_onehot = onehot;
        ex.osnr_norm = norm;
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) throw ParseError(csv_path + ": dataset CSV has no data rows");
    return ds;
}

std::string dataset_pipeline_config(const std::string& meta_path) {
    json meta;
    try {
        meta = json::parse(textio::read_file(meta_path));
        return meta.at("pipeline_config").dump();
    } catch (const json::exception& e) {
        throw ParseError(meta_path + ": invalid JSON sidecar: " + e.what());
    }
}

} // namespace opm::features
