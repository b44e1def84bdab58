#include "opm/mtlnet.hpp"

#include "opm/errors.hpp"
#include "opm/rng.hpp"
#include "opm/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace opm::mtl {

namespace {

using nlohmann::json;

constexpr std::uint64_t kTagInit = 0x11a7;
constexpr std::uint64_t kTagShuffle = 0x5f1e;

std::size_t round_half(std::size_t n) { return (n + 1) / 2; }

// z = W a + b
void affine(const Layer& layer, std::span<const double> a, std::vector<double>& z) {
    z.assign(layer.out, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
        const double* row = layer.weights.data() + r * layer.in;
        double acc = layer.biases[r];
        for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * a[c];
        z[r] = acc;
    }
}

void apply_activation(Activation act, std::vector<double>& z) {
    switch (act) {
        case Activation::Tanh:
            for (double& v : z) v = std::tanh(v);
            return;
        case Activation::Linear:
            return;
        case Activation::Softmax: {
            double hi = z[0];
            for (double v : z) hi = std::max(hi, v);
            double sum = 0.0;
            for (double& v : z) {
                v = std::exp(v - hi);
                sum += v;
            }
            for (double& v : z) v /= sum;
            return;
        }
    }
}

// Runs a layer stack; if `cache` is given, records each post-activation.
std::vector<double> run_stack(const std::vector<Layer>& stack, std::vector<double> a,
                              std::vector<std::vector<double>>* cache) {
    std::vector<double> z;
    for (const auto& layer : stack) {
        if (a.size() != layer.in) throw InvalidArgumentError("forward: layer input size mismatch");
        affine(layer, a, z);
        apply_activation(layer.activation, z);
        a = z;
        if (cache) cache->push_back(a);
    }
    return a;
}

Layer zero_like(const Layer& layer) {
    Layer z;
    z.in = layer.in;
    z.out = layer.out;
    z.activation = layer.activation;
    z.weights.assign(layer.weights.size(), 0.0);
    z.biases.assign(layer.biases.size(), 0.0);
    return z;
}

std::vector<Layer> zeros_like(const std::vector<Layer>& stack) {
    std::vector<Layer> out;
    out.reserve(stack.size());
    for (const auto& l : stack) out.push_back(zero_like(l));
    return out;
}

// Backpropagates `delta` (dL/dz of the layer's pre-activation for tanh and
// linear; already converted for softmax) through one layer, accumulating
// weight gradients and returning dL/d(input activation).
std::vector<double> backprop_layer(const Layer& layer, std::span<const double> input,
                                   const std::vector<double>& delta, Layer& grad) {
    for (std::size_t r = 0; r < layer.out; ++r) {
        const double d = delta[r];
        double* grow = grad.weights.data() + r * layer.in;
        for (std::size_t c = 0; c < layer.in; ++c) grow[c] += d * input[c];
        grad.biases[r] += d;
    }
    std::vector<double> dinput(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
        const double d = delta[r];
        const double* row = layer.weights.data() + r * layer.in;
        for (std::size_t c = 0; c < layer.in; ++c) dinput[c] += d * row[c];
    }
    return dinput;
}

// Walks a branch stack backwards. `dout` is dL/d(output activation) for the
// last layer; hidden layers are tanh.
std::vector<double> backprop_stack(const std::vector<Layer>& stack,
                                   const std::vector<std::vector<double>>& acts,
                                   std::span<const double> stack_input,
                                   std::vector<double> dout, std::vector<Layer>& grads) {
    for (std::size_t li = stack.size(); li-- > 0;) {
        const Layer& layer = stack[li];
        const auto& out_act = acts[li];
        std::vector<double> delta(layer.out);
        switch (layer.activation) {
            case Activation::Linear:
                delta = dout;
                break;
            case Activation::Tanh:
                for (std::size_t r = 0; r < layer.out; ++r)
                    delta[r] = dout[r] * (1.0 - out_act[r] * out_act[r]);
                break;
            case Activation::Softmax: {
                // dL/dz_j = p_j (dL/dp_j - sum_k dL/dp_k p_k)
                double dot = 0.0;
                for (std::size_t k = 0; k < layer.out; ++k) dot += dout[k] * out_act[k];
                for (std::size_t j = 0; j < layer.out; ++j)
                    delta[j] = out_act[j] * (dout[j] - dot);
                break;
            }
        }
        std::span<const double> input =
            li == 0 ? stack_input : std::span<const double>(acts[li - 1]);
        dout = backprop_layer(layer, input, delta, grads[li]);
    }
    return dout;
}

void adam_update_stack(std::vector<Layer>& params, std::vector<Layer>& m, std::vector<Layer>& v,
                       const std::vector<Layer>& grads, const TrainConfig& cfg, double bc1,
                       double bc2) {
    for (std::size_t li = 0; li < params.size(); ++li) {
        auto update = [&](std::vector<double>& p, std::vector<double>& mm, std::vector<double>& vv,
                          const std::vector<double>& g) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                mm[i] = cfg.beta1 * mm[i] + (1.0 - cfg.beta1) * g[i];
                vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                const double mhat = mm[i] / bc1;
                const double vhat = vv[i] / bc2;
                p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
            }
        };
        update(params[li].weights, m[li].weights, v[li].weights, grads[li].weights);
        update(params[li].biases, m[li].biases, v[li].biases, grads[li].biases);
    }
}

} // namespace

MtlTopology MtlTopology::standard(std::size_t input_size, std::size_t shared_neurons,
                                  std::size_t branch_hidden) {
    MtlTopology topo;
    topo.input_size = input_size;
    const std::size_t shared = shared_neurons == 0 ? round_half(input_size) : shared_neurons;
    const std::size_t hidden = branch_hidden == 0 ? round_half(shared) : branch_hidden;
    topo.shared_sizes = {shared};
    topo.mfi = BranchSpec{{hidden}, 3, Activation::Softmax};
    topo.osnr = BranchSpec{{hidden}, 1, Activation::Linear};
    return topo;
}

void MtlTopology::validate() const {
    if (input_size < 1) throw ConfigError("topology input_size must be >= 1");
    for (std::size_t s : shared_sizes)
        if (s < 1) throw ConfigError("topology shared layer sizes must be >= 1");
    if (!mfi && !osnr) throw ConfigError("topology needs at least one task branch");
    if (mfi) {
        for (std::size_t s : mfi->hidden_sizes)
            if (s < 1) throw ConfigError("topology branch layer sizes must be >= 1");
        if (mfi->output_size != 3) throw ConfigError("MFI branch output size must be 3");
    }
    if (osnr) {
        for (std::size_t s : osnr->hidden_sizes)
            if (s < 1) throw ConfigError("topology branch layer sizes must be >= 1");
        if (osnr->output_size != 1) throw ConfigError("OSNR branch output size must be 1");
    }
}

std::size_t count_neurons(const MtlTopology& topo) {
    std::size_t n = topo.input_size;
    for (std::size_t s : topo.shared_sizes) n += s;
    for (const auto* branch : {&topo.mfi, &topo.osnr}) {
        if (!branch->has_value()) continue;
        for (std::size_t s : (*branch)->hidden_sizes) n += s;
        n += (*branch)->output_size;
    }
    return n;
}

std::size_t count_parameters(const MtlTopology& topo) {
    std::size_t n = 0;
    std::size_t prev = topo.input_size;
    for (std::size_t s : topo.shared_sizes) {
        n += prev * s + s;
        prev = s;
    }
    for (const auto* branch : {&topo.mfi, &topo.osnr}) {
        if (!branch->has_value()) continue;
        std::size_t bprev = prev;
        for (std::size_t s : (*branch)->hidden_sizes) {
            n += bprev * s + s;
            bprev = s;
        }
        n += bprev * (*branch)->output_size + (*branch)->output_size;
    }
    return n;
}

MtlTopology make_stl(const MtlTopology& topo, Task task) {
    if (!topo.mfi || !topo.osnr)
        throw InvalidArgumentError("make_stl: expects a two-branch topology");
    MtlTopology out = topo;
    if (task == Task::MFI)
        out.osnr.reset();
    else
        out.mfi.reset();
    return out;
}

void LossWeights::validate() const {
    if (!(w_mfi > 0.0) || !(w_osnr > 0.0))
        throw ConfigError("loss weights must be > 0");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1 must be in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2 must be in (0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("train.epsilon must be > 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
    if (early_stop_patience < 1) throw ConfigError("train.early_stop_patience must be >= 1");
}

namespace {

Layer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    Layer layer;
    layer.in = in;
    layer.out = out;
    layer.activation = act;
    layer.weights.resize(in * out);
    layer.biases.assign(out, 0.0);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weights) w = (2.0 * rng.next_double() - 1.0) * bound;
    return layer;
}

std::vector<Layer> make_branch(std::size_t trunk_out, const BranchSpec& spec, Rng& rng) {
    std::vector<Layer> layers;
    std::size_t prev = trunk_out;
    for (std::size_t s : spec.hidden_sizes) {
        layers.push_back(make_layer(prev, s, Activation::Tanh, rng));
        prev = s;
    }
    layers.push_back(make_layer(prev, spec.output_size, spec.output_activation, rng));
    return layers;
}

} // namespace

MtlNetwork init_network(const MtlTopology& topo, std::uint64_t seed) {
    topo.validate();
    MtlNetwork net;
    net.topology = topo;
    net.init_seed = seed;
    Rng rng(derive_seed(seed, kTagInit));
    std::size_t prev = topo.input_size;
    for (std::size_t s : topo.shared_sizes) {
        net.trunk.push_back(make_layer(prev, s, Activation::Tanh, rng));
        prev = s;
    }
    if (topo.mfi) net.mfi_layers = make_branch(prev, *topo.mfi, rng);
    if (topo.osnr) net.osnr_layers = make_branch(prev, *topo.osnr, rng);
    return net;
}

ForwardResult forward(const MtlNetwork& net, std::span<const double> features,
                      ForwardCache* cache) {
    if (features.size() != net.topology.input_size)
        throw InvalidArgumentError("forward: feature vector size does not match input layer");
    std::vector<double> input(features.begin(), features.end());
    if (cache) {
        cache->input = input;
        cache->trunk.clear();
        cache->mfi.clear();
        cache->osnr.clear();
    }
    const std::vector<double> trunk_out =
        run_stack(net.trunk, std::move(input), cache ? &cache->trunk : nullptr);

    ForwardResult out;
    if (!net.mfi_layers.empty()) {
        const auto probs = run_stack(net.mfi_layers, trunk_out, cache ? &cache->mfi : nullptr);
        std::copy(probs.begin(), probs.end(), out.mfi_probs.begin());
        out.has_mfi = true;
    }
    if (!net.osnr_layers.empty()) {
        const auto est = run_stack(net.osnr_layers, trunk_out, cache ? &cache->osnr : nullptr);
        out.osnr_norm = est[0];
        out.has_osnr = true;
    }
    return out;
}

double mtl_loss(const ForwardResult& out, const std::array<double, 3>& onehot, double osnr_target,
                const LossWeights& w) {
    double loss = 0.0;
    if (out.has_mfi) {
        double se = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double d = onehot[k] - out.mfi_probs[k];
            se += d * d;
        }
        loss += w.w_mfi * se;
    }
    if (out.has_osnr) {
        const double d = osnr_target - out.osnr_norm;
        loss += w.w_osnr * d * d;
    }
    return loss;
}

void Gradients::scale(double s) {
    for (auto* stack : {&trunk, &mfi_layers, &osnr_layers})
        for (auto& layer : *stack) {
            for (double& v : layer.weights) v *= s;
            for (double& v : layer.biases) v *= s;
        }
}

void Gradients::accumulate(const Gradients& other) {
    auto add = [](std::vector<Layer>& a, const std::vector<Layer>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < a[i].weights.size(); ++j)
                a[i].weights[j] += b[i].weights[j];
            for (std::size_t j = 0; j < a[i].biases.size(); ++j) a[i].biases[j] += b[i].biases[j];
        }
    };
    add(trunk, other.trunk);
    add(mfi_layers, other.mfi_layers);
    add(osnr_layers, other.osnr_layers);
}

Gradients zero_gradients(const MtlNetwork& net) {
    Gradients g;
    g.trunk = zeros_like(net.trunk);
    g.mfi_layers = zeros_like(net.mfi_layers);
    g.osnr_layers = zeros_like(net.osnr_layers);
    return g;
}

void backward(const MtlNetwork& net, const ForwardCache& cache, const ForwardResult& out,
              const std::array<double, 3>& onehot, double osnr_target, const LossWeights& w,
              Gradients& grads) {
    const std::vector<double>& trunk_out =
        net.trunk.empty() ? cache.input : cache.trunk.back();

    std::vector<double> d_trunk_out(trunk_out.size(), 0.0);

    if (!net.mfi_layers.empty()) {
        // dL/dp_k of the squared-error head: 2 w_mfi (p_k - y_k).
        std::vector<double> dout(3);
        for (std::size_t k = 0; k < 3; ++k)
            dout[k] = 2.0 * w.w_mfi * (out.mfi_probs[k] - onehot[k]);
        const auto d = backprop_stack(net.mfi_layers, cache.mfi, trunk_out, std::move(dout),
                                      grads.mfi_layers);
        for (std::size_t i = 0; i < d_trunk_out.size(); ++i) d_trunk_out[i] += d[i];
    }
    if (!net.osnr_layers.empty()) {
        std::vector<double> dout{2.0 * w.w_osnr * (out.osnr_norm - osnr_target)};
        const auto d = backprop_stack(net.osnr_layers, cache.osnr, trunk_out, std::move(dout),
                                      grads.osnr_layers);
        for (std::size_t i = 0; i < d_trunk_out.size(); ++i) d_trunk_out[i] += d[i];
    }
    if (!net.trunk.empty())
        backprop_stack(net.trunk, cache.trunk, cache.input, std::move(d_trunk_out), grads.trunk);
}

AdamState init_adam(const MtlNetwork& net) {
    AdamState st;
    st.m_trunk = zeros_like(net.trunk);
    st.m_mfi = zeros_like(net.mfi_layers);
    st.m_osnr = zeros_like(net.osnr_layers);
    st.v_trunk = zeros_like(net.trunk);
    st.v_mfi = zeros_like(net.mfi_layers);
    st.v_osnr = zeros_like(net.osnr_layers);
    return st;
}

void adam_step(MtlNetwork& net, AdamState& state, const Gradients& grads, const TrainConfig& cfg) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    adam_update_stack(net.trunk, state.m_trunk, state.v_trunk, grads.trunk, cfg, bc1, bc2);
    adam_update_stack(net.mfi_layers, state.m_mfi, state.v_mfi, grads.mfi_layers, cfg, bc1, bc2);
    adam_update_stack(net.osnr_layers, state.m_osnr, state.v_osnr, grads.osnr_layers, cfg, bc1,
                      bc2);
}

namespace {

struct ValScore {
    double loss = 0.0;
    double acc = 0.0;
    double rmse_db = 0.0;
};

ValScore validate_on(const MtlNetwork& net, const std::vector<const features::LabeledExample*>& part,
                     const LossWeights& weights, double grid_min, double grid_max) {
    ValScore score;
    double se_db = 0.0;
    std::size_t correct = 0;
    for (const auto* ex : part) {
        const auto out = forward(net, ex->features);
        score.loss += mtl_loss(out, ex->format_onehot, ex->osnr_norm, weights);
        if (out.has_mfi) {
            int arg = 0;
            for (int k = 1; k < 3; ++k)
                if (out.mfi_probs[static_cast<std::size_t>(k)] >
                    out.mfi_probs[static_cast<std::size_t>(arg)])
                    arg = k;
            if (arg == static_cast<int>(ex->format)) ++correct;
        }
        if (out.has_osnr) {
            const double est = features::decode_osnr(out.osnr_norm, grid_min, grid_max);
            se_db += (est - ex->osnr_db) * (est - ex->osnr_db);
        }
    }
    const double n = static_cast<double>(part.size());
    score.loss /= n;
    const bool has_mfi = !net.mfi_layers.empty();
    const bool has_osnr = !net.osnr_layers.empty();
    score.acc = has_mfi ? static_cast<double>(correct) / n : std::nan("");
    score.rmse_db = has_osnr ? std::sqrt(se_db / n) : std::nan("");
    return score;
}

} // namespace

TrainResult train(MtlNetwork net, const features::Dataset& ds, const TrainConfig& cfg,
                  const LossWeights& weights) {
    cfg.validate();
    weights.validate();
    if (net.topology.input_size != ds.spec.bin_count)
        throw InvalidArgumentError("train: topology input size does not match dataset bin count");

    const auto train_part = ds.partition(features::Partition::Train);
    const auto val_part = ds.partition(features::Partition::Val);
    if (train_part.empty()) throw EmptyPartitionError("train: empty train partition");
    if (val_part.empty()) throw EmptyPartitionError("train: empty validation partition");

    net.loss_weights = weights;
    AdamState adam = init_adam(net);
    const double grid_min = ds.spec.grid_min();
    const double grid_max = ds.spec.grid_max();

    TrainResult result;
    result.best = net;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_part.size());
    std::iota(order.begin(), order.end(), 0);

    ForwardCache cache;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(derive_seed(cfg.seed, kTagShuffle), epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            Gradients grads = zero_gradients(net);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                const auto* ex = train_part[order[i]];
                const auto out = forward(net, ex->features, &cache);
                batch_loss += mtl_loss(out, ex->format_onehot, ex->osnr_norm, weights);
                backward(net, cache, out, ex->format_onehot, ex->osnr_norm, weights, grads);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            grads.scale(inv);
            epoch_loss += batch_loss;
            adam_step(net, adam, grads, cfg);
        }
        epoch_loss /= static_cast<double>(order.size());

        const ValScore val = validate_on(net, val_part, weights, grid_min, grid_max);
        if (!std::isfinite(epoch_loss) || !std::isfinite(val.loss))
            throw NonFiniteError("train: loss became non-finite at epoch " +
                                 std::to_string(epoch));

        result.history.push_back(
            EpochRecord{epoch, epoch_loss, val.loss, val.acc, val.rmse_db});
        if (val.loss < result.best_val_loss) {
            result.best_val_loss = val.loss;
            result.best_epoch = epoch;
            result.best = net;
        }
        if (epoch - result.best_epoch >= cfg.early_stop_patience) break;
    }
    return result;
}

Prediction predict(const MtlNetwork& net, std::span<const double> features, double grid_min,
                   double grid_max) {
    const auto out = forward(net, features);
    Prediction p;
    if (out.has_mfi) {
        p.format_index = 0;
        for (int k = 1; k < 3; ++k)
            if (out.mfi_probs[static_cast<std::size_t>(k)] >
                out.mfi_probs[static_cast<std::size_t>(p.format_index)])
                p.format_index = k;
    }
    p.osnr_db = out.has_osnr ? features::decode_osnr(out.osnr_norm, grid_min, grid_max)
                             : std::nan("");
    return p;
}

namespace {

void emit_layer(std::ostringstream& out, const Layer& layer, bool last) {
    out << "      {\"W\": [";
    for (std::size_t r = 0; r < layer.out; ++r) {
        out << (r == 0 ? "[" : ",\n             [");
        for (std::size_t c = 0; c < layer.in; ++c) {
            if (c > 0) out << ", ";
            out << textio::fmt17(layer.weights[r * layer.in + c]);
        }
        out << "]";
    }
    out << "],\n       \"b\": [";
    for (std::size_t r = 0; r < layer.out; ++r) {
        if (r > 0) out << ", ";
        out << textio::fmt17(layer.biases[r]);
    }
    out << "]}" << (last ? "" : ",") << "\n";
}

json branch_json(const std::optional<BranchSpec>& branch) {
    if (!branch) return nullptr;
    return json{{"hidden_sizes", branch->hidden_sizes}, {"output_size", branch->output_size}};
}

std::optional<BranchSpec> branch_from_json(const json& j, Activation out_act) {
    if (j.is_null()) return std::nullopt;
    BranchSpec spec;
    spec.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    spec.output_size = j.at("output_size").get<std::size_t>();
    spec.output_activation = out_act;
    return spec;
}

} // namespace

std::string model_to_json(const MtlNetwork& net) {
    json topo;
    topo["input_size"] = net.topology.input_size;
    topo["shared_sizes"] = net.topology.shared_sizes;
    topo["mfi"] = branch_json(net.topology.mfi);
    topo["osnr"] = branch_json(net.topology.osnr);

    // Layer payload is emitted by hand so floats carry 17 significant digits.
    std::ostringstream out;
    out << "{\n";
    out << "  \"format_version\": 1,\n";
    out << "  \"topology\": " << topo.dump() << ",\n";
    out << "  \"loss_weights\": {\"w_mfi\": " << textio::fmt17(net.loss_weights.w_mfi)
        << ", \"w_osnr\": " << textio::fmt17(net.loss_weights.w_osnr) << "},\n";
    out << "  \"seed\": " << net.init_seed << ",\n";
    out << "  \"layers\": [\n";
    std::vector<const Layer*> all;
    for (const auto* stack : {&net.trunk, &net.mfi_layers, &net.osnr_layers})
        for (const auto& l : *stack) all.push_back(&l);
    for (std::size_t i = 0; i < all.size(); ++i) emit_layer(out, *all[i], i + 1 == all.size());
    out << "  ]\n}\n";
    return out.str();
}

MtlNetwork model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1)
            throw ParseError("model: unsupported format_version");
        MtlTopology topo;
        const json& jt = j.at("topology");
        topo.input_size = jt.at("input_size").get<std::size_t>();
        topo.shared_sizes = jt.at("shared_sizes").get<std::vector<std::size_t>>();
        topo.mfi = branch_from_json(jt.at("mfi"), Activation::Softmax);
        topo.osnr = branch_from_json(jt.at("osnr"), Activation::Linear);
        topo.validate();

        MtlNetwork net = init_network(topo, j.at("seed").get<std::uint64_t>());
        net.loss_weights.w_mfi = j.at("loss_weights").at("w_mfi").get<double>();
        net.loss_weights.w_osnr = j.at("loss_weights").at("w_osnr").get<double>();

        std::vector<Layer*> all;
        for (auto* stack : {&net.trunk, &net.mfi_layers, &net.osnr_layers})
            for (auto& l : *stack) all.push_back(&l);
        const json& layers = j.at("layers");
        if (layers.size() != all.size())
            throw ParseError("model: layer count does not match topology");
        for (std::size_t li = 0; li < all.size(); ++li) {
            const json& W = layers[li].at("W");
            const json& b = layers[li].at("b");
            if (W.size() != all[li]->out || b.size() != all[li]->out)
                throw ParseError("model: weight shape does not match topology at layer " +
                                 std::to_string(li));
            for (std::size_t r = 0; r < all[li]->out; ++r) {
                const json& row = W[r];
                if (row.size() != all[li]->in)
                    throw ParseError("model: weight shape does not match topology at layer " +
                                     std::to_string(li));
                for (std::size_t c = 0; c < all[li]->in; ++c)
                    all[li]->weights[r * all[li]->in + c] = row[c].get<double>();
                all[li]->biases[r] = b[r].get<double>();
            }
        }
        return net;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: missing or malformed field: ") + e.what());
    }
}

void save_model(const MtlNetwork& net, const std::string& path) {
    textio::write_file(path, model_to_json(net));
}

MtlNetwork load_model(const std::string& path) {
    try {
        return model_from_json(textio::read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace opm::mtl
