#ifndef OPM_MTLNET_HPP
#define OPM_MTLNET_HPP

#include "opm/features.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace opm::mtl {

enum class Task { MFI = 0, OSNR = 1 };

enum class Activation { Tanh, Softmax, Linear };

// One task branch: private hidden layers (tanh) feeding an output layer.
struct BranchSpec {
    std::vector<std::size_t> hidden_sizes;
    std::size_t output_size = 0;
    Activation output_activation = Activation::Linear;
};

// Shared trunk plus up to two task branches. A single-task topology keeps
// the trunk and drops the other branch entirely.
struct MtlTopology {
    std::size_t input_size = 0;
    std::vector<std::size_t> shared_sizes;
    std::optional<BranchSpec> mfi;  // output 3, softmax
    std::optional<BranchSpec> osnr; // output 1, linear

    // Paper-style sizing: shared defaults to half the input, branch hidden
    // layers to half the shared width (0 picks the default).
    static MtlTopology standard(std::size_t input_size, std::size_t shared_neurons = 0,
                                std::size_t branch_hidden = 0);
    void validate() const;
};

std::size_t count_neurons(const MtlTopology& topo);
std::size_t count_parameters(const MtlTopology& topo);

// Returns a single-branch topology retaining the shared trunk.
MtlTopology make_stl(const MtlTopology& topo, Task task);

struct LossWeights {
    double w_mfi = 1.0;
    double w_osnr = 5.0;

    void validate() const;
};

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation activation = Activation::Tanh;
    std::vector<double> weights; // row-major, out x in
    std::vector<double> biases;  // out
};

struct MtlNetwork {
    MtlTopology topology;
    std::vector<Layer> trunk;
    std::vector<Layer> mfi_layers;  // hidden... + softmax output
    std::vector<Layer> osnr_layers; // hidden... + linear output
    std::uint64_t init_seed = 0;
    LossWeights loss_weights; // objective weights the model was trained with
};

// Glorot-uniform weights on +-sqrt(6/(fan_in+fan_out)), zero biases.
MtlNetwork init_network(const MtlTopology& topo, std::uint64_t seed);

// Per-layer activations recorded by forward() for backpropagation.
struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> trunk;
    std::vector<std::vector<double>> mfi;
    std::vector<std::vector<double>> osnr;
};

struct ForwardResult {
    std::array<double, 3> mfi_probs{}; // valid when the MFI branch exists
    double osnr_norm = 0.0;            // valid when the OSNR branch exists
    bool has_mfi = false;
    bool has_osnr = false;
};

ForwardResult forward(const MtlNetwork& net, std::span<const double> features,
                      ForwardCache* cache = nullptr);

// Weighted squared-error objective over both task heads:
//   J = w_mfi * sum_k (y1_k - h1_k)^2 + w_osnr * (y2 - h2)^2
// Absent branches contribute nothing.
double mtl_loss(const ForwardResult& out, const std::array<double, 3>& onehot, double osnr_target,
                const LossWeights& w);

// Gradient container mirroring the network's layer shapes.
struct Gradients {
    std::vector<Layer> trunk;
    std::vector<Layer> mfi_layers;
    std::vector<Layer> osnr_layers;

    void scale(double s);
    void accumulate(const Gradients& other);
};

Gradients zero_gradients(const MtlNetwork& net);

// Analytic gradients of mtl_loss for one example; cache must come from a
// matching forward() call. Accumulates into `grads`.
void backward(const MtlNetwork& net, const ForwardCache& cache, const ForwardResult& out,
              const std::array<double, 3>& onehot, double osnr_target, const LossWeights& w,
              Gradients& grads);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 2000;
    std::size_t early_stop_patience = 100;
    std::uint64_t seed = 1;

    void validate() const;
};

struct AdamState {
    std::vector<Layer> m_trunk, m_mfi, m_osnr; // first moments
    std::vector<Layer> v_trunk, v_mfi, v_osnr; // second moments
    std::uint64_t step = 0;
};

AdamState init_adam(const MtlNetwork& net);

// Bias-corrected Adam update applied in place.
void adam_step(MtlNetwork& net, AdamState& state, const Gradients& grads, const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;     // nan when the MFI branch is absent
    double val_rmse_db = 0.0; // nan when the OSNR branch is absent
};

struct TrainResult {
    MtlNetwork best;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

// Minibatch Adam over the train partition with a seeded shuffle per epoch;
// early-stops when validation total loss stalls for `patience` epochs and
// returns the best-validation snapshot.
TrainResult train(MtlNetwork net, const features::Dataset& ds, const TrainConfig& cfg,
                  const LossWeights& weights);

struct Prediction {
    int format_index = -1; // argmax, ties to the lowest index; -1 without MFI branch
    double osnr_db = 0.0;  // affine decode, unclamped; nan without OSNR branch
};

Prediction predict(const MtlNetwork& net, std::span<const double> features, double grid_min,
                   double grid_max);

// Lossless JSON round-trip (floats at 17 significant digits).
void save_model(const MtlNetwork& net, const std::string& path);
MtlNetwork load_model(const std::string& path);
std::string model_to_json(const MtlNetwork& net);
MtlNetwork model_from_json(const std::string& text);

} // namespace opm::mtl

#endif
