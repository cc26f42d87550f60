#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "spikeseg/srm.hpp"
#include "spikeseg/tensor.hpp"

namespace spikeseg {

enum class LayerKind : std::uint8_t {
    conv = 0,
    transposed_conv = 1,
};

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 2;
    int padding = 1;
    int output_padding = 1;  // transposed_conv only; must be < stride
    int delay_steps = 0;     // integer-step delay of the response kernel
    SrmParams srm;

    int out_extent(int in) const;
    void validate() const;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Adaptive-moment optimizer accumulators, one slot per weight.
struct AdamState {
    std::uint64_t step_count = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

using Gradients = std::vector<std::vector<double>>;

// Layered spiking network. Weights are float32 (the checkpoint precision);
// all accumulation happens in double.
class Network {
  public:
    Network() = default;
    Network(std::vector<LayerSpec> layers, int input_height, int input_width,
            int train_steps);

    // The canonical encoder-decoder stack: three stride-2 convolutions
    // 2->16->32->64 followed by three stride-2 transposed convolutions
    // 64->32->16->2, all 3x3. Requires height and width divisible by 8.
    static Network encoder_decoder(int input_height, int input_width, int train_steps,
                                   const SrmParams& srm);

    // Uniform init in +-sqrt(6 / (fan_in * psp_gain)), where psp_gain is the
    // summed response kernel: the steady-state amplification a sustained
    // input train receives before hitting the weight.
    void init_weights(std::uint64_t seed);

    int layer_count() const { return static_cast<int>(layers_.size()); }
    const LayerSpec& layer(int l) const { return layers_[l]; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    int input_height() const { return input_height_; }
    int input_width() const { return input_width_; }
    int train_steps() const { return train_steps_; }

    PlaneDims in_dims(int l) const;
    PlaneDims out_dims(int l) const;
    std::size_t weight_count(int l) const;

    std::vector<float>& weights(int l) { return weights_[l]; }
    const std::vector<float>& weights(int l) const { return weights_[l]; }

    AdamState& optimizer_state() { return adam_; }
    const AdamState& optimizer_state() const { return adam_; }

    const KernelTable& kernels(int l) const { return tables_[l]; }
    // Response kernel with the layer's delay applied (leading zeros).
    std::span<const double> delayed_eps(int l) const { return delayed_eps_[l]; }

    // Bumped by every weight mutation; traces remember the revision they
    // were computed against.
    std::uint64_t revision() const { return revision_; }
    void bump_revision() { ++revision_; }

    friend bool operator==(const Network&, const Network&);

  private:
    void rebuild_caches();

    std::vector<LayerSpec> layers_;
    std::vector<std::vector<float>> weights_;
    AdamState adam_;
    int input_height_ = 0;
    int input_width_ = 0;
    int train_steps_ = 0;
    std::uint64_t revision_ = 0;
    std::vector<KernelTable> tables_;
    std::vector<std::vector<double>> delayed_eps_;
};

// Everything forward produces, retained for backpropagation.
// spikes[0] is the network input; spikes[l+1], psp[l], membrane[l] belong
// to layer l (membrane[l] is the potential of the layer's output neurons).
struct ForwardTrace {
    std::vector<TimeTensor> spikes;
    std::vector<TimeTensor> psp;
    std::vector<TimeTensor> membrane;
    bool relaxed = false;
    std::uint64_t net_revision = 0;

    const TimeTensor& output() const { return spikes.back(); }
};

// Full simulation over all time steps. Binary mode thresholds the
// membrane; relaxed mode substitutes the smooth relaxed_spike transfer and
// is used for gradient verification.
ForwardTrace forward_trace(const Network& net, const TimeTensor& input,
                           bool relaxed = false);

// Spec-facing wrapper over binary forward_trace.
std::pair<SpikeTensor, ForwardTrace> forward(const Network& net, const SpikeTensor& input);

// Backpropagation through time with the surrogate threshold derivative.
// loss_grad is dL/d(output spikes). Returns per-layer weight gradients.
Gradients backward(const Network& net, const ForwardTrace& trace,
                   const TimeTensor& loss_grad);

// One adaptive-moment update. Throws on non-finite gradients without
// touching the network.
void step(Network& net, const Gradients& grads, const AdamConfig& cfg);

// Versioned binary checkpoint: weights, layer table, SrmParams, and
// optimizer state round trip bit-exactly.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace spikeseg
