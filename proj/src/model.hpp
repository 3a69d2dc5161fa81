#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tape.hpp"
#include "tensor.hpp"

namespace fseg {

enum class Variant : uint8_t { residual = 0, dense = 1 };

Variant variant_from_string(const std::string& name);
const char* variant_name(Variant v);

enum class Activation { relu, sigmoid };

struct LayerSpec {
    int64_t out_features;
    int64_t in_channels;
    int64_t kh, kw;
    Activation activation;
};

/// The seven per-variant layer shapes:
///   residual in-channels [3,64,64,64,64,64,64]
///   dense    in-channels [3,67,131,195,259,323,64]
/// with 64 output features on layers 1-6, one on layer 7, kernels 3x3 for
/// layers 1-6 and 1x1 for layer 7, ReLU activations and a sigmoid output.
std::vector<LayerSpec> layer_specs(Variant variant);

struct ModelGraph {
    Variant variant = Variant::residual;
    std::vector<LayerSpec> specs;  // 7 entries
    std::vector<Tensor> weights;   // [out,in,kh,kw] per layer
    std::vector<Tensor> biases;    // [out] per layer
};

/// He-uniform initialized network (weights uniform in ±sqrt(6/fan_in),
/// biases zero), deterministic in the seed.
ModelGraph build_model(Variant variant, uint64_t seed);

int64_t count_parameters(const ModelGraph& model);

/// Tape variable ids assigned during a recorded forward pass; the caller
/// reads parameter gradients out of the tape through these after backward().
struct ForwardRecord {
    int input_var = -1;
    int output_var = -1;
    std::vector<int> weight_vars, bias_vars;
};

/// Run the network. Input must be [B,3,H,W]; the result is [B,1,H,W] with
/// every value in (0,1).
///
/// Topology: the residual variant computes out = relu(conv(x)) + x on layers
/// 2-6 (the layers where input and output widths are both 64); the dense
/// variant feeds layer l (l=2..6) with concat(raw input, outputs of layers
/// 1..l-1); layer 7 consumes only layer 6's features in both variants.
///
/// With tape == nullptr and B > 1 the samples are processed one at a time and
/// restitched, which bounds peak memory and is bit-identical to the direct
/// batched evaluation. `observed_concat_channels`, when non-null, receives
/// the channel width consumed by each layer (dense-variant introspection).
Tensor forward(const ModelGraph& model, const Tensor& input, GradTape* tape = nullptr,
               ForwardRecord* record = nullptr,
               std::vector<int64_t>* observed_concat_channels = nullptr);

/// Optimizer/progress section appended to a checkpoint (tag "ADM1").
struct OptSection {
    uint64_t step = 0;
    uint64_t epochs_done = 0;
    double best_val = 0.0;
    std::vector<Tensor> m, v;  // first/second moments, one pair per parameter
};

/// Checkpoint container: magic "FSM1", variant byte, then per layer the
/// weight and bias blobs (little-endian float32) each preceded by a u64
/// element count; optionally followed by the "ADM1" optimizer section.
void save_checkpoint(const ModelGraph& model, const std::string& path,
                     const OptSection* opt = nullptr);
ModelGraph load_checkpoint(const std::string& path, OptSection* opt = nullptr,
                           bool* has_opt = nullptr);

} // namespace fseg
