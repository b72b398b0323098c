#ifndef PHEFL_MODEL_HPP
#define PHEFL_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace phefl {

/// Fully-connected classifier architecture: ReLU hidden layers, softmax
/// output. hidden_dims may be empty (plain multinomial regression).
struct ModelSpec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int num_classes = 0;

    /// Layer widths including input and output: [input, hidden..., classes].
    std::vector<int> layer_dims() const;

    /// Total parameter count: sum of fan_in*fan_out + fan_out per layer pair.
    std::size_t parameter_count() const;

    /// Hash binding a ParameterVector to this architecture.
    std::uint64_t fingerprint() const;

    /// Throws InvalidArgument on non-positive dims or num_classes < 2.
    void validate() const;
};

/// Flat model weights. Layout: for each layer, the weight matrix
/// (fan_out x fan_in, row-major) followed by the fan_out biases. This layout
/// is the unit of all aggregation; every entry stays finite.
struct ParameterVector {
    std::vector<double> values;
    std::uint64_t spec_fingerprint = 0;
};

struct LabeledExample {
    std::vector<double> features; // in [0,1]^input_dim
    int label = 0;                // in [0, num_classes)
};

/// Ordered example collection. Iteration order is part of the determinism
/// contract, so examples are never reordered in place.
struct Dataset {
    std::vector<LabeledExample> examples;
    std::string provenance; // "synthetic" | "idx-file" | "slice"

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

/// Deterministic initialization: weights uniform in +-1/sqrt(fan_in) per
/// layer, biases zero.
ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed);

/// Class probabilities for one input; softmax with max-subtraction.
std::vector<double> forward(const ModelSpec& spec, const ParameterVector& params,
                            std::span<const double> features);

/// Mean cross-entropy over the batch, -log(max(p_true, 1e-12)).
double loss(const ModelSpec& spec, const ParameterVector& params, const Dataset& batch);

/// Gradient of `loss` with respect to the parameters, same layout as params.
ParameterVector gradient(const ModelSpec& spec, const ParameterVector& params,
                         const Dataset& batch);

/// Plain mini-batch SGD: `epochs` passes, each reshuffled from a stream
/// derived from (seed, epoch); the partial final batch is trained on as-is.
/// Deterministic function of all inputs. Throws TrainingDiverged when a batch
/// loss goes non-finite.
ParameterVector train_local(const ModelSpec& spec, ParameterVector params,
                            const Dataset& data, int epochs, int batch_size,
                            double learning_rate, std::uint64_t seed);

/// Fraction of examples whose argmax class matches the label; argmax ties
/// break toward the lowest class index.
double evaluate_accuracy(const ModelSpec& spec, const ParameterVector& params,
                         const Dataset& testset);

namespace detail {
/// Shared backprop core: accumulates the batch-mean gradient of the clamped
/// cross-entropy into `grad` (resized and zeroed here) and returns the batch
/// loss. `indices` selects the examples. Exposed for train_local and tests.
double loss_and_gradient(const ModelSpec& spec, const ParameterVector& params,
                         const Dataset& data, std::span<const int> indices,
                         std::vector<double>& grad);
} // namespace detail

} // namespace phefl

#endif
