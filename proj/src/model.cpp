#include "phefl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phefl/errors.hpp"
#include "phefl/rng.hpp"

namespace phefl {

std::vector<int> ModelSpec::layer_dims() const {
    std::vector<int> dims;
    dims.reserve(hidden_dims.size() + 2);
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(num_classes);
    return dims;
}

std::size_t ModelSpec::parameter_count() const {
    const auto dims = layer_dims();
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        count += static_cast<std::size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
    }
    return count;
}

std::uint64_t ModelSpec::fingerprint() const {
    std::uint64_t h = mix64(0x6d6f64656c ^ static_cast<std::uint64_t>(input_dim));
    for (int d : hidden_dims) {
        h = mix64(h ^ static_cast<std::uint64_t>(d));
    }
    return mix64(h ^ (static_cast<std::uint64_t>(num_classes) << 32));
}

void ModelSpec::validate() const {
    if (input_dim < 1) {
        throw InvalidArgument("model spec: input_dim must be positive");
    }
    if (num_classes < 2) {
        throw InvalidArgument("model spec: num_classes must be at least 2");
    }
    for (int d : hidden_dims) {
        if (d < 1) {
            throw InvalidArgument("model spec: hidden layer widths must be positive");
        }
    }
}

namespace {

void check_params(const ModelSpec& spec, const ParameterVector& params) {
    if (params.spec_fingerprint != spec.fingerprint()) {
        throw InvalidArgument("parameter vector does not match model spec");
    }
    if (params.values.size() != spec.parameter_count()) {
        throw InvalidArgument("parameter vector has wrong length");
    }
}

void check_features(const ModelSpec& spec, std::span<const double> features) {
    if (features.size() != static_cast<std::size_t>(spec.input_dim)) {
        throw InvalidArgument("feature vector length does not match input_dim");
    }
}

void check_label(const ModelSpec& spec, int label) {
    if (label < 0 || label >= spec.num_classes) {
        throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                              std::to_string(spec.num_classes) + ")");
    }
}

constexpr double kProbFloor = 1e-12;

// Workspace holding the per-layer pre-activations and activations of one
// forward pass, reused across examples to avoid reallocation.
struct ForwardPass {
    std::vector<std::vector<double>> z; // one per layer
    std::vector<std::vector<double>> a; // a[0] is the input copy

    void resize(const std::vector<int>& dims) {
        z.assign(dims.size() - 1, {});
        a.assign(dims.size(), {});
        a[0].resize(dims[0]);
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            z[l].resize(dims[l + 1]);
            a[l + 1].resize(dims[l + 1]);
        }
    }
};

// z_l = W_l a_{l-1} + b_l; ReLU on hidden layers, softmax on the last.
void run_forward(const std::vector<int>& dims, const std::vector<double>& w,
                 std::span<const double> input, ForwardPass& fp) {
    std::copy(input.begin(), input.end(), fp.a[0].begin());
    std::size_t offset = 0;
    const std::size_t num_layers = dims.size() - 1;
    for (std::size_t l = 0; l < num_layers; ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double* weights = w.data() + offset;
        const double* bias = weights + static_cast<std::size_t>(fan_in) * fan_out;
        const std::vector<double>& in = fp.a[l];
        std::vector<double>& z = fp.z[l];
        for (int o = 0; o < fan_out; ++o) {
            const double* row = weights + static_cast<std::size_t>(o) * fan_in;
            double acc = bias[o];
            for (int i = 0; i < fan_in; ++i) {
                acc += row[i] * in[i];
            }
            z[o] = acc;
        }
        std::vector<double>& out = fp.a[l + 1];
        if (l + 1 < num_layers) {
            for (int o = 0; o < fan_out; ++o) {
                out[o] = z[o] > 0.0 ? z[o] : 0.0;
            }
        } else {
            const double zmax = *std::max_element(z.begin(), z.end());
            double denom = 0.0;
            for (int o = 0; o < fan_out; ++o) {
                out[o] = std::exp(z[o] - zmax);
                denom += out[o];
            }
            for (int o = 0; o < fan_out; ++o) {
                out[o] /= denom;
            }
        }
        offset += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
    }
}

} // namespace

ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParameterVector out;
    out.spec_fingerprint = spec.fingerprint();
    out.values.reserve(spec.parameter_count());
    Rng rng(seed);
    const auto dims = spec.layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < fan_in * fan_out; ++i) {
            out.values.push_back(rng.next_uniform(-limit, limit));
        }
        for (int i = 0; i < fan_out; ++i) {
            out.values.push_back(0.0);
        }
    }
    return out;
}

std::vector<double> forward(const ModelSpec& spec, const ParameterVector& params,
                            std::span<const double> features) {
    check_params(spec, params);
    check_features(spec, features);
    ForwardPass fp;
    const auto dims = spec.layer_dims();
    fp.resize(dims);
    run_forward(dims, params.values, features, fp);
    return fp.a.back();
}

double loss(const ModelSpec& spec, const ParameterVector& params, const Dataset& batch) {
    if (batch.empty()) {
        throw InvalidArgument("loss: empty batch");
    }
    check_params(spec, params);
    ForwardPass fp;
    const auto dims = spec.layer_dims();
    fp.resize(dims);
    double total = 0.0;
    for (const LabeledExample& ex : batch.examples) {
        check_features(spec, ex.features);
        check_label(spec, ex.label);
        run_forward(dims, params.values, ex.features, fp);
        total += -std::log(std::max(fp.a.back()[ex.label], kProbFloor));
    }
    return total / static_cast<double>(batch.size());
}

namespace detail {

double loss_and_gradient(const ModelSpec& spec, const ParameterVector& params,
                         const Dataset& data, std::span<const int> indices,
                         std::vector<double>& grad) {
    const auto dims = spec.layer_dims();
    const std::size_t num_layers = dims.size() - 1;
    grad.assign(params.values.size(), 0.0);

    ForwardPass fp;
    fp.resize(dims);
    std::vector<std::vector<double>> delta(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        delta[l].resize(dims[l + 1]);
    }

    // Per-layer parameter offsets into the flat vector.
    std::vector<std::size_t> offsets(num_layers);
    std::size_t off = 0;
    for (std::size_t l = 0; l < num_layers; ++l) {
        offsets[l] = off;
        off += static_cast<std::size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
    }

    double total_loss = 0.0;
    for (int idx : indices) {
        const LabeledExample& ex = data.examples[idx];
        check_features(spec, ex.features);
        check_label(spec, ex.label);
        run_forward(dims, params.values, ex.features, fp);

        const std::vector<double>& probs = fp.a.back();
        const double p_true = probs[ex.label];
        total_loss += -std::log(std::max(p_true, kProbFloor));

        // Output delta for softmax + clamped cross-entropy. Below the clamp
        // the per-example loss is constant, so the contribution is zero.
        std::vector<double>& dout = delta[num_layers - 1];
        if (p_true <= kProbFloor) {
            std::fill(dout.begin(), dout.end(), 0.0);
        } else {
            for (int o = 0; o < dims.back(); ++o) {
                dout[o] = probs[o] - (o == ex.label ? 1.0 : 0.0);
            }
        }

        for (std::size_t l = num_layers; l-- > 0;) {
            const int fan_in = dims[l];
            const int fan_out = dims[l + 1];
            const double* weights = params.values.data() + offsets[l];
            double* gw = grad.data() + offsets[l];
            double* gb = gw + static_cast<std::size_t>(fan_in) * fan_out;
            const std::vector<double>& in = fp.a[l];
            const std::vector<double>& d = delta[l];
            for (int o = 0; o < fan_out; ++o) {
                const double dv = d[o];
                if (dv == 0.0) {
                    continue;
                }
                double* grow = gw + static_cast<std::size_t>(o) * fan_in;
                for (int i = 0; i < fan_in; ++i) {
                    grow[i] += dv * in[i];
                }
                gb[o] += dv;
            }
            if (l > 0) {
                // delta_{l-1} = (W_l^T delta_l) masked by relu'(z_{l-1}).
                std::vector<double>& dprev = delta[l - 1];
                const std::vector<double>& zprev = fp.z[l - 1];
                for (int i = 0; i < fan_in; ++i) {
                    if (zprev[i] <= 0.0) {
                        dprev[i] = 0.0;
                        continue;
                    }
                    double acc = 0.0;
                    for (int o = 0; o < fan_out; ++o) {
                        acc += weights[static_cast<std::size_t>(o) * fan_in + i] * d[o];
                    }
                    dprev[i] = acc;
                }
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(indices.size());
    for (double& g : grad) {
        g *= inv_n;
    }
    return total_loss * inv_n;
}

} // namespace detail

ParameterVector gradient(const ModelSpec& spec, const ParameterVector& params,
                         const Dataset& batch) {
    if (batch.empty()) {
        throw InvalidArgument("gradient: empty batch");
    }
    check_params(spec, params);
    std::vector<int> indices(batch.size());
    std::iota(indices.begin(), indices.end(), 0);
    ParameterVector out;
    out.spec_fingerprint = params.spec_fingerprint;
    detail::loss_and_gradient(spec, params, batch, indices, out.values);
    return out;
}

ParameterVector train_local(const ModelSpec& spec, ParameterVector params,
                            const Dataset& data, int epochs, int batch_size,
                            double learning_rate, std::uint64_t seed) {
    if (data.empty()) {
        throw InvalidArgument("train_local: empty dataset");
    }
    if (epochs < 1) {
        throw InvalidArgument("train_local: epochs must be at least 1");
    }
    if (batch_size < 1) {
        throw InvalidArgument("train_local: batch_size must be at least 1");
    }
    check_params(spec, params);

    const int n = static_cast<int>(data.size());
    std::vector<int> order(n);
    std::vector<double> grad;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(seed, "epoch-shuffle", {static_cast<std::uint64_t>(epoch)}));
        rng.shuffle(order);
        for (int start = 0; start < n; start += batch_size) {
            const int count = std::min(batch_size, n - start);
            const std::span<const int> batch(order.data() + start, count);
            const double batch_loss =
                detail::loss_and_gradient(spec, params, data, batch, grad);
            if (!std::isfinite(batch_loss)) {
                throw TrainingDiverged(
                    "train_local: non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch offset " + std::to_string(start) +
                    " (learning rate too large?)");
            }
            for (std::size_t i = 0; i < grad.size(); ++i) {
                params.values[i] -= learning_rate * grad[i];
            }
        }
    }
    return params;
}

double evaluate_accuracy(const ModelSpec& spec, const ParameterVector& params,
                         const Dataset& testset) {
    if (testset.empty()) {
        throw InvalidArgument("evaluate_accuracy: empty test set");
    }
    check_params(spec, params);
    ForwardPass fp;
    const auto dims = spec.layer_dims();
    fp.resize(dims);
    std::size_t correct = 0;
    for (const LabeledExample& ex : testset.examples) {
        check_features(spec, ex.features);
        check_label(spec, ex.label);
        run_forward(dims, params.values, ex.features, fp);
        const std::vector<double>& probs = fp.a.back();
        int best = 0;
        for (int c = 1; c < spec.num_classes; ++c) {
            if (probs[c] > probs[best]) {
                best = c;
            }
        }
        if (best == ex.label) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(testset.size());
}

} // namespace phefl
