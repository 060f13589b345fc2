#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cema/dataset.hpp"
#include "cema/params.hpp"

namespace cema {

enum class Activation { relu, tanh };

// Fully-connected softmax classifier: layer_sizes = input, hidden..., classes.
struct NetSpec {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::tanh;
    std::uint64_t init_seed = 0;
};

struct Model {
    NetSpec spec;
    ParamVector params;
};

// Segment map derived from the layer sizes: one segment per weight matrix
// ("W0", "W1", ...) and one per bias vector ("b0", ...). Weight matrices
// are row-major fan_in x fan_out.
LayoutPtr make_net_layout(const NetSpec& spec);

// Deterministic initialization: weights uniform in [-a, a) with
// a = sqrt(6 / (fan_in + fan_out)), biases zero, drawn in layout order
// from Rng(init_seed).
Model init_model(const NetSpec& spec);

struct LossGrad {
    double loss = 0.0;
    ParamVector grads;
};

// Mean softmax cross-entropy over the batch plus its analytic gradient.
// features is row-major n x dim with dim == layer_sizes.front().
LossGrad loss_and_grad(const Model& model, std::span<const double> features,
                       std::span<const int> labels, std::size_t dim);
LossGrad loss_and_grad(const Model& model, const Batch& batch);

// params <- params - lr * grads.
void sgd_step(Model& model, const ParamVector& grads, double lr);

// Fraction of argmax-correct predictions; ties break toward the lowest
// class index. Throws on an empty batch.
double accuracy(const Model& model, std::span<const double> features,
                std::span<const int> labels, std::size_t dim);
double accuracy(const Model& model, const Dataset& data);

} // namespace cema
