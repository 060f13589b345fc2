#include "cema/tinynet.hpp"

#include <cmath>
#include <string>

#include "cema/rng.hpp"

namespace cema {

namespace {

void validate_spec(const NetSpec& spec) {
    if (spec.layer_sizes.size() < 2) {
        throw ConfigError("NetSpec: need at least input and output sizes");
    }
    for (std::size_t s : spec.layer_sizes) {
        if (s < 1) throw ConfigError("NetSpec: every layer size must be >= 1");
    }
}

double activate(Activation a, double x) {
    return a == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

// Derivative expressed through the activation output.
double activate_grad(Activation a, double y) {
    return a == Activation::relu ? (y > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

struct Forward {
    // activations[0] is the input batch; activations[l+1] the output of
    // layer l (post-activation for hidden layers, raw logits for the last).
    std::vector<std::vector<double>> activations;
};

Forward forward_pass(const Model& model, std::span<const double> features,
                     std::size_t n) {
    const auto& sizes = model.spec.layer_sizes;
    const std::size_t num_layers = sizes.size() - 1;
    const auto params = model.params.values();

    Forward fwd;
    fwd.activations.resize(num_layers + 1);
    fwd.activations[0].assign(features.begin(), features.end());

    std::size_t offset = 0;
    for (std::size_t l = 0; l < num_layers; ++l) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const double* w = params.data() + offset;
        const double* b = params.data() + offset + in * out;
        offset += in * out + out;

        const auto& x = fwd.activations[l];
        auto& y = fwd.activations[l + 1];
        y.assign(n * out, 0.0);
        const bool last = l + 1 == num_layers;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < out; ++j) {
                double z = b[j];
                for (std::size_t k = 0; k < in; ++k) {
                    z += x[i * in + k] * w[k * out + j];
                }
                y[i * out + j] = last ? z : activate(model.spec.activation, z);
            }
        }
    }
    return fwd;
}

// Softmax probabilities of one logit row, max-subtracted for stability.
void softmax_row(const double* logits, std::size_t c, std::vector<double>& probs) {
    double m = logits[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, logits[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        probs[j] = std::exp(logits[j] - m);
        denom += probs[j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[j] /= denom;
}

} // namespace

LayoutPtr make_net_layout(const NetSpec& spec) {
    validate_spec(spec);
    std::vector<std::pair<std::string, std::size_t>> named;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::string idx = std::to_string(l);
        named.emplace_back("W" + idx, spec.layer_sizes[l] * spec.layer_sizes[l + 1]);
        named.emplace_back("b" + idx, spec.layer_sizes[l + 1]);
    }
    return ParamLayout::create(std::move(named));
}

Model init_model(const NetSpec& spec) {
    auto layout = make_net_layout(spec);
    std::vector<double> values(layout->total_size(), 0.0);
    Rng rng(spec.init_seed);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        const double a = std::sqrt(6.0 / static_cast<double>(in + out));
        for (std::size_t k = 0; k < in * out; ++k) {
            values[offset + k] = rng.uniform(-a, a);
        }
        offset += in * out + out; // biases stay zero
    }
    return Model{spec, ParamVector(std::move(layout), std::move(values))};
}

LossGrad loss_and_grad(const Model& model, std::span<const double> features,
                       std::span<const int> labels, std::size_t dim) {
    const auto& sizes = model.spec.layer_sizes;
    if (dim != sizes.front()) {
        throw ConfigError("loss_and_grad: feature width does not match input layer");
    }
    const std::size_t n = labels.size();
    if (n == 0 || features.size() != n * dim) {
        throw ConfigError("loss_and_grad: feature/label sizes inconsistent");
    }
    const int classes = static_cast<int>(sizes.back());
    for (int label : labels) {
        if (label < 0 || label >= classes) {
            throw ConfigError("loss_and_grad: label out of range");
        }
    }

    const std::size_t num_layers = sizes.size() - 1;
    const Forward fwd = forward_pass(model, features, n);
    const auto& logits = fwd.activations[num_layers];
    const std::size_t c = sizes.back();

    double loss = 0.0;
    // delta holds dLoss/d(logits), mean reduction folded in.
    std::vector<double> delta(n * c);
    std::vector<double> probs(c);
    for (std::size_t i = 0; i < n; ++i) {
        softmax_row(logits.data() + i * c, c, probs);
        const int y = labels[i];
        loss -= std::log(std::max(probs[y], 1e-300));
        for (std::size_t j = 0; j < c; ++j) {
            delta[i * c + j] = (probs[j] - (static_cast<int>(j) == y ? 1.0 : 0.0)) /
                               static_cast<double>(n);
        }
    }
    loss /= static_cast<double>(n);

    ParamVector grads(model.params.layout(), 0.0);
    auto g = grads.values_mut();
    const auto params = model.params.values();

    // Segment offsets per layer: W_l then b_l.
    std::vector<std::size_t> w_offsets(num_layers);
    {
        std::size_t offset = 0;
        for (std::size_t l = 0; l < num_layers; ++l) {
            w_offsets[l] = offset;
            offset += sizes[l] * sizes[l + 1] + sizes[l + 1];
        }
    }

    std::vector<double> next_delta;
    for (std::size_t l = num_layers; l-- > 0;) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const double* x = fwd.activations[l].data();
        double* gw = g.data() + w_offsets[l];
        double* gb = gw + in * out;

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < out; ++j) {
                const double d = delta[i * out + j];
                gb[j] += d;
                for (std::size_t k = 0; k < in; ++k) {
                    gw[k * out + j] += x[i * in + k] * d;
                }
            }
        }

        if (l == 0) break;
        const double* w = params.data() + w_offsets[l];
        next_delta.assign(n * in, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < in; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < out; ++j) {
                    s += w[k * out + j] * delta[i * out + j];
                }
                next_delta[i * in + k] =
                    s * activate_grad(model.spec.activation, x[i * in + k]);
            }
        }
        delta.swap(next_delta);
    }

    return LossGrad{loss, std::move(grads)};
}

LossGrad loss_and_grad(const Model& model, const Batch& batch) {
    return loss_and_grad(model, batch.features, batch.labels, batch.dim);
}

void sgd_step(Model& model, const ParamVector& grads, double lr) {
    if (lr < 0.0) throw ConfigError("sgd_step: learning rate must be >= 0");
    model.params.axpy(-lr, grads);
}

double accuracy(const Model& model, std::span<const double> features,
                std::span<const int> labels, std::size_t dim) {
    const auto& sizes = model.spec.layer_sizes;
    if (dim != sizes.front()) {
        throw ConfigError("accuracy: feature width does not match input layer");
    }
    const std::size_t n = labels.size();
    if (n == 0) throw ConfigError("accuracy: empty batch");
    if (features.size() != n * dim) {
        throw ConfigError("accuracy: feature/label sizes inconsistent");
    }

    const Forward fwd = forward_pass(model, features, n);
    const auto& logits = fwd.activations.back();
    const std::size_t c = sizes.back();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (logits[i * c + j] > logits[i * c + best]) best = j;
        }
        if (static_cast<int>(best) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

double accuracy(const Model& model, const Dataset& data) {
    return accuracy(model, data.features, data.labels, data.dim);
}

} // namespace cema
