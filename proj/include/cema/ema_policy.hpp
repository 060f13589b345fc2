#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cema/params.hpp"

namespace cema {

// How the EMA blend weight is chosen at each iteration.
//
// exact_scalar is the analytic per-parameter rule requiring a true second
// derivative; it exists as a standalone function for verification against
// analytic losses and is rejected by step(). Training uses
// practical_layerwise (one weight per layer segment, gradient-history
// approximation) or fixed.
enum class BetaMode { exact_scalar, practical_layerwise, fixed };

// Reduction from per-element numerator/denominator products to one scalar
// weight per layer. norm_ratio is the default: |1 - ||num||_1 / ||den||_1|,
// scale-free in the layer width. elementwise_mean instead averages
// |1 - num_i / den_i| over elements with non-degenerate denominators.
enum class BetaAggregate { norm_ratio, elementwise_mean };

// Denominators with L1 norm (or per-element magnitude) below this resolve
// to the clamp value rather than an exploding weight.
inline constexpr double kDenomEpsilon = 1e-12;

// One computed blend weight. beta_raw is the unclamped formula value and
// may be non-finite when the denominator vanishes exactly; beta_applied is
// what the update used. Records from the fixed mode carry the constant and
// are never marked clamped. The two norm fields expose the size of the
// gradient term the layerwise formula drops, so that assumption can be
// audited from the trace.
struct BetaRecord {
    std::size_t iteration = 0;
    std::string layer_name;
    double beta_raw = 0.0;
    double beta_applied = 0.0;
    bool clamped = false;
    double grad_prev_plus_one_norm = 0.0;
    double grad_diff_norm = 0.0;
};

using BetaTrace = std::vector<BetaRecord>;

struct EmaOptions {
    BetaMode mode = BetaMode::practical_layerwise;
    double clamp_value = 0.99;
    double fixed_beta = 0.99;
    BetaAggregate aggregate = BetaAggregate::norm_ratio;
};

// Persistent policy state across iterations: the moving-average parameters,
// the previous iteration's snapshots, and the iteration counter (reset per
// dataset; the averaged parameters persist across datasets).
struct EmaState {
    ParamVector ema_params;
    std::optional<ParamVector> prev_params;
    std::optional<ParamVector> prev_grads;
    std::size_t iteration = 0;
    EmaOptions options;
};

// Deep-copies the initial parameters into the averaged set (lifecycle step
// one). clamp_value must lie in (0,1); fixed_beta in [0,1].
EmaState init_ema(const ParamVector& initial_params, const EmaOptions& options = {});

// Analytic scalar weight: (grad + 1) / ((theta - ema_prev) * hess).
// Raw value, no clamping. Throws DegenerateInputError on a zero or
// non-finite denominator.
double compute_beta_exact(double grad, double hess, double theta, double ema_prev);

// Elementwise secant approximation of the loss curvature:
// (grad_t - grad_prev) / (theta_t - theta_prev). Entries whose parameter
// difference is below kDenomEpsilon are zeroed and their indices reported.
struct FdHessian {
    ParamVector values;
    std::vector<std::size_t> degenerate_indices;
};
FdHessian approx_hessian_fd(const ParamVector& grad_t, const ParamVector& grad_prev,
                            const ParamVector& theta_t, const ParamVector& theta_prev);

// One layer's blend weight from parameter/gradient history:
//
//   raw = | 1 - ||(theta_prev - ema_prev) .* (grad_t + 1)||_1
//             / ||(theta_t  - ema_prev) .* (grad_t - grad_prev)||_1 |
//
// applied = raw if raw in (0,1), else clamp_value. A denominator below
// kDenomEpsilon also resolves to clamp_value. All views must come from the
// same layer (equal lengths, same name).
BetaRecord compute_beta_layer(const LayerView& theta_t, const LayerView& theta_prev,
                              const LayerView& ema_prev, const LayerView& grad_t,
                              const LayerView& grad_prev, double clamp_value,
                              BetaAggregate aggregate = BetaAggregate::norm_ratio);

// One lifecycle iteration: compute a weight per layer (clamp_value for every
// layer on the first recorded iteration, when no snapshots exist), fold the
// current parameters into the average, replace the snapshots, advance the
// counter. Returns the per-layer records, iteration-stamped.
std::vector<BetaRecord> step(EmaState& state, const ParamVector& current_params,
                             const ParamVector& current_grads);

// Closed-form unrolled average:
//   (prod_i beta_i) * theta0 + sum_i (1 - beta_i) (prod_{j>i} beta_j) theta_i.
// Oracle counterpart of iterating step's blend.
ParamVector unroll_ema(const ParamVector& theta0, const std::vector<ParamVector>& thetas,
                       const std::vector<double>& betas);

// Dataset-boundary bookkeeping: snapshot the averaged parameters for saving
// and for seeding the next dataset's live parameters, drop iteration state.
// The averaged parameters themselves carry over.
struct DatasetHandoff {
    ParamVector checkpoint;
    ParamVector next_init;
};
DatasetHandoff finish_dataset(EmaState& state);

// CSV export, one row per (iteration, layer):
//   iteration,layer,beta_raw,beta_applied,clamped
void write_beta_trace_csv(std::ostream& os, const BetaTrace& trace);

} // namespace cema
