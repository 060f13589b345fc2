#include "cema/ema_policy.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "cema/io.hpp"

namespace cema {

EmaState init_ema(const ParamVector& initial_params, const EmaOptions& options) {
    if (!(options.clamp_value > 0.0 && options.clamp_value < 1.0)) {
        throw ConfigError("init_ema: clamp_value must lie in (0,1)");
    }
    if (!(options.fixed_beta >= 0.0 && options.fixed_beta <= 1.0)) {
        throw ConfigError("init_ema: fixed_beta must lie in [0,1]");
    }
    EmaState state;
    state.ema_params = initial_params;
    state.iteration = 0;
    state.options = options;
    return state;
}

double compute_beta_exact(double grad, double hess, double theta, double ema_prev) {
    const double denom = (theta - ema_prev) * hess;
    if (denom == 0.0 || !std::isfinite(denom)) {
        throw DegenerateInputError("compute_beta_exact: zero or non-finite denominator");
    }
    return (grad + 1.0) / denom;
}

FdHessian approx_hessian_fd(const ParamVector& grad_t, const ParamVector& grad_prev,
                            const ParamVector& theta_t, const ParamVector& theta_prev) {
    require_compatible(grad_t, grad_prev, "approx_hessian_fd");
    require_compatible(grad_t, theta_t, "approx_hessian_fd");
    require_compatible(grad_t, theta_prev, "approx_hessian_fd");

    FdHessian result;
    std::vector<double> values(grad_t.size());
    const auto gt = grad_t.values();
    const auto gp = grad_prev.values();
    const auto tt = theta_t.values();
    const auto tp = theta_prev.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double dtheta = tt[i] - tp[i];
        if (std::abs(dtheta) < kDenomEpsilon) {
            values[i] = 0.0;
            result.degenerate_indices.push_back(i);
        } else {
            values[i] = (gt[i] - gp[i]) / dtheta;
        }
    }
    if (!values.empty() && result.degenerate_indices.size() == values.size()) {
        throw DegenerateInputError(
            "approx_hessian_fd: parameter difference vanishes everywhere");
    }
    result.values = ParamVector(grad_t.layout(), std::move(values));
    return result;
}

BetaRecord compute_beta_layer(const LayerView& theta_t, const LayerView& theta_prev,
                              const LayerView& ema_prev, const LayerView& grad_t,
                              const LayerView& grad_prev, double clamp_value,
                              BetaAggregate aggregate) {
    const std::size_t n = theta_t.values.size();
    if (theta_prev.values.size() != n || ema_prev.values.size() != n ||
        grad_t.values.size() != n || grad_prev.values.size() != n) {
        throw IncompatibleLayoutError("compute_beta_layer: view lengths differ");
    }
    if (theta_prev.layer_name != theta_t.layer_name ||
        ema_prev.layer_name != theta_t.layer_name ||
        grad_t.layer_name != theta_t.layer_name ||
        grad_prev.layer_name != theta_t.layer_name) {
        throw IncompatibleLayoutError("compute_beta_layer: views from different layers");
    }

    BetaRecord rec;
    rec.layer_name = std::string(theta_t.layer_name);

    double num_norm = 0.0;
    double den_norm = 0.0;
    double mean_accum = 0.0;
    std::size_t mean_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double num_i = (theta_prev.values[i] - ema_prev.values[i]) *
                             (grad_t.values[i] + 1.0);
        const double den_i = (theta_t.values[i] - ema_prev.values[i]) *
                             (grad_t.values[i] - grad_prev.values[i]);
        num_norm += std::abs(num_i);
        den_norm += std::abs(den_i);
        if (std::abs(den_i) >= kDenomEpsilon) {
            mean_accum += std::abs(1.0 - num_i / den_i);
            ++mean_count;
        }
        rec.grad_prev_plus_one_norm += std::abs(grad_prev.values[i] + 1.0);
        rec.grad_diff_norm += std::abs(grad_t.values[i] - grad_prev.values[i]);
    }

    bool degenerate = false;
    if (aggregate == BetaAggregate::norm_ratio) {
        rec.beta_raw = std::abs(1.0 - num_norm / den_norm);
        degenerate = den_norm < kDenomEpsilon;
    } else {
        degenerate = mean_count == 0;
        rec.beta_raw = degenerate ? std::numeric_limits<double>::infinity()
                                  : mean_accum / static_cast<double>(mean_count);
    }

    const bool in_range = std::isfinite(rec.beta_raw) &&
                          rec.beta_raw > 0.0 && rec.beta_raw < 1.0;
    if (degenerate || !in_range) {
        rec.beta_applied = clamp_value;
        rec.clamped = true;
    } else {
        rec.beta_applied = rec.beta_raw;
        rec.clamped = false;
    }
    return rec;
}

std::vector<BetaRecord> step(EmaState& state, const ParamVector& current_params,
                             const ParamVector& current_grads) {
    require_compatible(state.ema_params, current_params, "step");
    require_compatible(state.ema_params, current_grads, "step");
    if (state.options.mode == BetaMode::exact_scalar) {
        throw ConfigError("step: exact_scalar mode has no history-based update; "
                          "use compute_beta_exact directly");
    }

    const bool have_history = state.prev_params.has_value();
    const auto& segments = state.ema_params.layout()->segments();
    std::vector<BetaRecord> records;
    records.reserve(segments.size());

    for (std::size_t s = 0; s < segments.size(); ++s) {
        BetaRecord rec;
        if (state.options.mode == BetaMode::fixed) {
            rec.layer_name = segments[s].name;
            rec.beta_raw = state.options.fixed_beta;
            rec.beta_applied = state.options.fixed_beta;
            rec.clamped = false;
        } else if (!have_history) {
            rec.layer_name = segments[s].name;
            rec.beta_raw = state.options.clamp_value;
            rec.beta_applied = state.options.clamp_value;
            rec.clamped = false;
        } else {
            rec = compute_beta_layer(current_params.view(s), state.prev_params->view(s),
                                     state.ema_params.view(s), current_grads.view(s),
                                     state.prev_grads->view(s), state.options.clamp_value,
                                     state.options.aggregate);
        }
        blend_segment(state.ema_params, current_params, rec.beta_applied,
                      segments[s].offset, segments[s].length);
        rec.iteration = state.iteration + 1;
        records.push_back(std::move(rec));
    }

    // Replacing the snapshots discards the previous iteration's storage.
    state.prev_params = current_params;
    state.prev_grads = current_grads;
    state.iteration += 1;
    return records;
}

ParamVector unroll_ema(const ParamVector& theta0, const std::vector<ParamVector>& thetas,
                       const std::vector<double>& betas) {
    if (thetas.size() != betas.size()) {
        throw ConfigError("unroll_ema: thetas and betas lengths differ");
    }
    const std::size_t t = thetas.size();
    // suffix[i] = prod_{j=i+1..t} beta_j (one-based), so suffix[t] = 1.
    std::vector<double> suffix(t + 1, 1.0);
    for (std::size_t i = t; i-- > 0;) {
        suffix[i] = suffix[i + 1] * betas[i];
    }

    std::vector<double> out(theta0.size());
    const auto t0 = theta0.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = suffix[0] * t0[k];
    for (std::size_t i = 0; i < t; ++i) {
        require_compatible(theta0, thetas[i], "unroll_ema");
        const double w = (1.0 - betas[i]) * suffix[i + 1];
        const auto ti = thetas[i].values();
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * ti[k];
    }
    return ParamVector(theta0.layout(), std::move(out));
}

DatasetHandoff finish_dataset(EmaState& state) {
    DatasetHandoff handoff{state.ema_params, state.ema_params};
    state.prev_params.reset();
    state.prev_grads.reset();
    state.iteration = 0;
    return handoff;
}

void write_beta_trace_csv(std::ostream& os, const BetaTrace& trace) {
    os << "iteration,layer,beta_raw,beta_applied,clamped\n";
    for (const auto& rec : trace) {
        os << rec.iteration << ',' << rec.layer_name << ','
           << format_double(rec.beta_raw) << ',' << format_double(rec.beta_applied)
           << ',' << (rec.clamped ? 1 : 0) << '\n';
    }
}

} // namespace cema
