#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cema/ema_policy.hpp"
#include "cema/rng.hpp"
#include "oracles.hpp"

using namespace cema;

namespace {

ParamVector make_vec(std::vector<double> values, const std::string& name = "x") {
    auto layout = ParamLayout::create({{name, values.size()}});
    return ParamVector(std::move(layout), std::move(values));
}

LayerView singleton_view(const ParamVector& v) { return v.view(0); }

} // namespace

TEST_CASE("init_ema deep-copies and starts at iteration 0") {
    ParamVector initial = make_vec({1, 2});
    EmaState state = init_ema(initial);
    CHECK(state.iteration == 0);
    CHECK(!state.prev_params.has_value());
    CHECK(!state.prev_grads.has_value());
    CHECK(state.ema_params == initial);

    initial[0] = 99.0; // the live model moves on; the average must not
    CHECK(state.ema_params[0] == 1.0);

    ParamVector empty(ParamLayout::create({}));
    EmaState empty_state = init_ema(empty);
    CHECK(empty_state.ema_params.size() == 0);

    EmaOptions bad;
    bad.clamp_value = 1.0;
    CHECK_THROWS_AS(init_ema(initial, bad), ConfigError);
}

TEST_CASE("compute_beta_exact substitution examples") {
    CHECK(compute_beta_exact(1.0, 1.0, 2.0, -2.0) == doctest::Approx(0.5));
    CHECK(compute_beta_exact(-1.0, 2.5, 1.0, 0.25) == 0.0);
    CHECK_THROWS_AS(compute_beta_exact(1.0, 0.0, 2.0, -2.0), DegenerateInputError);
    CHECK_THROWS_AS(compute_beta_exact(1.0, 1.0, 2.0, 2.0), DegenerateInputError);
}

TEST_CASE("computed weight is stationary for the constrained objective") {
    // Hand example first: grad=1, hess=1, theta=2, ema_prev=-2 -> beta=0.5.
    const double g = 1.0, h = 1.0, theta = 2.0, ema_prev = -2.0;
    const double beta = compute_beta_exact(g, h, theta, ema_prev);
    const double dt = oracles::consistent_delta_theta(beta, theta, ema_prev);
    const double lambda = oracles::consistent_lambda(beta, g, h, dt);
    auto f = [&](double b) {
        return oracles::lagrangian(b, g, h, theta, ema_prev, dt, lambda);
    };
    const double deriv = oracles::central_diff(f, beta, 2e-6);
    CHECK(std::abs(deriv) <= 1e-8);

    // Random instances with well-conditioned denominators.
    Rng rng(21);
    int done = 0;
    while (done < 200) {
        const double grad = rng.uniform(-3.0, 3.0);
        const double hess = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 3.0);
        const double th = rng.uniform(-3.0, 3.0);
        const double ep = th + (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 3.0);
        const double b = compute_beta_exact(grad, hess, th, ep);
        if (std::abs(b - 1.0) < 0.05 || std::abs(b) > 50.0) continue;
        ++done;
        const double dtr = oracles::consistent_delta_theta(b, th, ep);
        const double lam = oracles::consistent_lambda(b, grad, hess, dtr);
        auto fr = [&](double x) {
            return oracles::lagrangian(x, grad, hess, th, ep, dtr, lam);
        };
        const double d = oracles::central_diff(fr, b, 1e-6 * (1.0 + std::abs(b)));
        const double fval = fr(b);
        CHECK(std::abs(d) <= 1e-6 * (1.0 + std::abs(fval)));
    }
}

TEST_CASE("approx_hessian_fd is exact on quadratics") {
    Rng rng(22);
    auto layout = ParamLayout::create({{"x", 4}});
    oracles::QuadraticLoss loss{{2.0, -1.5, 0.7, 3.0}, {0.1, 0.0, -2.0, 1.0}};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> t_now(4), t_prev(4);
        for (std::size_t i = 0; i < 4; ++i) {
            t_prev[i] = rng.uniform(-2.0, 2.0);
            t_now[i] = t_prev[i] + (rng.uniform() < 0.5 ? -1.0 : 1.0) *
                                       rng.uniform(0.1, 1.0);
        }
        ParamVector theta_t(layout, t_now), theta_prev(layout, t_prev);
        ParamVector grad_t(layout, loss.grad(t_now));
        ParamVector grad_prev(layout, loss.grad(t_prev));
        auto fd = approx_hessian_fd(grad_t, grad_prev, theta_t, theta_prev);
        CHECK(fd.degenerate_indices.empty());
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(oracles::close(fd.values[i], loss.hess(i), 1e-12));
        }
    }

    // Quadratic L = 0.5 x^2: theta 2 -> 1, grads 2 -> 1, curvature exactly 1.
    auto one = approx_hessian_fd(make_vec({2.0}), make_vec({1.0}), make_vec({2.0}),
                                 make_vec({1.0}));
    CHECK(one.values[0] == 1.0);
}

TEST_CASE("approx_hessian_fd degenerate handling") {
    auto layout = ParamLayout::create({{"x", 2}});
    ParamVector same(layout, {1.0, 2.0});
    ParamVector g1(layout, {0.5, 0.5}), g2(layout, {0.7, 0.1});
    CHECK_THROWS_AS(approx_hessian_fd(g1, g2, same, same), DegenerateInputError);

    // Constant gradient, moving parameters: zero curvature.
    ParamVector moved(layout, {2.0, 3.0});
    auto fd = approx_hessian_fd(g1, g1, moved, same);
    CHECK(fd.values[0] == 0.0);
    CHECK(fd.values[1] == 0.0);

    // One stuck coordinate is flagged, the other computed.
    ParamVector half(layout, {1.0, 3.0});
    auto part = approx_hessian_fd(g1, g2, half, same);
    REQUIRE(part.degenerate_indices.size() == 1);
    CHECK(part.degenerate_indices[0] == 0);
    CHECK(part.values[0] == 0.0);
    CHECK(part.values[1] == doctest::Approx(0.4));
}

TEST_CASE("compute_beta_layer hand substitutions") {
    const double clamp = 0.99;

    // theta_prev == ema_prev: numerator vanishes, raw weight 1, clamped.
    {
        auto rec = compute_beta_layer(singleton_view(make_vec({2.0})),
                                      singleton_view(make_vec({3.0})),
                                      singleton_view(make_vec({3.0})),
                                      singleton_view(make_vec({0.4})),
                                      singleton_view(make_vec({0.1})), clamp);
        CHECK(rec.beta_raw == doctest::Approx(1.0));
        CHECK(rec.beta_applied == doctest::Approx(clamp));
        CHECK(rec.clamped);
    }

    // (theta_prev-ema_prev)=2, (grad_t+1)=1.5, (theta_t-ema_prev)=1,
    // (grad_t-grad_prev)=-1 -> raw |1 - 3/1| = 2 -> clamped.
    {
        auto rec = compute_beta_layer(singleton_view(make_vec({1.0})),
                                      singleton_view(make_vec({2.0})),
                                      singleton_view(make_vec({0.0})),
                                      singleton_view(make_vec({0.5})),
                                      singleton_view(make_vec({1.5})), clamp);
        CHECK(rec.beta_raw == doctest::Approx(2.0));
        CHECK(rec.beta_applied == doctest::Approx(clamp));
        CHECK(rec.clamped);
    }

    // (theta_prev-ema_prev)=0.1, (grad_t+1)=1, (theta_t-ema_prev)=1,
    // (grad_t-grad_prev)=-0.5 -> raw |1 - 0.2| = 0.8, kept.
    {
        auto rec = compute_beta_layer(singleton_view(make_vec({1.0})),
                                      singleton_view(make_vec({0.1})),
                                      singleton_view(make_vec({0.0})),
                                      singleton_view(make_vec({0.0})),
                                      singleton_view(make_vec({0.5})), clamp);
        CHECK(rec.beta_raw == doctest::Approx(0.8));
        CHECK(rec.beta_applied == doctest::Approx(0.8));
        CHECK(!rec.clamped);
    }
}

TEST_CASE("compute_beta_layer resolves degenerate denominators to the clamp") {
    auto zero = make_vec({0.0, 0.0}, "w");
    auto ones = make_vec({1.0, -1.0}, "w");
    auto rec = compute_beta_layer(zero.view(0), ones.view(0), zero.view(0),
                                  zero.view(0), zero.view(0), 0.97);
    CHECK(rec.beta_applied == doctest::Approx(0.97));
    CHECK(rec.clamped);
}

TEST_CASE("clamp totality under fuzzing") {
    Rng rng(23);
    auto draw = [&]() -> double {
        const double pick = rng.uniform();
        if (pick < 0.15) return 0.0;
        if (pick < 0.3) return rng.uniform(-1e-15, 1e-15);
        if (pick < 0.45) return rng.uniform(-1e-3, 1e-3);
        if (pick < 0.9) return rng.uniform(-10.0, 10.0);
        return rng.uniform(-1e80, 1e80);
    };
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(4);
        std::vector<double> tt(n), tp(n), ep(n), gt(n), gp(n);
        for (std::size_t i = 0; i < n; ++i) {
            tt[i] = draw(); tp[i] = draw(); ep[i] = draw();
            gt[i] = draw(); gp[i] = draw();
        }
        auto layout = ParamLayout::create({{"w", n}});
        ParamVector vtt(layout, tt), vtp(layout, tp), vep(layout, ep),
            vgt(layout, gt), vgp(layout, gp);
        const auto aggregate = trial % 2 == 0 ? BetaAggregate::norm_ratio
                                              : BetaAggregate::elementwise_mean;
        auto rec = compute_beta_layer(vtt.view(0), vtp.view(0), vep.view(0),
                                      vgt.view(0), vgp.view(0), 0.99, aggregate);
        CHECK(std::isfinite(rec.beta_applied));
        CHECK(rec.beta_applied > 0.0);
        CHECK(rec.beta_applied < 1.0);
        const bool raw_in_range = std::isfinite(rec.beta_raw) &&
                                  rec.beta_raw > 0.0 && rec.beta_raw < 1.0;
        if (!raw_in_range) CHECK(rec.clamped);
        if (!rec.clamped) {
            CHECK(raw_in_range);
            CHECK(rec.beta_applied == rec.beta_raw);
        }
    }
}

TEST_CASE("step with a fixed weight follows the scalar update") {
    EmaOptions fixed;
    fixed.mode = BetaMode::fixed;
    fixed.fixed_beta = 0.5;
    EmaState state = init_ema(make_vec({0.0}), fixed);
    auto records = step(state, make_vec({2.0}), make_vec({0.1}));
    CHECK(state.ema_params[0] == doctest::Approx(1.0));
    REQUIRE(records.size() == 1);
    CHECK(records[0].beta_applied == 0.5);
    CHECK(records[0].iteration == 1);
    CHECK(state.iteration == 1);
}

TEST_CASE("fixed weight of one is the do-nothing fixed point") {
    EmaOptions fixed;
    fixed.mode = BetaMode::fixed;
    fixed.fixed_beta = 1.0;
    EmaState state = init_ema(make_vec({3.0, -1.0}), fixed);
    Rng rng(24);
    for (int i = 0; i < 20; ++i) {
        step(state, make_vec({rng.uniform(-5, 5), rng.uniform(-5, 5)}),
             make_vec({rng.uniform(-1, 1), rng.uniform(-1, 1)}));
    }
    CHECK(state.ema_params[0] == 3.0);
    CHECK(state.ema_params[1] == -1.0);
}

TEST_CASE("two practical steps reproduce the layer-formula composition") {
    auto theta0 = make_vec({1.0});
    EmaState state = init_ema(theta0);

    auto p1 = make_vec({2.0});
    auto g1 = make_vec({1.5});
    auto rec1 = step(state, p1, g1);
    // First recorded iteration falls back to the clamp value.
    const double ema1 = 0.99 * 1.0 + 0.01 * 2.0;
    CHECK(state.ema_params[0] == doctest::Approx(ema1));
    CHECK(rec1[0].beta_applied == doctest::Approx(0.99));

    auto p2 = make_vec({1.0});
    auto g2 = make_vec({0.5});
    auto expected = compute_beta_layer(p2.view(0), p1.view(0),
                                       state.ema_params.view(0), g2.view(0),
                                       g1.view(0), 0.99);
    auto rec2 = step(state, p2, g2);
    CHECK(rec2[0].beta_raw == doctest::Approx(expected.beta_raw));
    CHECK(rec2[0].beta_applied == doctest::Approx(expected.beta_applied));
    const double ema2 = expected.beta_applied * ema1 +
                        (1.0 - expected.beta_applied) * 1.0;
    CHECK(state.ema_params[0] == doctest::Approx(ema2));
    CHECK(state.iteration == 2);
    CHECK(rec2[0].iteration == 2);
}

TEST_CASE("step validates layouts and rejects the analytic mode") {
    EmaState state = init_ema(make_vec({1.0, 2.0}, "a"));
    auto other = make_vec({1.0}, "b");
    CHECK_THROWS_AS(step(state, other, other), IncompatibleLayoutError);

    EmaOptions exact;
    exact.mode = BetaMode::exact_scalar;
    EmaState exact_state = init_ema(make_vec({1.0}), exact);
    auto v = make_vec({1.0});
    CHECK_THROWS_AS(step(exact_state, v, v), ConfigError);
}

TEST_CASE("unroll_ema worked example") {
    auto theta0 = make_vec({1.0});
    std::vector<ParamVector> thetas = {make_vec({2.0}), make_vec({3.0})};
    std::vector<double> betas = {0.5, 0.5};
    auto closed = unroll_ema(theta0, thetas, betas);
    CHECK(closed[0] == doctest::Approx(2.25));

    auto iter = oracles::iterative_ema({1.0}, {{2.0}, {3.0}}, betas);
    CHECK(iter[0] == doctest::Approx(2.25));

    CHECK(unroll_ema(theta0, {}, {}) == theta0);

    std::vector<double> zeros = {0.0, 0.0};
    CHECK(unroll_ema(theta0, thetas, zeros)[0] == 3.0);

    CHECK_THROWS_AS(unroll_ema(theta0, thetas, {0.5}), ConfigError);
}

TEST_CASE("unroll identity against the iterative loop") {
    Rng rng(25);
    auto layout = ParamLayout::create({{"w", 3}});
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t = rng.uniform_index(51);
        std::vector<double> theta0(3);
        for (auto& x : theta0) x = rng.uniform(-5.0, 5.0);
        std::vector<std::vector<double>> raw_thetas(t, std::vector<double>(3));
        std::vector<ParamVector> thetas;
        std::vector<double> betas(t);
        for (std::size_t i = 0; i < t; ++i) {
            for (auto& x : raw_thetas[i]) x = rng.uniform(-5.0, 5.0);
            thetas.emplace_back(layout, raw_thetas[i]);
            betas[i] = rng.uniform(0.0, 1.0);
        }
        auto closed = unroll_ema(ParamVector(layout, theta0), thetas, betas);
        auto iter = oracles::iterative_ema(theta0, raw_thetas, betas);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(oracles::close(closed[k], iter[k], 1e-10));
        }
    }
}

TEST_CASE("updates stay inside the segmentwise interval hull") {
    Rng rng(26);
    auto layout = ParamLayout::create({{"w", 4}, {"b", 2}});
    std::vector<double> start(6);
    for (auto& x : start) x = rng.uniform(-3.0, 3.0);
    EmaState state = init_ema(ParamVector(layout, start));
    for (int it = 0; it < 60; ++it) {
        std::vector<double> params(6), grads(6);
        for (auto& x : params) x = rng.uniform(-3.0, 3.0);
        for (auto& x : grads) x = rng.uniform(-1.0, 1.0);
        ParamVector p(layout, params), g(layout, grads);
        ParamVector before = state.ema_params;
        step(state, p, g);
        for (std::size_t i = 0; i < 6; ++i) {
            const double lo = std::min(before[i], p[i]);
            const double hi = std::max(before[i], p[i]);
            CHECK(state.ema_params[i] >= lo - 1e-12);
            CHECK(state.ema_params[i] <= hi + 1e-12);
        }
    }
}

TEST_CASE("relaxation constraint closes for the blended update") {
    Rng rng(27);
    for (int trial = 0; trial < 200; ++trial) {
        const double ema_prev = rng.uniform(-5.0, 5.0);
        const double theta = rng.uniform(-5.0, 5.0);
        const double beta = rng.uniform(0.0, 1.0);
        auto updated = blend(make_vec({ema_prev}), make_vec({theta}), beta);
        const double delta_theta = (ema_prev - theta) * (beta - 1.0);
        const double residual = delta_theta + ema_prev - updated[0];
        CHECK(oracles::close(residual, 0.0, 1e-10));
    }
}

TEST_CASE("finish_dataset hands off copies and resets iteration state") {
    EmaState state = init_ema(make_vec({5.0}));
    auto h = finish_dataset(state);
    CHECK(h.checkpoint[0] == 5.0);
    CHECK(h.next_init[0] == 5.0);
    CHECK(state.iteration == 0);
    CHECK(!state.prev_params.has_value());

    // Idempotent without intervening steps.
    auto h2 = finish_dataset(state);
    CHECK(h2.checkpoint == h.checkpoint);

    // After the reset, the next step behaves like a first iteration.
    step(state, make_vec({1.0}), make_vec({0.2}));
    step(state, make_vec({2.0}), make_vec({0.3}));
    auto h3 = finish_dataset(state);
    auto again = step(state, make_vec({3.0}), make_vec({0.4}));
    CHECK(again[0].beta_applied == doctest::Approx(0.99));
    CHECK(state.ema_params[0] ==
          doctest::Approx(0.99 * h3.checkpoint[0] + 0.01 * 3.0));
}

TEST_CASE("records expose the dropped-term audit norms") {
    // The layerwise formula discards a ||grad_prev + 1|| / ||grad diff||
    // term; the record carries both norms so that call can be audited.
    auto rec = compute_beta_layer(singleton_view(make_vec({1.0})),
                                  singleton_view(make_vec({2.0})),
                                  singleton_view(make_vec({0.0})),
                                  singleton_view(make_vec({0.5})),
                                  singleton_view(make_vec({1.5})), 0.99);
    CHECK(rec.grad_prev_plus_one_norm == doctest::Approx(2.5));
    CHECK(rec.grad_diff_norm == doctest::Approx(1.0));
}

TEST_CASE("beta trace CSV has the pinned header and one row per record") {
    BetaTrace trace;
    trace.push_back({1, "W0", 1.5, 0.99, true, 0.0, 0.0});
    trace.push_back({1, "b0", 0.8, 0.8, false, 0.0, 0.0});
    std::stringstream ss;
    write_beta_trace_csv(ss, trace);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "iteration,layer,beta_raw,beta_applied,clamped");
    std::getline(ss, line);
    CHECK(line == "1,W0,1.5,0.99,1");
    std::getline(ss, line);
    CHECK(line == "1,b0,0.8,0.8,0");
}
