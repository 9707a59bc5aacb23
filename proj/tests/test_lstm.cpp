#include <cmath>
#include <vector>

#include "doctest.h"
#include "dualclass/lstm.hpp"
#include "dualclass/random.hpp"

using namespace dualclass;

namespace {

FeatureSample random_sample(std::size_t steps, std::size_t width, Rng& rng) {
    FeatureSample s;
    for (std::size_t l = 0; l < steps; ++l) {
        std::vector<double> x(width);
        for (auto& v : x) {
            v = rng.uniform(-1.0, 1.0);
        }
        s.inputs.push_back(x);
    }
    s.target = rng.uniform(-1.0, 1.0);
    return s;
}

LstmParams random_params(std::size_t h, std::size_t d, Rng& rng) {
    LstmParams p = LstmParams::zeros(h, d);
    for (auto g : p.groups()) {
        for (auto& v : g) {
            v = rng.uniform(-0.8, 0.8);
        }
    }
    return p;
}

}  // namespace

TEST_CASE("zero parameters") {
    const auto p = LstmParams::zeros(3, 2);
    const auto r = lstm_cell_forward(p, std::vector<double>{0.7, -2.0}, LstmState::zeros(3));
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(r.cache.forget[k] == 0.5);
        CHECK(r.cache.input[k] == 0.5);
        CHECK(r.cache.output[k] == 0.5);
        CHECK(r.cache.candidate[k] == 0.0);
        CHECK(r.state.c[k] == 0.0);
        CHECK(r.state.h[k] == 0.0);
    }

    const auto one = LstmParams::zeros(1, 1);
    const auto carried = lstm_cell_forward(one, std::vector<double>{0.3}, LstmState{{0.0}, {1.0}});
    CHECK(std::fabs(carried.state.c[0] - 0.5) < 1e-12);
    CHECK(std::fabs(carried.state.h[0] - 0.5 * std::tanh(0.5)) < 1e-12);
    CHECK(std::fabs(carried.state.h[0] - 0.231059) < 1e-6);

    auto head = LstmParams::zeros(2, 1);
    head.head_b = 0.37;
    const std::vector<std::vector<double>> seq{{1.0}, {2.0}, {3.0}};
    CHECK(forward_sequence(head, seq).prediction == 0.37);
}

TEST_CASE("saturated gates pass the candidate through") {
    auto p = LstmParams::zeros(1, 1);
    p.b_input[0] = 20.0;
    p.b_forget[0] = -20.0;
    p.w_cell(0, 1) = 1.0;
    for (double x : {-2.0, -0.5, 0.0, 0.3, 1.5}) {
        const auto r = lstm_cell_forward(p, std::vector<double>{x}, LstmState::zeros(1));
        CHECK(std::fabs(r.state.c[0] - std::tanh(x)) < 1e-8);
    }
}

TEST_CASE("single step sequence equals cell plus head") {
    Rng rng(4);
    const auto p = random_params(3, 2, rng);
    const std::vector<std::vector<double>> seq{{0.2, -0.4}};
    const auto cell = lstm_cell_forward(p, seq[0], LstmState::zeros(3));
    double expect = p.head_b;
    for (std::size_t k = 0; k < 3; ++k) {
        expect += p.head_w[k] * cell.state.h[k];
    }
    CHECK(forward_sequence(p, seq).prediction == expect);
}

TEST_CASE("forward rejects non-finite input") {
    const auto p = LstmParams::zeros(2, 1);
    CHECK_THROWS(lstm_cell_forward(p, std::vector<double>{std::nan("")}, LstmState::zeros(2)));
}

TEST_CASE("analytic gradients match central differences") {
    Rng rng(2024);
    const double step = 1e-5;
    double worst = 0.0;
    for (int instance = 0; instance < 50; ++instance) {
        const std::size_t h = 1 + rng.below(4);
        const std::size_t d = 1 + rng.below(3);
        const std::size_t steps = 1 + rng.below(6);
        LstmParams p = random_params(h, d, rng);
        const auto sample = random_sample(steps, d, rng);
        const auto fwd = forward_sequence(p, sample);
        // loss = 0.5 (prediction - target)^2
        const double err = fwd.prediction - sample.target;
        const auto grad = backward(p, sample, fwd.cache, err);
        auto loss = [&](const LstmParams& q) {
            const double e = forward_sequence(q, sample).prediction - sample.target;
            return 0.5 * e * e;
        };
        auto params = p.groups();
        const auto grads = grad.groups();
        REQUIRE(params.size() == grads.size());
        for (std::size_t g = 0; g < params.size(); ++g) {
            for (std::size_t i = 0; i < params[g].size(); ++i) {
                const double saved = params[g][i];
                params[g][i] = saved + step;
                const double up = loss(p);
                params[g][i] = saved - step;
                const double down = loss(p);
                params[g][i] = saved;
                const double numeric = (up - down) / (2.0 * step);
                const double analytic = grads[g][i];
                const double rel =
                    std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
                worst = std::max(worst, rel);
            }
        }
        CHECK(grad.head_b == err);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("zero loss gradient gives zero gradients") {
    Rng rng(8);
    const auto p = random_params(3, 2, rng);
    const auto sample = random_sample(4, 2, rng);
    const auto grad = backward(p, sample, forward_sequence(p, sample).cache, 0.0);
    for (auto g : grad.groups()) {
        for (double v : g) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("initialization") {
    const auto p = LstmParams::initialize(16, 3, 1);
    const double bound = 1.0 / std::sqrt(19.0);
    for (double v : p.w_forget.data) {
        CHECK(std::fabs(v) <= bound);
    }
    for (double v : p.b_forget) {
        CHECK(v == 1.0);
    }
    CHECK(p.parameter_count() == 4 * (16 * 19 + 16) + 16 + 1);
    CHECK(LstmParams::initialize(16, 3, 1) == p);
    CHECK_FALSE(LstmParams::initialize(16, 3, 2) == p);
}

TEST_CASE("training") {
    Rng rng(3);
    std::vector<FeatureSample> samples;
    for (int i = 0; i < 40; ++i) {
        auto s = random_sample(4, 1, rng);
        s.target = 0.42;
        samples.push_back(s);
    }
    TrainConfig cfg;
    cfg.seed = 77;
    const auto fit = train(samples, cfg);
    CHECK(fit.loss_trace.size() == cfg.epochs);
    double mse = 0.0;
    for (const auto& s : samples) {
        const double e = forward_sequence(fit.params, s).prediction - s.target;
        mse += e * e;
    }
    CHECK(mse / samples.size() < 1e-4);

    const auto again = train(samples, cfg);
    CHECK(again.params == fit.params);
    CHECK(again.loss_trace == fit.loss_trace);

    cfg.seed = 78;
    CHECK_FALSE(train(samples, cfg).params == fit.params);

    cfg.epochs = 0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("divergence is reported") {
    Rng rng(5);
    std::vector<FeatureSample> samples{random_sample(3, 1, rng)};
    samples[0].target = 1e308;
    TrainConfig cfg;
    cfg.epochs = 5;
    CHECK_THROWS_AS(train(samples, cfg), TrainingDiverged);
}
