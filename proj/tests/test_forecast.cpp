#include <cmath>
#include <vector>

#include "doctest.h"
#include "dualclass/forecast.hpp"
#include "dualclass/random.hpp"

using namespace dualclass;

namespace {

std::vector<double> walk(std::size_t n, std::uint64_t seed, double start = 20.0) {
    Rng rng(seed);
    std::vector<double> x(n);
    double v = start;
    for (auto& p : x) {
        v *= std::exp(0.01 * rng.normal());
        p = v;
    }
    return x;
}

ForecastSpec spec_for(RegimeSpec regime, std::size_t lag, bool dual, std::size_t epochs = 30) {
    ForecastSpec s;
    s.ticker = "X";
    s.lag = lag;
    s.include_dual = dual;
    s.regime = regime;
    s.train.epochs = epochs;
    s.train.hidden_size = 4;
    s.train.seed = 99;
    return s;
}

}  // namespace

TEST_CASE("price scaling") {
    CHECK(scale_price(100.0) == 0.0);
    CHECK(scale_price(50.0) == -0.5);
    CHECK(unscale(scale_price(27.53)) == 27.53);
    CHECK(unscale(0.0) == 100.0);
    CHECK(unscale(-1.0) == 0.0);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double p = rng.uniform(0.01, 500.0);
        CHECK(std::fabs(unscale(scale_price(p)) - p) < 1e-12);
    }
    CHECK(exceeds_scale_ceiling(200.0));
    CHECK_FALSE(exceeds_scale_ceiling(199.99));
    CHECK_THROWS(scale_price(0.0));
}

TEST_CASE("supervised samples") {
    const std::vector<double> own{1, 2, 3, 4, 5, 6};
    const auto s = build_supervised(own, std::nullopt, 4, false);
    REQUIRE(s.size() == 2);
    for (const auto& sample : s) {
        CHECK(sample.inputs.size() == 4);
        for (const auto& step : sample.inputs) {
            CHECK(step.size() == 1);
        }
    }
    CHECK(s[0].target == 5.0);
    CHECK(s[0].target_index == 4);
    CHECK(s[0].inputs.front()[0] == 1.0);
    CHECK(s[1].inputs.back()[0] == 5.0);

    const auto own12 = walk(12, 1);
    const auto a = walk(12, 2);
    const auto b = walk(12, 3);
    const auto dual = build_supervised(own12, Siblings{a, b}, 9, true);
    REQUIRE(dual.size() == 3);
    CHECK(dual[0].inputs.size() == 9);
    CHECK(dual[0].inputs[0] == std::vector<double>{own12[0], a[0], b[0]});

    CHECK_THROWS_AS(build_supervised(own, std::nullopt, 6, false), InsufficientData);
    CHECK_THROWS(build_supervised(own, std::nullopt, 2, true));
}

TEST_CASE("supervised samples are causal") {
    const auto base = walk(30, 4);
    const auto before = build_supervised(base, std::nullopt, 4, false);
    for (std::size_t t = 4; t + 1 < base.size(); ++t) {
        auto poisoned = base;
        poisoned[t + 1] += 1000.0;
        const auto after = build_supervised(poisoned, std::nullopt, 4, false);
        for (std::size_t i = 0; i < before.size(); ++i) {
            if (before[i].target_index <= t) {
                CHECK(after[i].inputs == before[i].inputs);
                CHECK(after[i].target == before[i].target);
            }
        }
    }
}

TEST_CASE("mece bookkeeping") {
    const auto own = walk(5582, 5);
    const auto run = forecast_mece({own, std::nullopt, {}}, spec_for(RegimeSpec::mece(), 4, false, 1));
    REQUIRE(run.origins.size() == 300);
    CHECK(run.origins.front() == 5282);
    CHECK(run.origins.back() == 5581);
    for (const auto& p : run.provenance) {
        CHECK(p.train_begin == 0);
        CHECK(p.train_end == 5282);
    }
    CHECK(run.actuals.back() == own.back());
}

TEST_CASE("rolling bookkeeping") {
    const auto own = walk(5582, 6);
    for (std::size_t w : {5, 10}) {
        const auto run = forecast_rolling({own, std::nullopt, {}}, spec_for(RegimeSpec::rolling(w), 4, false, 3));
        REQUIRE(run.origins.size() == 300);
        for (const auto& p : run.provenance) {
            CHECK(p.train_begin == p.origin - w);
            CHECK(p.train_end == p.origin);
        }
        if (w == 5) {
            CHECK(run.provenance[22].origin == 5304);
            CHECK(run.provenance[22].train_begin == 5299);
        }
    }
    CHECK_THROWS_AS(forecast_rolling({own, std::nullopt, {}}, spec_for(RegimeSpec::rolling(5), 9, false)),
                    InsufficientData);

    auto once = spec_for(RegimeSpec::rolling(10, 20, false), 4, false);
    const auto shared = forecast_rolling({own, std::nullopt, {}}, once);
    for (const auto& p : shared.provenance) {
        CHECK(p.train_begin == 5552);
        CHECK(p.train_end == 5562);
    }
}

TEST_CASE("rolling forecasts ignore data outside the window") {
    const std::size_t n = 40;
    const auto own = walk(n, 7);
    const auto a = walk(n, 8);
    const auto b = walk(n, 9);
    for (std::size_t w : {5, 10}) {
        for (bool dual : {false, true}) {
            const auto spec = spec_for(RegimeSpec::rolling(w, 6), 4, dual);
            const auto base = forecast_rolling({own, Siblings{a, b}, {}}, spec);
            const std::size_t i = 3;
            const std::size_t t = base.origins[i];
            for (std::size_t k = 0; k < n; ++k) {
                if (k >= t - w && k < t) {
                    continue;
                }
                auto poisoned = own;
                poisoned[k] *= 1.5;
                auto pa = a;
                pa[k] *= 1.5;
                const auto run = forecast_rolling({poisoned, Siblings{pa, b}, {}}, spec);
                CHECK(run.predictions[i] == base.predictions[i]);
            }
        }
    }
}

TEST_CASE("sibling series are unused without dual features") {
    const std::size_t n = 60;
    const auto own = walk(n, 10);
    const auto a = walk(n, 11);
    const auto b = walk(n, 12);
    auto pa = a;
    auto pb = b;
    for (auto& v : pa) {
        v *= 3.0;
    }
    for (auto& v : pb) {
        v += 1.0;
    }
    for (const auto& regime : {RegimeSpec::mece(40, 10), RegimeSpec::rolling(10, 10)}) {
        const auto spec = spec_for(regime, 4, false);
        const auto x = run_forecast({own, Siblings{a, b}, {}}, spec);
        const auto y = run_forecast({own, Siblings{pa, pb}, {}}, spec);
        const auto z = run_forecast({own, std::nullopt, {}}, spec);
        CHECK(x.predictions == y.predictions);
        CHECK(x.predictions == z.predictions);
    }
}

TEST_CASE("desk-scale mece run and determinism") {
    const auto own = walk(230, 13);
    auto spec = spec_for(RegimeSpec::mece(200, 30), 4, false, 200);
    spec.train.hidden_size = 16;
    const auto run = forecast_mece({own, std::nullopt, {}}, spec);
    CHECK(run.predictions.size() == 30);
    for (double p : run.predictions) {
        CHECK(std::isfinite(p));
    }
    CHECK(forecast_mece({own, std::nullopt, {}}, spec).predictions == run.predictions);
    CHECK_THROWS_AS(forecast_mece({own, std::nullopt, {}}, spec_for(RegimeSpec::mece(201, 30), 4, false)),
                    InsufficientData);
}

TEST_CASE("thread count does not change rolling forecasts") {
    const auto own = walk(50, 14);
    auto spec = spec_for(RegimeSpec::rolling(10, 12), 4, false);
    spec.threads = 1;
    const auto one = forecast_rolling({own, std::nullopt, {}}, spec);
    spec.threads = 4;
    CHECK(forecast_rolling({own, std::nullopt, {}}, spec).predictions == one.predictions);
}

TEST_CASE("prices above the scaling ceiling warn") {
    auto own = walk(30, 15);
    own[3] = 250.0;
    const auto run = forecast_rolling({own, std::nullopt, {}}, spec_for(RegimeSpec::rolling(10, 5), 4, false, 2));
    CHECK_FALSE(run.warnings.empty());
}
