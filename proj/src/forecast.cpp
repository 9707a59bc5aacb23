#include "dualclass/forecast.hpp"

#include <cmath>
#include <stdexcept>

#include "dualclass/parallel.hpp"
#include "dualclass/random.hpp"

namespace dualclass {

double scale_price(double price) {
    if (!(price > 0.0) || !std::isfinite(price)) {
        throw std::domain_error("scale_price: price must be positive");
    }
    // Same map as x / 100 - 1; this operation order round-trips two-decimal
    // prices exactly more often.
    return (price - 100.0) / 100.0;
}

double unscale(double scaled) { return scaled * 100.0 + 100.0; }

bool exceeds_scale_ceiling(double price) { return price >= kScaleCeilingPrice; }

std::vector<FeatureSample> build_supervised(std::span<const double> own, const std::optional<Siblings>& siblings,
                                            std::size_t lag, bool include_dual, std::size_t begin, std::size_t end) {
    if (lag == 0) {
        throw std::invalid_argument("build_supervised: lag must be >= 1");
    }
    if (end > own.size() || begin > end) {
        throw std::out_of_range("build_supervised: index range outside series");
    }
    if (end - begin <= lag) {
        throw InsufficientData("build_supervised: need more than lag observations");
    }
    if (include_dual) {
        if (!siblings || siblings->first.size() != own.size() || siblings->second.size() != own.size()) {
            throw std::invalid_argument("build_supervised: dual features need two aligned sibling series");
        }
    }
    std::vector<FeatureSample> samples;
    samples.reserve(end - begin - lag);
    for (std::size_t target = begin + lag; target < end; ++target) {
        FeatureSample s;
        s.target = own[target];
        s.target_index = target;
        s.inputs.reserve(lag);
        for (std::size_t k = target - lag; k < target; ++k) {
            if (include_dual) {
                s.inputs.push_back({own[k], siblings->first[k], siblings->second[k]});
            } else {
                s.inputs.push_back({own[k]});
            }
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<FeatureSample> build_supervised(std::span<const double> own, const std::optional<Siblings>& siblings,
                                            std::size_t lag, bool include_dual) {
    return build_supervised(own, siblings, lag, include_dual, 0, own.size());
}

RegimeSpec RegimeSpec::mece(std::size_t train_size, std::size_t test_size) {
    return RegimeSpec{RegimeKind::mece, train_size, test_size, 0, true};
}

RegimeSpec RegimeSpec::rolling(std::size_t window, std::size_t test_size, bool retrain_per_origin) {
    return RegimeSpec{RegimeKind::rolling, 0, test_size, window, retrain_per_origin};
}

std::string RegimeSpec::label() const {
    return kind == RegimeKind::mece ? std::string("mece") : "window_" + std::to_string(window);
}

namespace {

struct ScaledData {
    std::vector<double> own;
    std::vector<double> first;
    std::vector<double> second;
    std::vector<std::string> warnings;

    std::optional<Siblings> siblings() const {
        if (first.empty()) {
            return std::nullopt;
        }
        return Siblings{first, second};
    }
};

std::vector<double> scale_all(std::span<const double> prices, const std::string& name,
                              std::vector<std::string>& warnings) {
    std::vector<double> out;
    out.reserve(prices.size());
    std::size_t above = 0;
    for (double p : prices) {
        out.push_back(scale_price(p));
        if (exceeds_scale_ceiling(p)) {
            ++above;
        }
    }
    if (above > 0) {
        warnings.push_back(name + ": " + std::to_string(above) + " prices >= " +
                           std::to_string(static_cast<int>(kScaleCeilingPrice)) + " scale outside [-1, 1)");
    }
    return out;
}

ScaledData prepare(const ForecastInput& data, const ForecastSpec& spec) {
    spec.train.validate();
    if (spec.lag == 0) {
        throw std::invalid_argument("forecast: lag must be >= 1");
    }
    if (spec.regime.test_size == 0) {
        throw std::invalid_argument("forecast: test_size must be >= 1");
    }
    if (!data.dates.empty() && data.dates.size() != data.own.size()) {
        throw std::invalid_argument("forecast: dates length differs from prices");
    }
    ScaledData scaled;
    scaled.own = scale_all(data.own, "own", scaled.warnings);
    if (spec.include_dual) {
        if (!data.siblings || data.siblings->first.size() != data.own.size() ||
            data.siblings->second.size() != data.own.size()) {
            throw std::invalid_argument("forecast: dual features need two aligned sibling series");
        }
        scaled.first = scale_all(data.siblings->first, "sibling 1", scaled.warnings);
        scaled.second = scale_all(data.siblings->second, "sibling 2", scaled.warnings);
    }
    return scaled;
}

std::vector<std::vector<double>> origin_inputs(const ScaledData& d, std::size_t origin, std::size_t lag, bool dual) {
    std::vector<std::vector<double>> inputs;
    inputs.reserve(lag);
    for (std::size_t k = origin - lag; k < origin; ++k) {
        if (dual) {
            inputs.push_back({d.own[k], d.first[k], d.second[k]});
        } else {
            inputs.push_back({d.own[k]});
        }
    }
    return inputs;
}

ForecastRun start_run(const ForecastInput& data, const ForecastSpec& spec, std::size_t first_origin) {
    ForecastRun run;
    run.spec = spec;
    const std::size_t n = data.own.size();
    for (std::size_t t = first_origin; t < n; ++t) {
        run.origins.push_back(t);
        run.actuals.push_back(data.own[t]);
        if (!data.dates.empty()) {
            run.dates.push_back(data.dates[t]);
        }
    }
    run.predictions.assign(run.origins.size(), 0.0);
    run.provenance.resize(run.origins.size());
    return run;
}

}  // namespace

ForecastRun forecast_mece(const ForecastInput& data, const ForecastSpec& spec) {
    if (spec.regime.kind != RegimeKind::mece) {
        throw std::invalid_argument("forecast_mece: regime is not MECE");
    }
    const ScaledData scaled = prepare(data, spec);
    const std::size_t n = data.own.size();
    const std::size_t train_size = spec.regime.train_size;
    const std::size_t test_size = spec.regime.test_size;
    if (n < train_size + test_size) {
        throw InsufficientData("forecast_mece: need " + std::to_string(train_size + test_size) +
                               " observations, have " + std::to_string(n));
    }
    if (train_size <= spec.lag) {
        throw InsufficientData("forecast_mece: training set must exceed the lag");
    }
    const auto samples = build_supervised(scaled.own, scaled.siblings(), spec.lag, spec.include_dual, 0, train_size);
    TrainConfig cfg = spec.train;
    cfg.seed = derive_seed(spec.train.seed, "mece");
    const TrainResult model = train(samples, cfg);

    ForecastRun run = start_run(data, spec, n - test_size);
    run.warnings = scaled.warnings;
    for (std::size_t i = 0; i < run.origins.size(); ++i) {
        const std::size_t origin = run.origins[i];
        const auto inputs = origin_inputs(scaled, origin, spec.lag, spec.include_dual);
        run.predictions[i] = unscale(forward_sequence(model.params, inputs).prediction);
        run.provenance[i] = {origin, 0, train_size};
    }
    return run;
}

ForecastRun forecast_rolling(const ForecastInput& data, const ForecastSpec& spec) {
    if (spec.regime.kind != RegimeKind::rolling) {
        throw std::invalid_argument("forecast_rolling: regime is not rolling");
    }
    const std::size_t window = spec.regime.window;
    if (window <= spec.lag) {
        throw InsufficientData("forecast_rolling: window " + std::to_string(window) + " too small for lag " +
                               std::to_string(spec.lag));
    }
    const ScaledData scaled = prepare(data, spec);
    const std::size_t n = data.own.size();
    const std::size_t test_size = spec.regime.test_size;
    if (n < test_size + window) {
        throw InsufficientData("forecast_rolling: need " + std::to_string(test_size + window) +
                               " observations, have " + std::to_string(n));
    }
    ForecastRun run = start_run(data, spec, n - test_size);
    run.warnings = scaled.warnings;

    auto fit_window = [&](std::size_t end, std::uint64_t seed) {
        const auto samples =
            build_supervised(scaled.own, scaled.siblings(), spec.lag, spec.include_dual, end - window, end);
        TrainConfig cfg = spec.train;
        cfg.seed = seed;
        return train(samples, cfg).params;
    };

    if (spec.regime.retrain_per_origin) {
        parallel_for(run.origins.size(), spec.threads, [&](std::size_t i) {
            const std::size_t origin = run.origins[i];
            const LstmParams params = fit_window(origin, derive_seed(spec.train.seed, "origin", origin));
            const auto inputs = origin_inputs(scaled, origin, spec.lag, spec.include_dual);
            run.predictions[i] = unscale(forward_sequence(params, inputs).prediction);
            run.provenance[i] = {origin, origin - window, origin};
        });
    } else {
        const std::size_t first = run.origins.front();
        const LstmParams params = fit_window(first, derive_seed(spec.train.seed, "origin", first));
        for (std::size_t i = 0; i < run.origins.size(); ++i) {
            const std::size_t origin = run.origins[i];
            const auto inputs = origin_inputs(scaled, origin, spec.lag, spec.include_dual);
            run.predictions[i] = unscale(forward_sequence(params, inputs).prediction);
            run.provenance[i] = {origin, first - window, first};
        }
    }
    return run;
}

ForecastRun run_forecast(const ForecastInput& data, const ForecastSpec& spec) {
    return spec.regime.kind == RegimeKind::mece ? forecast_mece(data, spec) : forecast_rolling(data, spec);
}

}  // namespace dualclass
