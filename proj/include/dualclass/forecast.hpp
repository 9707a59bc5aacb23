#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualclass/lstm.hpp"
#include "dualclass/timeseries.hpp"

namespace dualclass {

/// Prices at or above this level map to scaled values >= 1.
inline constexpr double kScaleCeilingPrice = 200.0;

/// x / 100 - 1. Throws std::domain_error for non-positive prices.
double scale_price(double price);
/// 100 (y + 1).
double unscale(double scaled);
bool exceeds_scale_ceiling(double price);

/// The two sibling share classes used as extra predictors.
struct Siblings {
    std::span<const double> first;
    std::span<const double> second;
};

/// Supervised samples whose targets lie in [begin + lag, end); every input
/// comes from indices target - lag .. target - 1. Step vectors are
/// [own] or [own, first, second] when include_dual is set. Siblings are read
/// only when include_dual is set.
std::vector<FeatureSample> build_supervised(std::span<const double> own, const std::optional<Siblings>& siblings,
                                            std::size_t lag, bool include_dual, std::size_t begin, std::size_t end);
std::vector<FeatureSample> build_supervised(std::span<const double> own, const std::optional<Siblings>& siblings,
                                            std::size_t lag, bool include_dual);

enum class RegimeKind { mece, rolling };

struct RegimeSpec {
    RegimeKind kind = RegimeKind::mece;
    std::size_t train_size = 5282;
    std::size_t test_size = 300;
    std::size_t window = 0;
    bool retrain_per_origin = true;

    static RegimeSpec mece(std::size_t train_size = 5282, std::size_t test_size = 300);
    static RegimeSpec rolling(std::size_t window, std::size_t test_size = 300, bool retrain_per_origin = true);

    /// "mece" or "window_<w>".
    std::string label() const;
};

/// Describes one forecasting configuration.
struct ForecastSpec {
    std::string ticker;
    std::size_t lag = 4;
    bool include_dual = false;
    RegimeSpec regime;
    TrainConfig train;
    /// Worker threads across forecast origins; 0 = hardware concurrency.
    unsigned threads = 1;
};

/// Unscaled mid prices aligned on common dates.
struct ForecastInput {
    std::span<const double> own;
    std::optional<Siblings> siblings;
    std::span<const Date> dates;
};

/// Half-open range of observation indices a model was trained on.
struct Provenance {
    std::size_t origin = 0;
    std::size_t train_begin = 0;
    std::size_t train_end = 0;
};

struct ForecastRun {
    ForecastSpec spec;
    std::vector<std::size_t> origins;
    std::vector<Date> dates;
    std::vector<double> predictions;
    std::vector<double> actuals;
    std::vector<Provenance> provenance;
    std::vector<std::string> warnings;
};

class InsufficientData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Test origins are always the last test_size observations.
ForecastRun forecast_mece(const ForecastInput& data, const ForecastSpec& spec);
ForecastRun forecast_rolling(const ForecastInput& data, const ForecastSpec& spec);
ForecastRun run_forecast(const ForecastInput& data, const ForecastSpec& spec);

}  // namespace dualclass
