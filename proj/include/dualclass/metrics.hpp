#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualclass/forecast.hpp"

namespace dualclass {

/// Absolute actuals at or below this are rejected by mape().
inline constexpr double kMapeTolerance = 1e-9;

double rmse(std::span<const double> predicted, std::span<const double> actual);
double mae(std::span<const double> predicted, std::span<const double> actual);
/// Percent: (100 / n) * sum |p - a| / |a|.
double mape(std::span<const double> predicted, std::span<const double> actual);

struct MetricTriple {
    double rmse = 0.0;
    double mae = 0.0;
    double mape = 0.0;
};

MetricTriple evaluate(std::span<const double> predicted, std::span<const double> actual);
inline MetricTriple evaluate(const ForecastRun& run) { return evaluate(run.predictions, run.actuals); }

enum class Metric { rmse, mae, mape };
const char* metric_name(Metric m);
double metric_value(const MetricTriple& t, Metric m);

/// Training regime row of a report table. Rolling rows sort by window, MECE last.
struct RegimeRow {
    RegimeKind kind = RegimeKind::mece;
    std::size_t window = 0;

    static RegimeRow of(const RegimeSpec& spec);
    std::string key() const;    // "window_5" / "mece"
    std::string title() const;  // "Training Window = 5" / "MECE"
    auto operator<=>(const RegimeRow&) const = default;
};

struct CellKey {
    std::string ticker;
    RegimeRow regime;
    std::size_t lag = 0;
    bool dual = false;
    auto operator<=>(const CellKey&) const = default;
};

struct RunMetrics {
    CellKey key;
    MetricTriple metrics;
};

/// Rows, columns and tickers a report grid must cover.
struct GridLayout {
    std::vector<std::string> tickers;
    std::vector<RegimeRow> regimes;
    std::vector<std::size_t> lags;
    std::vector<bool> duals;

    /// Windows 5/10/20/50 plus MECE, lags 4 and 9, dual no/yes.
    static GridLayout standard(std::vector<std::string> tickers = {});
};

class ReportGrid {
public:
    ReportGrid(GridLayout layout, std::map<CellKey, MetricTriple> cells)
        : layout_(std::move(layout)), cells_(std::move(cells)) {}

    const GridLayout& layout() const { return layout_; }
    std::optional<MetricTriple> cell(const CellKey& key) const;
    /// regimes x lags x duals, per ticker.
    std::size_t cells_per_ticker() const;
    std::size_t missing(const std::string& ticker) const;

    /// Table layout: one block per ticker, rows regime x metric, columns lag x dual.
    std::string table_csv() const;
    nlohmann::ordered_json table_json() const;
    /// ticker,regime,window,lag,dual,metric,value
    std::string long_csv() const;

private:
    GridLayout layout_;
    std::map<CellKey, MetricTriple> cells_;
};

class DuplicateConfiguration : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The layout is widened to cover every run; cells with no run stay missing.
ReportGrid assemble_grid(std::span<const RunMetrics> runs, GridLayout layout = GridLayout::standard());
ReportGrid assemble_grid(std::span<const ForecastRun> runs, GridLayout layout = GridLayout::standard());

/// Four decimals.
std::string format_metric(double value);

}  // namespace dualclass
