#include "dualclass/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dualclass {

namespace {

void check_pair(std::span<const double> predicted, std::span<const double> actual, const char* what) {
    if (predicted.size() != actual.size()) {
        throw std::invalid_argument(std::string(what) + ": length mismatch");
    }
    if (predicted.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty input");
    }
}

template <typename T>
void add_unique(std::vector<T>& values, const T& v) {
    if (std::find(values.begin(), values.end(), v) == values.end()) {
        values.push_back(v);
    }
}

}  // namespace

double rmse(std::span<const double> predicted, std::span<const double> actual) {
    check_pair(predicted, actual, "rmse");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = predicted[i] - actual[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

double mae(std::span<const double> predicted, std::span<const double> actual) {
    check_pair(predicted, actual, "mae");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sum += std::abs(predicted[i] - actual[i]);
    }
    return sum / static_cast<double>(actual.size());
}

double mape(std::span<const double> predicted, std::span<const double> actual) {
    check_pair(predicted, actual, "mape");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!(std::abs(actual[i]) > kMapeTolerance)) {
            throw std::domain_error("mape: actual value at index " + std::to_string(i) + " is zero or near zero");
        }
        sum += std::abs(predicted[i] - actual[i]) / std::abs(actual[i]);
    }
    return 100.0 * sum / static_cast<double>(actual.size());
}

MetricTriple evaluate(std::span<const double> predicted, std::span<const double> actual) {
    return {rmse(predicted, actual), mae(predicted, actual), mape(predicted, actual)};
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::rmse:
            return "RMSE";
        case Metric::mae:
            return "MAE";
        case Metric::mape:
            return "MAPE";
    }
    return "?";
}

double metric_value(const MetricTriple& t, Metric m) {
    switch (m) {
        case Metric::rmse:
            return t.rmse;
        case Metric::mae:
            return t.mae;
        case Metric::mape:
            return t.mape;
    }
    return 0.0;
}

RegimeRow RegimeRow::of(const RegimeSpec& spec) {
    return spec.kind == RegimeKind::mece ? RegimeRow{RegimeKind::mece, 0} : RegimeRow{RegimeKind::rolling, spec.window};
}

std::string RegimeRow::key() const { return kind == RegimeKind::mece ? "mece" : "window_" + std::to_string(window); }

std::string RegimeRow::title() const {
    return kind == RegimeKind::mece ? "MECE" : "Training Window = " + std::to_string(window);
}

GridLayout GridLayout::standard(std::vector<std::string> tickers) {
    GridLayout layout;
    layout.tickers = std::move(tickers);
    for (std::size_t w : {5, 10, 20, 50}) {
        layout.regimes.push_back({RegimeKind::rolling, w});
    }
    layout.regimes.push_back({RegimeKind::mece, 0});
    layout.lags = {4, 9};
    layout.duals = {false, true};
    return layout;
}

std::optional<MetricTriple> ReportGrid::cell(const CellKey& key) const {
    auto it = cells_.find(key);
    if (it == cells_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t ReportGrid::cells_per_ticker() const {
    return layout_.regimes.size() * layout_.lags.size() * layout_.duals.size();
}

std::size_t ReportGrid::missing(const std::string& ticker) const {
    std::size_t count = 0;
    for (const auto& regime : layout_.regimes) {
        for (std::size_t lag : layout_.lags) {
            for (bool dual : layout_.duals) {
                if (!cell({ticker, regime, lag, dual})) {
                    ++count;
                }
            }
        }
    }
    return count;
}

std::string format_metric(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return buf;
}

std::string ReportGrid::table_csv() const {
    static constexpr Metric kMetrics[] = {Metric::rmse, Metric::mae, Metric::mape};
    std::ostringstream out;
    out << "ticker,regime,metric";
    for (std::size_t lag : layout_.lags) {
        for (bool dual : layout_.duals) {
            out << ",lag" << lag << "_dual_" << (dual ? "yes" : "no");
        }
    }
    out << '\n';
    for (const auto& ticker : layout_.tickers) {
        for (const auto& regime : layout_.regimes) {
            for (Metric m : kMetrics) {
                out << ticker << ',' << regime.title() << ',' << metric_name(m);
                for (std::size_t lag : layout_.lags) {
                    for (bool dual : layout_.duals) {
                        const auto c = cell({ticker, regime, lag, dual});
                        out << ',' << (c ? format_metric(metric_value(*c, m)) : std::string("NA"));
                    }
                }
                out << '\n';
            }
        }
    }
    return out.str();
}

nlohmann::ordered_json ReportGrid::table_json() const {
    static constexpr Metric kMetrics[] = {Metric::rmse, Metric::mae, Metric::mape};
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    nlohmann::ordered_json columns = nlohmann::ordered_json::array();
    for (std::size_t lag : layout_.lags) {
        for (bool dual : layout_.duals) {
            columns.push_back({{"lag", lag}, {"dual", dual ? "yes" : "no"}});
        }
    }
    root["columns"] = columns;
    nlohmann::ordered_json tickers = nlohmann::ordered_json::object();
    for (const auto& ticker : layout_.tickers) {
        nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
        for (const auto& regime : layout_.regimes) {
            nlohmann::ordered_json block;
            block["regime"] = regime.key();
            block["title"] = regime.title();
            nlohmann::ordered_json rows = nlohmann::ordered_json::object();
            for (Metric m : kMetrics) {
                nlohmann::ordered_json row = nlohmann::ordered_json::array();
                for (std::size_t lag : layout_.lags) {
                    for (bool dual : layout_.duals) {
                        const auto c = cell({ticker, regime, lag, dual});
                        if (c) {
                            row.push_back(std::stod(format_metric(metric_value(*c, m))));
                        } else {
                            row.push_back(nullptr);
                        }
                    }
                }
                rows[metric_name(m)] = row;
            }
            block["rows"] = rows;
            blocks.push_back(block);
        }
        tickers[ticker] = blocks;
    }
    root["tickers"] = tickers;
    return root;
}

std::string ReportGrid::long_csv() const {
    static constexpr Metric kMetrics[] = {Metric::rmse, Metric::mae, Metric::mape};
    std::ostringstream out;
    out << "ticker,regime,window,lag,dual,metric,value\n";
    for (const auto& ticker : layout_.tickers) {
        for (const auto& regime : layout_.regimes) {
            for (std::size_t lag : layout_.lags) {
                for (bool dual : layout_.duals) {
                    const auto c = cell({ticker, regime, lag, dual});
                    for (Metric m : kMetrics) {
                        out << ticker << ',' << (regime.kind == RegimeKind::mece ? "mece" : "rolling") << ','
                            << regime.window << ',' << lag << ',' << (dual ? "yes" : "no") << ',' << metric_name(m)
                            << ',' << (c ? format_metric(metric_value(*c, m)) : std::string("NA")) << '\n';
                    }
                }
            }
        }
    }
    return out.str();
}

ReportGrid assemble_grid(std::span<const RunMetrics> runs, GridLayout layout) {
    std::map<CellKey, MetricTriple> cells;
    for (const auto& run : runs) {
        if (!cells.emplace(run.key, run.metrics).second) {
            throw DuplicateConfiguration("assemble_grid: duplicate configuration " + run.key.ticker + "/" +
                                         run.key.regime.key() + "/lag" + std::to_string(run.key.lag) + "/dual_" +
                                         (run.key.dual ? "yes" : "no"));
        }
        add_unique(layout.tickers, run.key.ticker);
        add_unique(layout.regimes, run.key.regime);
        add_unique(layout.lags, run.key.lag);
        add_unique(layout.duals, run.key.dual);
    }
    std::sort(layout.regimes.begin(), layout.regimes.end(), [](const RegimeRow& a, const RegimeRow& b) {
        if (a.kind != b.kind) {
            return a.kind == RegimeKind::rolling;
        }
        return a.window < b.window;
    });
    std::sort(layout.lags.begin(), layout.lags.end());
    std::sort(layout.duals.begin(), layout.duals.end());
    return ReportGrid(std::move(layout), std::move(cells));
}

ReportGrid assemble_grid(std::span<const ForecastRun> runs, GridLayout layout) {
    std::vector<RunMetrics> metrics;
    metrics.reserve(runs.size());
    for (const auto& run : runs) {
        metrics.push_back({{run.spec.ticker, RegimeRow::of(run.spec.regime), run.spec.lag, run.spec.include_dual},
                           evaluate(run)});
    }
    return assemble_grid(metrics, std::move(layout));
}

}  // namespace dualclass
