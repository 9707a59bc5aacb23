#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dualclass {

using Date = std::chrono::sys_days;

/// Parses `text` with a strftime-style pattern (%Y, %m, %d, %b and literals).
/// Returns nullopt for malformed or nonexistent calendar dates.
std::optional<Date> parse_date(const std::string& text, const std::string& pattern = "%Y-%m-%d");
std::string format_date(Date date);

/// Daily high/low/mid prices for one ticker.
///
/// Dates are strictly increasing, prices are positive, high >= low and
/// mid == 0.5 * (high + low). A series built from mid prices alone carries
/// high == low == mid.
class PriceSeries {
public:
    PriceSeries() = default;

    static PriceSeries from_high_low(std::string ticker, std::vector<Date> dates,
                                     std::vector<double> high, std::vector<double> low);
    static PriceSeries from_mid(std::string ticker, std::vector<Date> dates, std::vector<double> mid);

    const std::string& ticker() const { return ticker_; }
    const std::vector<Date>& dates() const { return dates_; }
    const std::vector<double>& high() const { return high_; }
    const std::vector<double>& low() const { return low_; }
    const std::vector<double>& mid() const { return mid_; }
    std::size_t size() const { return dates_.size(); }
    bool empty() const { return dates_.empty(); }

    /// Rows whose index is listed in `keep` (ascending), same ticker.
    PriceSeries subset(std::span<const std::size_t> keep) const;

private:
    std::string ticker_;
    std::vector<Date> dates_;
    std::vector<double> high_;
    std::vector<double> low_;
    std::vector<double> mid_;
};

/// values[t] = mid[t+1] / mid[t] - 1, dated at t+1.
struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> values;
};

/// Relative premium of one ticker over another as a fraction (0.5 == +50%).
struct PremiumSeries {
    std::string numerator;
    std::string denominator;
    std::vector<Date> dates;
    std::vector<double> values;
};

struct SummaryStats {
    double minimum = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double q3 = 0.0;
    double maximum = 0.0;
    std::size_t count_premium = 0;
    std::size_t count_discount = 0;
    std::size_t count_parity = 0;
    std::size_t n = 0;
};

double mid_price(double high, double low);

ReturnSeries daily_returns(const PriceSeries& series);

/// Restricts both series to their common dates.
std::pair<PriceSeries, PriceSeries> align_series(const PriceSeries& a, const PriceSeries& b);

/// Restricts every series to the dates present in all of them.
std::vector<PriceSeries> align_all(std::span<const PriceSeries> series);

PremiumSeries premium_series(const PriceSeries& a, const PriceSeries& b);

/// Linear interpolation between order statistics at (n - 1) * q.
double quantile(std::span<const double> values, double q);

SummaryStats premium_summary(std::span<const double> values);
inline SummaryStats premium_summary(const PremiumSeries& p) { return premium_summary(p.values); }

enum class MissingPolicy { fail, skip };

struct CsvFormat {
    std::string date_column = "date";
    std::string high_column = "high";
    std::string low_column = "low";
    /// When set, prices come from this single column instead of high/low.
    std::optional<std::string> mid_column;
    std::string date_format = "%Y-%m-%d";
    MissingPolicy policy = MissingPolicy::fail;
};

/// Ingestion failure; `row` is the 1-based data row (header excluded), 0 for
/// file-level problems.
class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& what, std::size_t row) : std::runtime_error(what), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

PriceSeries load_ohlc_csv(const std::string& path, const CsvFormat& format, std::string ticker = {});
PriceSeries parse_ohlc_csv(const std::string& text, const CsvFormat& format, std::string ticker = {});

/// Splits one CSV record, honouring double quotes.
std::vector<std::string> split_csv_line(const std::string& line);

/// Fraction rendered with 6 decimals, or as percent (x100) when requested.
std::string format_fraction(double value, bool percent);

}  // namespace dualclass
