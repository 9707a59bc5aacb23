#include "dualclass/timeseries.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dualclass {

namespace {

bool read_int(const std::string& text, std::size_t& pos, std::size_t max_digits, int& out) {
    std::size_t digits = 0;
    int value = 0;
    while (pos < text.size() && digits < max_digits && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        value = value * 10 + (text[pos] - '0');
        ++pos;
        ++digits;
    }
    out = value;
    return digits > 0;
}

constexpr const char* kMonthNames[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                       "jul", "aug", "sep", "oct", "nov", "dec"};

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return {};
    }
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::optional<double> parse_number(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

void check_dates(const std::vector<Date>& dates) {
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) {
            throw std::invalid_argument("PriceSeries: dates must be strictly increasing (index " +
                                        std::to_string(i) + ")");
        }
    }
}

}  // namespace

std::optional<Date> parse_date(const std::string& raw, const std::string& pattern) {
    const std::string text = trim(raw);
    int year = -1;
    int month = -1;
    int day = -1;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] != '%') {
            if (pos >= text.size() || text[pos] != pattern[i]) {
                return std::nullopt;
            }
            ++pos;
            continue;
        }
        if (++i >= pattern.size()) {
            return std::nullopt;
        }
        switch (pattern[i]) {
            case 'Y':
                if (!read_int(text, pos, 4, year)) return std::nullopt;
                break;
            case 'm':
                if (!read_int(text, pos, 2, month)) return std::nullopt;
                break;
            case 'd':
                if (!read_int(text, pos, 2, day)) return std::nullopt;
                break;
            case 'b': {
                if (pos + 3 > text.size()) return std::nullopt;
                std::string name = text.substr(pos, 3);
                std::transform(name.begin(), name.end(), name.begin(),
                               [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
                auto it = std::find(std::begin(kMonthNames), std::end(kMonthNames), name);
                if (it == std::end(kMonthNames)) return std::nullopt;
                month = static_cast<int>(it - std::begin(kMonthNames)) + 1;
                pos += 3;
                break;
            }
            case '%':
                if (pos >= text.size() || text[pos] != '%') return std::nullopt;
                ++pos;
                break;
            default:
                return std::nullopt;
        }
    }
    if (pos != text.size() || year < 0 || month < 0 || day < 0) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{year},
                                          std::chrono::month{static_cast<unsigned>(month)},
                                          std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{ymd};
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

PriceSeries PriceSeries::from_high_low(std::string ticker, std::vector<Date> dates,
                                       std::vector<double> high, std::vector<double> low) {
    if (high.size() != dates.size() || low.size() != dates.size()) {
        throw std::invalid_argument("PriceSeries: dates/high/low length mismatch");
    }
    check_dates(dates);
    PriceSeries s;
    s.mid_.reserve(dates.size());
    for (std::size_t i = 0; i < dates.size(); ++i) {
        s.mid_.push_back(mid_price(high[i], low[i]));
    }
    s.ticker_ = std::move(ticker);
    s.dates_ = std::move(dates);
    s.high_ = std::move(high);
    s.low_ = std::move(low);
    return s;
}

PriceSeries PriceSeries::from_mid(std::string ticker, std::vector<Date> dates, std::vector<double> mid) {
    if (mid.size() != dates.size()) {
        throw std::invalid_argument("PriceSeries: dates/mid length mismatch");
    }
    for (double m : mid) {
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw std::domain_error("PriceSeries: prices must be positive and finite");
        }
    }
    check_dates(dates);
    PriceSeries s;
    s.ticker_ = std::move(ticker);
    s.dates_ = std::move(dates);
    s.high_ = mid;
    s.low_ = mid;
    s.mid_ = std::move(mid);
    return s;
}

PriceSeries PriceSeries::subset(std::span<const std::size_t> keep) const {
    PriceSeries s;
    s.ticker_ = ticker_;
    for (std::size_t i : keep) {
        s.dates_.push_back(dates_.at(i));
        s.high_.push_back(high_[i]);
        s.low_.push_back(low_[i]);
        s.mid_.push_back(mid_[i]);
    }
    check_dates(s.dates_);
    return s;
}

double mid_price(double high, double low) {
    if (!(low > 0.0) || !(high >= low) || !std::isfinite(high)) {
        throw std::domain_error("mid_price: require high >= low > 0");
    }
    return 0.5 * (high + low);
}

ReturnSeries daily_returns(const PriceSeries& series) {
    if (series.size() < 2) {
        throw std::length_error("daily_returns: need at least two observations");
    }
    const auto& mid = series.mid();
    ReturnSeries r;
    r.dates.assign(series.dates().begin() + 1, series.dates().end());
    r.values.reserve(mid.size() - 1);
    for (std::size_t t = 0; t + 1 < mid.size(); ++t) {
        r.values.push_back(mid[t + 1] / mid[t] - 1.0);
    }
    return r;
}

std::vector<PriceSeries> align_all(std::span<const PriceSeries> series) {
    if (series.empty()) {
        return {};
    }
    std::vector<Date> common = series[0].dates();
    for (std::size_t k = 1; k < series.size(); ++k) {
        std::vector<Date> next;
        std::set_intersection(common.begin(), common.end(), series[k].dates().begin(),
                              series[k].dates().end(), std::back_inserter(next));
        common = std::move(next);
    }
    std::vector<PriceSeries> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        std::vector<std::size_t> keep;
        keep.reserve(common.size());
        std::size_t j = 0;
        for (std::size_t i = 0; i < s.size() && j < common.size(); ++i) {
            if (s.dates()[i] == common[j]) {
                keep.push_back(i);
                ++j;
            }
        }
        out.push_back(s.subset(keep));
    }
    return out;
}

std::pair<PriceSeries, PriceSeries> align_series(const PriceSeries& a, const PriceSeries& b) {
    const PriceSeries both[] = {a, b};
    auto aligned = align_all(both);
    return {std::move(aligned[0]), std::move(aligned[1])};
}

PremiumSeries premium_series(const PriceSeries& a, const PriceSeries& b) {
    auto [x, y] = align_series(a, b);
    PremiumSeries p;
    p.numerator = a.ticker();
    p.denominator = b.ticker();
    p.dates = x.dates();
    p.values.reserve(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        p.values.push_back(x.mid()[t] / y.mid()[t] - 1.0);
    }
    return p;
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("quantile: empty input");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::domain_error("quantile: q outside [0, 1]");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

SummaryStats premium_summary(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("premium_summary: empty series");
    }
    SummaryStats s;
    s.n = values.size();
    s.minimum = *std::min_element(values.begin(), values.end());
    s.maximum = *std::max_element(values.begin(), values.end());
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    // Sorted summation keeps the mean independent of input order.
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
    for (double v : values) {
        if (v > 0.0) {
            ++s.count_premium;
        } else if (v < 0.0) {
            ++s.count_discount;
        } else {
            ++s.count_parity;
        }
    }
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

PriceSeries parse_ohlc_csv(const std::string& text, const CsvFormat& format, std::string ticker) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw CsvError("csv: missing header row", 0);
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    auto header = split_csv_line(line);
    for (auto& h : header) {
        h = trim(h);
    }
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw CsvError("csv: missing column '" + name + "'", 0);
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t date_col = column(format.date_column);
    const bool mid_only = format.mid_column.has_value();
    const std::size_t high_col = mid_only ? column(*format.mid_column) : column(format.high_column);
    const std::size_t low_col = mid_only ? high_col : column(format.low_column);
    const std::size_t needed = std::max({date_col, high_col, low_col}) + 1;

    std::vector<Date> dates;
    std::vector<double> high;
    std::vector<double> low;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const bool skip = format.policy == MissingPolicy::skip;
        auto reject = [&](const std::string& why) {
            if (!skip) {
                throw CsvError("csv row " + std::to_string(row) + ": " + why, row);
            }
        };
        const auto fields = split_csv_line(line);
        if (fields.size() < needed) {
            reject("too few fields");
            continue;
        }
        const auto date = parse_date(fields[date_col], format.date_format);
        if (!date) {
            reject("unparseable date '" + fields[date_col] + "'");
            continue;
        }
        const auto hi = parse_number(fields[high_col]);
        const auto lo = parse_number(fields[low_col]);
        if (!hi || !lo) {
            reject("missing or non-numeric price");
            continue;
        }
        if (!(*lo > 0.0)) {
            reject("non-positive price");
            continue;
        }
        if (*hi < *lo) {
            reject("high < low");
            continue;
        }
        if (!dates.empty() && !(dates.back() < *date)) {
            reject("date not strictly after previous row");
            continue;
        }
        dates.push_back(*date);
        high.push_back(*hi);
        low.push_back(*lo);
    }
    if (dates.empty()) {
        throw CsvError("csv: no usable rows", 0);
    }
    return PriceSeries::from_high_low(std::move(ticker), std::move(dates), std::move(high), std::move(low));
}

PriceSeries load_ohlc_csv(const std::string& path, const CsvFormat& format, std::string ticker) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CsvError("csv: cannot open '" + path + "'", 0);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_ohlc_csv(buffer.str(), format, std::move(ticker));
    } catch (const CsvError& e) {
        throw CsvError(path + ": " + e.what(), e.row());
    }
}

std::string format_fraction(double value, bool percent) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", percent ? value * 100.0 : value);
    std::string s = buf;
    if (s == "-0.000000") {
        s.erase(0, 1);
    }
    return s;
}

}  // namespace dualclass
