#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dualclass/forecast.hpp"
#include "dualclass/lstm.hpp"
#include "dualclass/timeseries.hpp"
#include "dualclass/wavelet.hpp"

namespace dualclass {

enum class Analysis { premiums, coherence, forecast, all };

Analysis parse_analysis(const std::string& name);

struct TickerInput {
    std::string name;
    std::filesystem::path path;
};

struct WaveletConfig {
    MorletSpec morlet;
    double s0 = 2.0;
    double dj = 1.0 / 12.0;
    /// Unset: enough scales to reach a period of min(n / 3, 512) days.
    std::optional<std::size_t> num_scales;
    SmoothingSpec smoothing;
    std::size_t iterations = 1000;
    double level = 0.05;
    unsigned threads = 0;
};

struct ForecastGridConfig {
    /// Tickers to forecast; empty means every ticker. All tickers are still
    /// loaded so dual features can use them.
    std::vector<std::string> targets;
    std::vector<std::size_t> lags{4, 9};
    std::vector<bool> duals{false, true};
    std::vector<std::size_t> windows{5, 10, 20, 50};
    bool mece = true;
    std::size_t train_size = 5282;
    std::size_t test_size = 300;
    bool retrain_per_origin = true;
    TrainConfig train;
    unsigned threads = 0;
};

/// Declarative description of one batch run. Relative paths resolve against
/// the directory of the config file.
struct RunConfig {
    std::vector<TickerInput> tickers;
    CsvFormat format;
    /// Ordered (numerator, denominator) pairs; empty means every i < j pair.
    std::vector<std::pair<std::string, std::string>> pairs;
    bool percent = false;
    Analysis analysis = Analysis::all;
    WaveletConfig wavelet;
    ForecastGridConfig forecast;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;

    static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& path);
    nlohmann::ordered_json to_json() const;
    /// Throws if an input file is missing or a ticker/pair is malformed.
    void validate() const;
    std::vector<std::pair<std::string, std::string>> resolved_pairs() const;
};

struct OutputRecord {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::size_t bytes = 0;
};

/// Collects every file a command writes so the manifest can list it.
class OutputSink {
public:
    explicit OutputSink(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    void write(const std::string& relative, const std::string& content);
    const std::vector<OutputRecord>& records() const { return records_; }

private:
    std::filesystem::path root_;
    std::vector<OutputRecord> records_;
};

struct CommandResult {
    std::vector<std::string> failures;
    std::vector<std::string> skipped;

    bool ok() const { return failures.empty() && skipped.empty(); }
    void merge(const CommandResult& other);
};

std::string sha256_hex(const std::string& content);

CommandResult cmd_premiums(const RunConfig& config, OutputSink& sink);
CommandResult cmd_coherence(const RunConfig& config, OutputSink& sink);
CommandResult cmd_forecast(const RunConfig& config, OutputSink& sink);
/// Rebuilds the metric grids from forecast/runs/*.json under the sink root.
CommandResult cmd_report(OutputSink& sink);
CommandResult run_analysis(const RunConfig& config, Analysis analysis, OutputSink& sink);

/// Merges the sink's records into <root>/manifest.json (sorted by path).
void write_manifest(const OutputSink& sink, const std::string& command, const CommandResult& result);

/// Long-format coherence table: time_index,date,scale_days,period_days,rho2,phase_rad,significant,inside_coi.
std::string coherence_csv(const CoherenceField& field, const std::vector<Date>& dates);

/// predictions CSV: origin_index,date,actual,predicted,train_start,train_end.
std::string predictions_csv(const ForecastRun& run);
nlohmann::ordered_json run_manifest(const ForecastRun& run, const std::string& predictions_file);

struct SyntheticSpec {
    std::size_t length = 800;
    std::uint64_t seed = 1;
    std::vector<std::string> tickers{"KRDMA", "KRDMB", "KRDMD"};
};

/// Three share classes driven by a common trend plus per-class AR(1)
/// deviations, written as date,high,low CSV files. Returns ticker inputs.
std::vector<TickerInput> write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec);

}  // namespace dualclass
