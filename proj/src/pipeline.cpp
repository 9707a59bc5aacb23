#include "dualclass/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dualclass/heatmap.hpp"
#include "dualclass/metrics.hpp"
#include "dualclass/parallel.hpp"
#include "dualclass/random.hpp"

namespace dualclass {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

std::vector<PriceSeries> load_tickers(const RunConfig& config) {
    std::vector<PriceSeries> out;
    for (const auto& t : config.tickers) {
        out.push_back(load_ohlc_csv(t.path.string(), config.format, t.name));
    }
    return out;
}

const PriceSeries& find_series(const std::vector<PriceSeries>& all, const std::string& name) {
    for (const auto& s : all) {
        if (s.ticker() == name) {
            return s;
        }
    }
    throw std::invalid_argument("unknown ticker '" + name + "'");
}

ordered_json summary_json(const SummaryStats& s, bool percent) {
    auto frac = [&](double v) { return percent ? v * 100.0 : v; };
    ordered_json j;
    j["min"] = frac(s.minimum);
    j["q1"] = frac(s.q1);
    j["median"] = frac(s.median);
    j["mean"] = frac(s.mean);
    j["q3"] = frac(s.q3);
    j["max"] = frac(s.maximum);
    j["count_premium"] = s.count_premium;
    j["count_discount"] = s.count_discount;
    j["count_parity"] = s.count_parity;
    j["n"] = s.n;
    return j;
}

std::string run_stem(const ForecastSpec& spec) {
    return spec.ticker + "_" + spec.regime.label() + "_lag" + std::to_string(spec.lag) + "_dual_" +
           (spec.include_dual ? "yes" : "no");
}

ordered_json train_json(const TrainConfig& t) {
    ordered_json j;
    j["epochs"] = t.epochs;
    j["learning_rate"] = t.learning_rate;
    j["hidden_size"] = t.hidden_size;
    j["batch_size"] = t.batch_size;
    j["beta1"] = t.beta1;
    j["beta2"] = t.beta2;
    j["epsilon"] = t.epsilon;
    j["clip_norm"] = t.clip_norm;
    return j;
}

TrainConfig train_from_json(const json& j, TrainConfig t) {
    t.epochs = j.value("epochs", t.epochs);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.hidden_size = j.value("hidden_size", t.hidden_size);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.beta1 = j.value("beta1", t.beta1);
    t.beta2 = j.value("beta2", t.beta2);
    t.epsilon = j.value("epsilon", t.epsilon);
    t.clip_norm = j.value("clip_norm", t.clip_norm);
    return t;
}

}  // namespace

Analysis parse_analysis(const std::string& name) {
    if (name == "premiums") return Analysis::premiums;
    if (name == "coherence") return Analysis::coherence;
    if (name == "forecast") return Analysis::forecast;
    if (name == "all") return Analysis::all;
    throw std::invalid_argument("unknown analysis '" + name + "' (premiums|coherence|forecast|all)");
}

namespace {

const char* analysis_name(Analysis a) {
    switch (a) {
        case Analysis::premiums: return "premiums";
        case Analysis::coherence: return "coherence";
        case Analysis::forecast: return "forecast";
        case Analysis::all: return "all";
    }
    return "all";
}

}  // namespace

RunConfig RunConfig::from_json(const json& doc, const fs::path& base_dir) {
    RunConfig c;
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    for (const auto& t : doc.at("tickers")) {
        c.tickers.push_back({t.at("name").get<std::string>(), resolve(t.at("path").get<std::string>())});
    }
    if (doc.contains("csv")) {
        const auto& f = doc.at("csv");
        c.format.date_column = f.value("date_column", c.format.date_column);
        c.format.high_column = f.value("high_column", c.format.high_column);
        c.format.low_column = f.value("low_column", c.format.low_column);
        if (f.contains("mid_column") && !f.at("mid_column").is_null()) {
            c.format.mid_column = f.at("mid_column").get<std::string>();
        }
        c.format.date_format = f.value("date_format", c.format.date_format);
        const std::string missing = f.value("missing", std::string("fail"));
        if (missing == "fail") {
            c.format.policy = MissingPolicy::fail;
        } else if (missing == "skip") {
            c.format.policy = MissingPolicy::skip;
        } else {
            throw std::invalid_argument("config: csv.missing must be 'fail' or 'skip'");
        }
    }
    if (doc.contains("pairs")) {
        for (const auto& p : doc.at("pairs")) {
            c.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        }
    }
    c.percent = doc.value("percent", false);
    c.analysis = parse_analysis(doc.value("analysis", std::string("all")));
    c.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("output_dir")) {
        c.output_dir = resolve(doc.at("output_dir").get<std::string>());
    }
    if (doc.contains("wavelet")) {
        const auto& w = doc.at("wavelet");
        c.wavelet.morlet.omega0 = w.value("omega0", c.wavelet.morlet.omega0);
        c.wavelet.s0 = w.value("s0", c.wavelet.s0);
        c.wavelet.dj = w.value("dj", c.wavelet.dj);
        if (w.contains("num_scales") && !w.at("num_scales").is_null()) {
            c.wavelet.num_scales = w.at("num_scales").get<std::size_t>();
        }
        c.wavelet.smoothing.time_factor = w.value("time_factor", c.wavelet.smoothing.time_factor);
        c.wavelet.smoothing.scale_window = w.value("scale_window", c.wavelet.smoothing.scale_window);
        c.wavelet.iterations = w.value("iterations", c.wavelet.iterations);
        c.wavelet.level = w.value("level", c.wavelet.level);
        c.wavelet.threads = w.value("threads", c.wavelet.threads);
    }
    if (doc.contains("forecast")) {
        const auto& f = doc.at("forecast");
        auto& g = c.forecast;
        g.targets = f.value("targets", g.targets);
        g.lags = f.value("lags", g.lags);
        g.duals = f.value("dual", g.duals);
        g.windows = f.value("windows", g.windows);
        g.mece = f.value("mece", g.mece);
        g.train_size = f.value("train_size", g.train_size);
        g.test_size = f.value("test_size", g.test_size);
        g.retrain_per_origin = f.value("retrain_per_origin", g.retrain_per_origin);
        g.threads = f.value("threads", g.threads);
        if (f.contains("train")) {
            g.train = train_from_json(f.at("train"), g.train);
        }
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config '" + path.string() + "': " + e.what());
    }
    return from_json(doc, path.parent_path());
}

ordered_json RunConfig::to_json() const {
    ordered_json j;
    ordered_json list = ordered_json::array();
    for (const auto& t : tickers) {
        list.push_back({{"name", t.name}, {"path", t.path.generic_string()}});
    }
    j["tickers"] = list;
    ordered_json csv;
    csv["date_column"] = format.date_column;
    csv["high_column"] = format.high_column;
    csv["low_column"] = format.low_column;
    csv["mid_column"] = format.mid_column ? ordered_json(*format.mid_column) : ordered_json(nullptr);
    csv["date_format"] = format.date_format;
    csv["missing"] = format.policy == MissingPolicy::fail ? "fail" : "skip";
    j["csv"] = csv;
    ordered_json pair_list = ordered_json::array();
    for (const auto& [a, b] : resolved_pairs()) {
        pair_list.push_back({a, b});
    }
    j["pairs"] = pair_list;
    j["percent"] = percent;
    j["analysis"] = analysis_name(analysis);
    j["seed"] = seed;
    ordered_json w;
    w["omega0"] = wavelet.morlet.omega0;
    w["s0"] = wavelet.s0;
    w["dj"] = wavelet.dj;
    w["num_scales"] = wavelet.num_scales ? ordered_json(*wavelet.num_scales) : ordered_json(nullptr);
    w["time_factor"] = wavelet.smoothing.time_factor;
    w["scale_window"] = wavelet.smoothing.scale_window;
    w["iterations"] = wavelet.iterations;
    w["level"] = wavelet.level;
    j["wavelet"] = w;
    ordered_json f;
    f["targets"] = forecast.targets;
    f["lags"] = forecast.lags;
    f["dual"] = forecast.duals;
    f["windows"] = forecast.windows;
    f["mece"] = forecast.mece;
    f["train_size"] = forecast.train_size;
    f["test_size"] = forecast.test_size;
    f["retrain_per_origin"] = forecast.retrain_per_origin;
    f["train"] = train_json(forecast.train);
    j["forecast"] = f;
    return j;
}

void RunConfig::validate() const {
    if (tickers.empty()) {
        throw std::invalid_argument("config: no tickers");
    }
    for (std::size_t i = 0; i < tickers.size(); ++i) {
        if (tickers[i].name.empty()) {
            throw std::invalid_argument("config: ticker without a name");
        }
        for (std::size_t k = 0; k < i; ++k) {
            if (tickers[k].name == tickers[i].name) {
                throw std::invalid_argument("config: duplicate ticker '" + tickers[i].name + "'");
            }
        }
        if (!fs::exists(tickers[i].path)) {
            throw std::invalid_argument("config: input file '" + tickers[i].path.string() + "' does not exist");
        }
    }
    for (const auto& [a, b] : pairs) {
        auto known = [&](const std::string& name) {
            return std::any_of(tickers.begin(), tickers.end(), [&](const TickerInput& t) { return t.name == name; });
        };
        if (!known(a) || !known(b) || a == b) {
            throw std::invalid_argument("config: invalid pair " + a + "/" + b);
        }
    }
    for (const auto& t : forecast.targets) {
        if (std::none_of(tickers.begin(), tickers.end(), [&](const TickerInput& x) { return x.name == t; })) {
            throw std::invalid_argument("config: unknown forecast target '" + t + "'");
        }
    }
}

std::vector<std::pair<std::string, std::string>> RunConfig::resolved_pairs() const {
    if (!pairs.empty()) {
        return pairs;
    }
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < tickers.size(); ++i) {
        for (std::size_t k = i + 1; k < tickers.size(); ++k) {
            out.emplace_back(tickers[i].name, tickers[k].name);
        }
    }
    return out;
}

std::string sha256_hex(const std::string& content) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(content.data(), content.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

OutputSink::OutputSink(fs::path root) : root_(std::move(root)) {}

void OutputSink::write(const std::string& relative, const std::string& content) {
    const fs::path target = root_ / relative;
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) {
        throw std::runtime_error("cannot create directory '" + target.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(target, std::ios::binary);
    out << content;
    if (!out) {
        throw std::runtime_error("cannot write '" + target.string() + "'");
    }
    records_.push_back({relative, sha256_hex(content), content.size()});
}

void CommandResult::merge(const CommandResult& other) {
    failures.insert(failures.end(), other.failures.begin(), other.failures.end());
    skipped.insert(skipped.end(), other.skipped.begin(), other.skipped.end());
}

CommandResult cmd_premiums(const RunConfig& config, OutputSink& sink) {
    CommandResult result;
    if (config.tickers.size() < 2) {
        result.failures.push_back("premiums: need at least two tickers");
        return result;
    }
    const auto series = load_tickers(config);
    std::ostringstream summary_csv;
    summary_csv << "numerator,denominator,min,q1,median,mean,q3,max,count_premium,count_discount,count_parity,n\n";
    ordered_json summary;
    summary["percent"] = config.percent;
    summary["pairs"] = ordered_json::array();
    for (const auto& [a, b] : config.resolved_pairs()) {
        const PremiumSeries p = premium_series(find_series(series, a), find_series(series, b));
        if (p.values.empty()) {
            result.failures.push_back("premiums " + a + "/" + b + ": no common dates");
            continue;
        }
        const SummaryStats s = premium_summary(p);
        std::ostringstream csv;
        csv << "date,premium\n";
        for (std::size_t t = 0; t < p.values.size(); ++t) {
            csv << format_date(p.dates[t]) << ',' << format_fraction(p.values[t], config.percent) << '\n';
        }
        sink.write("premiums/premium_" + a + "_over_" + b + ".csv", csv.str());

        summary_csv << a << ',' << b;
        for (double v : {s.minimum, s.q1, s.median, s.mean, s.q3, s.maximum}) {
            summary_csv << ',' << format_fraction(v, config.percent);
        }
        summary_csv << ',' << s.count_premium << ',' << s.count_discount << ',' << s.count_parity << ',' << s.n
                    << '\n';
        ordered_json entry;
        entry["numerator"] = a;
        entry["denominator"] = b;
        entry.update(summary_json(s, config.percent));
        summary["pairs"].push_back(entry);
    }
    sink.write("premiums/summary.csv", summary_csv.str());
    sink.write("premiums/summary.json", dump(summary));
    return result;
}

std::string coherence_csv(const CoherenceField& field, const std::vector<Date>& dates) {
    const std::size_t rows = field.rho2.rows();
    const std::size_t n = field.rho2.cols();
    const bool have_mask = field.significant.same_shape(field.rho2);
    std::string out = "time_index,date,scale_days,period_days,rho2,phase_rad,significant,inside_coi\n";
    out.reserve(out.size() + rows * n * 64);
    char line[256];
    for (std::size_t t = 0; t < n; ++t) {
        const std::string date = dates.size() == n ? format_date(dates[t]) : std::string();
        for (std::size_t j = 0; j < rows; ++j) {
            std::snprintf(line, sizeof line, "%zu,%s,%.6f,%.6f,%.6f,%.6f,%d,%d\n", t, date.c_str(),
                          field.grid.scales()[j] * field.dt, field.grid.periods()[j] * field.dt, field.rho2(j, t),
                          field.phase(j, t), have_mask && field.significant(j, t) ? 1 : 0,
                          field.inside_coi(j, t) ? 1 : 0);
            out += line;
        }
    }
    return out;
}

CommandResult cmd_coherence(const RunConfig& config, OutputSink& sink) {
    CommandResult result;
    if (config.tickers.size() < 2) {
        result.failures.push_back("coherence: need at least two tickers");
        return result;
    }
    const auto series = load_tickers(config);
    for (const auto& [a, b] : config.resolved_pairs()) {
        const std::string label = a + "_" + b;
        const auto [x, y] = align_series(find_series(series, a), find_series(series, b));
        if (x.size() < 2) {
            result.failures.push_back("coherence " + a + "/" + b + ": no common dates");
            continue;
        }
        const ReturnSeries ra = daily_returns(x);
        const ReturnSeries rb = daily_returns(y);
        const std::size_t n = ra.values.size();
        if (n < 64) {
            result.failures.push_back("coherence " + a + "/" + b + ": " + std::to_string(n) +
                                      " returns, need at least 64");
            continue;
        }
        const ScaleGrid grid = config.wavelet.num_scales
                                   ? ScaleGrid(config.wavelet.s0, config.wavelet.dj, *config.wavelet.num_scales,
                                               config.wavelet.morlet.omega0)
                                   : ScaleGrid::for_length(n, 1.0, config.wavelet.morlet.omega0);
        const CoherenceEngine engine(n, grid, config.wavelet.morlet, config.wavelet.smoothing);
        CoherenceField field = engine.coherence(engine.transform(ra.values), engine.transform(rb.values));
        MonteCarloSpec mc;
        mc.iterations = config.wavelet.iterations;
        mc.significance_level = config.wavelet.level;
        mc.seed = derive_seed(config.seed, "coherence:" + a + "/" + b);
        mc.threads = config.wavelet.threads;
        field.significant = significance(engine, field.rho2, ra.values, rb.values, mc).significant;

        sink.write("coherence/coherence_" + label + ".csv", coherence_csv(field, ra.dates));
        HeatmapOptions options;
        options.title = "Wavelet coherence: " + a + " vs " + b + " daily returns";
        options.dates = ra.dates;
        sink.write("coherence/coherence_" + label + ".svg", render_heatmap_svg(field, options));
    }
    return result;
}

std::string predictions_csv(const ForecastRun& run) {
    std::ostringstream out;
    out << "origin_index,date,actual,predicted,train_start,train_end\n";
    for (std::size_t i = 0; i < run.origins.size(); ++i) {
        out << run.origins[i] << ',' << (run.dates.size() == run.origins.size() ? format_date(run.dates[i]) : "")
            << ',' << exact(run.actuals[i]) << ',' << exact(run.predictions[i]) << ','
            << run.provenance[i].train_begin << ',' << run.provenance[i].train_end << '\n';
    }
    return out.str();
}

ordered_json run_manifest(const ForecastRun& run, const std::string& predictions_file) {
    const auto& spec = run.spec;
    ordered_json j;
    j["ticker"] = spec.ticker;
    j["lag"] = spec.lag;
    j["dual"] = spec.include_dual ? "yes" : "no";
    j["regime"] = spec.regime.kind == RegimeKind::mece ? "mece" : "rolling";
    j["window"] = spec.regime.window;
    j["train_size"] = spec.regime.train_size;
    j["test_size"] = spec.regime.test_size;
    j["retrain_per_origin"] = spec.regime.retrain_per_origin;
    j["seed"] = spec.train.seed;
    j["hyperparameters"] = train_json(spec.train);
    j["predictions"] = predictions_file;
    j["warnings"] = run.warnings;
    const MetricTriple m = evaluate(run);
    j["metrics"] = {{"rmse", m.rmse}, {"mae", m.mae}, {"mape", m.mape}};
    return j;
}

namespace {

void write_grid(const ReportGrid& grid, OutputSink& sink) {
    sink.write("forecast/grid.csv", grid.table_csv());
    sink.write("forecast/grid.json", dump(grid.table_json()));
    sink.write("forecast/metrics_long.csv", grid.long_csv());
}

}  // namespace

CommandResult cmd_forecast(const RunConfig& config, OutputSink& sink) {
    CommandResult result;
    const auto loaded = load_tickers(config);
    const auto aligned = align_all(loaded);
    const auto& g = config.forecast;

    std::vector<RegimeSpec> regimes;
    for (std::size_t w : g.windows) {
        regimes.push_back(RegimeSpec::rolling(w, g.test_size, g.retrain_per_origin));
    }
    if (g.mece) {
        regimes.push_back(RegimeSpec::mece(g.train_size, g.test_size));
    }

    struct Task {
        std::size_t ticker;
        ForecastSpec spec;
    };
    std::vector<Task> tasks;
    for (std::size_t k = 0; k < aligned.size(); ++k) {
        if (!g.targets.empty() &&
            std::find(g.targets.begin(), g.targets.end(), aligned[k].ticker()) == g.targets.end()) {
            continue;
        }
        for (std::size_t lag : g.lags) {
            for (bool dual : g.duals) {
                for (const auto& regime : regimes) {
                    ForecastSpec spec;
                    spec.ticker = aligned[k].ticker();
                    spec.lag = lag;
                    spec.include_dual = dual;
                    spec.regime = regime;
                    spec.train = g.train;
                    spec.threads = 1;
                    spec.train.seed = derive_seed(config.seed, "forecast:" + run_stem(spec));
                    tasks.push_back({k, spec});
                }
            }
        }
    }

    std::vector<std::optional<ForecastRun>> runs(tasks.size());
    std::vector<std::string> skip_reason(tasks.size());
    std::vector<std::string> fail_reason(tasks.size());
    parallel_for(tasks.size(), g.threads, [&](std::size_t i) {
        const Task& task = tasks[i];
        const PriceSeries& own = aligned[task.ticker];
        ForecastInput input{own.mid(), std::nullopt, own.dates()};
        if (task.spec.include_dual) {
            if (aligned.size() != 3) {
                skip_reason[i] = run_stem(task.spec) + ": dual features need exactly three tickers";
                return;
            }
            std::vector<std::size_t> others;
            for (std::size_t k = 0; k < aligned.size(); ++k) {
                if (k != task.ticker) {
                    others.push_back(k);
                }
            }
            input.siblings = Siblings{aligned[others[0]].mid(), aligned[others[1]].mid()};
        }
        try {
            runs[i] = run_forecast(input, task.spec);
        } catch (const InsufficientData& e) {
            skip_reason[i] = run_stem(task.spec) + ": " + e.what();
        } catch (const std::exception& e) {
            fail_reason[i] = run_stem(task.spec) + ": " + e.what();
        }
    });

    std::vector<ForecastRun> completed;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!skip_reason[i].empty()) {
            result.skipped.push_back("forecast " + skip_reason[i]);
        }
        if (!fail_reason[i].empty()) {
            result.failures.push_back("forecast " + fail_reason[i]);
        }
        if (!runs[i]) {
            continue;
        }
        const std::string stem = run_stem(runs[i]->spec);
        sink.write("forecast/runs/" + stem + ".csv", predictions_csv(*runs[i]));
        sink.write("forecast/runs/" + stem + ".json", dump(run_manifest(*runs[i], stem + ".csv")));
        completed.push_back(std::move(*runs[i]));
    }
    std::vector<std::string> names;
    for (const auto& task : tasks) {
        if (std::find(names.begin(), names.end(), task.spec.ticker) == names.end()) {
            names.push_back(task.spec.ticker);
        }
    }
    write_grid(assemble_grid(completed, GridLayout::standard(names)), sink);
    return result;
}

CommandResult cmd_report(OutputSink& sink) {
    CommandResult result;
    const fs::path dir = sink.root() / "forecast" / "runs";
    if (!fs::is_directory(dir)) {
        result.failures.push_back("report: no run manifests under '" + dir.string() + "'");
        return result;
    }
    std::vector<fs::path> manifests;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") {
            manifests.push_back(entry.path());
        }
    }
    std::sort(manifests.begin(), manifests.end());

    std::vector<RunMetrics> metrics;
    std::vector<std::string> tickers;
    for (const auto& path : manifests) {
        try {
            const json m = json::parse(read_file(path));
            std::istringstream csv(read_file(dir / m.at("predictions").get<std::string>()));
            std::string line;
            std::getline(csv, line);
            std::vector<double> actual;
            std::vector<double> predicted;
            while (std::getline(csv, line)) {
                if (line.empty()) {
                    continue;
                }
                const auto fields = split_csv_line(line);
                if (fields.size() < 4) {
                    throw std::runtime_error("malformed predictions row");
                }
                actual.push_back(std::stod(fields[2]));
                predicted.push_back(std::stod(fields[3]));
            }
            CellKey key;
            key.ticker = m.at("ticker").get<std::string>();
            key.regime = m.at("regime").get<std::string>() == "mece"
                             ? RegimeRow{RegimeKind::mece, 0}
                             : RegimeRow{RegimeKind::rolling, m.at("window").get<std::size_t>()};
            key.lag = m.at("lag").get<std::size_t>();
            key.dual = m.at("dual").get<std::string>() == "yes";
            metrics.push_back({key, evaluate(predicted, actual)});
            if (std::find(tickers.begin(), tickers.end(), key.ticker) == tickers.end()) {
                tickers.push_back(key.ticker);
            }
        } catch (const std::exception& e) {
            result.failures.push_back("report " + path.filename().string() + ": " + e.what());
        }
    }
    write_grid(assemble_grid(metrics, GridLayout::standard(tickers)), sink);
    return result;
}

CommandResult run_analysis(const RunConfig& config, Analysis analysis, OutputSink& sink) {
    config.validate();
    sink.write("config.json", dump(config.to_json()));
    CommandResult result;
    if (analysis == Analysis::premiums || analysis == Analysis::all) {
        result.merge(cmd_premiums(config, sink));
    }
    if (analysis == Analysis::coherence || analysis == Analysis::all) {
        result.merge(cmd_coherence(config, sink));
    }
    if (analysis == Analysis::forecast || analysis == Analysis::all) {
        result.merge(cmd_forecast(config, sink));
    }
    return result;
}

void write_manifest(const OutputSink& sink, const std::string& command, const CommandResult& result) {
    const fs::path path = sink.root() / "manifest.json";
    std::map<std::string, OutputRecord> files;
    if (fs::exists(path)) {
        try {
            const json old = json::parse(read_file(path));
            for (const auto& f : old.at("files")) {
                const std::string p = f.at("path").get<std::string>();
                files[p] = {p, f.at("sha256").get<std::string>(), f.at("bytes").get<std::size_t>()};
            }
        } catch (const std::exception&) {
            files.clear();
        }
    }
    for (const auto& r : sink.records()) {
        files[r.path] = r;
    }
    ordered_json doc;
    doc["last_command"] = command;
    doc["failures"] = result.failures;
    doc["skipped"] = result.skipped;
    doc["files"] = ordered_json::array();
    for (const auto& [p, r] : files) {
        doc["files"].push_back({{"path", r.path}, {"sha256", r.sha256}, {"bytes", r.bytes}});
    }
    std::ofstream out(path, std::ios::binary);
    out << dump(doc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
}

std::vector<TickerInput> write_synthetic_dataset(const fs::path& dir, const SyntheticSpec& spec) {
    if (spec.tickers.empty() || spec.length < 2) {
        throw std::invalid_argument("synthetic dataset: need tickers and length >= 2");
    }
    fs::create_directories(dir);
    Rng rng(derive_seed(spec.seed, "synthetic"));
    std::vector<Date> dates;
    Date day = Date{std::chrono::year{2001} / 1 / 2};
    while (dates.size() < spec.length) {
        const std::chrono::weekday wd{day};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) {
            dates.push_back(day);
        }
        day += std::chrono::days{1};
    }
    const std::size_t k = spec.tickers.size();
    std::vector<double> level(k);
    std::vector<double> deviation(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        level[i] = 10.0 - 2.0 * static_cast<double>(i);
        if (level[i] < 2.0) {
            level[i] = 2.0;
        }
    }
    std::vector<std::ostringstream> files(k);
    for (auto& f : files) {
        f << "date,high,low\n";
    }
    double trend = 0.0;
    for (std::size_t t = 0; t < spec.length; ++t) {
        trend += 0.0003 + 0.015 * rng.normal();
        for (std::size_t i = 0; i < k; ++i) {
            deviation[i] = 0.97 * deviation[i] + 0.01 * rng.normal();
            const double mid = level[i] * std::exp(trend + deviation[i]);
            const double half_spread = mid * 0.01 * rng.uniform();
            files[i] << format_date(dates[t]) << ',' << fixed(mid + half_spread, 6) << ','
                     << fixed(mid - half_spread, 6) << '\n';
        }
    }
    std::vector<TickerInput> inputs;
    for (std::size_t i = 0; i < k; ++i) {
        const fs::path path = dir / (spec.tickers[i] + ".csv");
        std::ofstream out(path, std::ios::binary);
        out << files[i].str();
        if (!out) {
            throw std::runtime_error("cannot write '" + path.string() + "'");
        }
        inputs.push_back({spec.tickers[i], path});
    }
    return inputs;
}

}  // namespace dualclass
