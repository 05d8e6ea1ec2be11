#include "optbench/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "optbench/blackscholes.hpp"
#include "optbench/errors.hpp"
#include "optbench/eval.hpp"
#include "optbench/ingest.hpp"

namespace optbench::cli {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

double to_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw UsageError(key + ": expected a number, got '" + text + "'");
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw UsageError(key + ": expected a non-negative integer, got '" + text + "'");
    return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
    return static_cast<std::size_t>(to_u64(key, text));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(to_double(key, item));
    if (out.empty()) throw UsageError(key + ": expected a comma-separated list of numbers");
    return out;
}

std::string fmt(double v) { return io::format_double(v); }

std::string fmt_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += fmt(values[i]);
    }
    return out;
}

struct KeyBinding {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define OB_DOUBLE(member)                                                                              \
    KeyBinding {                                                                                       \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
            [](const RunConfig& c) { return fmt(c.member); }                                           \
    }
#define OB_SIZE(member)                                                                              \
    KeyBinding {                                                                                     \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_size(k, v); }, \
            [](const RunConfig& c) { return std::to_string(c.member); }                              \
    }
#define OB_LIST(member)                                                                              \
    KeyBinding {                                                                                     \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_list(k, v); }, \
            [](const RunConfig& c) { return fmt_list(c.member); }                                    \
    }

const std::map<std::string, KeyBinding>& bindings() {
    static const std::map<std::string, KeyBinding> table = {
        {"seed", KeyBinding{[](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); },
                            [](const RunConfig& c) { return std::to_string(c.seed); }}},
        {"data.path",
         KeyBinding{[](RunConfig& c, const std::string&, const std::string& v) { c.data_path = trim(v); },
                    [](const RunConfig& c) { return c.data_path ? c.data_path->string() : std::string(); }}},
        {"sim.n_underlyings", OB_SIZE(sim.n_underlyings)},
        {"sim.days_per_underlying", OB_SIZE(sim.days_per_underlying)},
        {"sim.s0_min", OB_DOUBLE(sim.s0_range.lo)},
        {"sim.s0_max", OB_DOUBLE(sim.s0_range.hi)},
        {"sim.drift", OB_DOUBLE(sim.drift)},
        {"sim.rate_min", OB_DOUBLE(sim.rate_range.lo)},
        {"sim.rate_max", OB_DOUBLE(sim.rate_range.hi)},
        {"sim.yield_min", OB_DOUBLE(sim.yield_range.lo)},
        {"sim.yield_max", OB_DOUBLE(sim.yield_range.hi)},
        {"sim.maturities", OB_LIST(sim.maturities)},
        {"sim.moneyness", OB_LIST(sim.moneyness_grid)},
        {"sim.half_spread", OB_DOUBLE(sim.half_spread)},
        {"sim.min_price", OB_DOUBLE(sim.min_price)},
        {"sim.vol_regimes",
         KeyBinding{[](RunConfig& c, const std::string& k, const std::string& v) {
                        std::vector<sim::VolRegime> regimes;
                        for (const auto& item : split_list(v)) {
                            const auto colon = item.find(':');
                            if (colon == std::string::npos)
                                throw UsageError(k + ": expected sigma:weight pairs, got '" + item + "'");
                            regimes.push_back({to_double(k, item.substr(0, colon)), to_double(k, item.substr(colon + 1))});
                        }
                        if (regimes.empty()) throw UsageError(k + ": expected at least one sigma:weight pair");
                        c.sim.vol_regimes = std::move(regimes);
                    },
                    [](const RunConfig& c) {
                        std::string out;
                        for (std::size_t i = 0; i < c.sim.vol_regimes.size(); ++i) {
                            if (i) out += ',';
                            out += fmt(c.sim.vol_regimes[i].sigma) + ":" + fmt(c.sim.vol_regimes[i].weight);
                        }
                        return out;
                    }}},
        {"split.train_fraction", OB_DOUBLE(split.train_fraction)},
        {"split.val_fraction", OB_DOUBLE(split.val_fraction)},
        {"split.test_fraction", OB_DOUBLE(split.test_fraction)},
        {"gbdt.num_rounds", OB_SIZE(gbdt.num_rounds)},
        {"gbdt.early_stopping_rounds", OB_SIZE(gbdt.early_stopping_rounds)},
        {"gbdt.n_bins", OB_SIZE(gbdt.n_bins)},
        {"gbdt.lambda", OB_DOUBLE(gbdt.lambda)},
        {"gbdt.min_child_weight", OB_DOUBLE(gbdt.min_child_weight)},
        {"gbdt.eta_base", OB_DOUBLE(gbdt.eta.eta_base)},
        {"gbdt.eta_min", OB_DOUBLE(gbdt.eta.eta_min)},
        {"gbdt.eta_max_iter", OB_DOUBLE(gbdt.eta.max_iter_decay)},
        {"mlp.initial_lr", OB_DOUBLE(mlp.initial_lr)},
        {"mlp.plateau_factor", OB_DOUBLE(mlp.plateau_factor)},
        {"mlp.plateau_patience", OB_SIZE(mlp.plateau_patience)},
        {"mlp.min_lr", OB_DOUBLE(mlp.min_lr)},
        {"mlp.early_stop_patience", OB_SIZE(mlp.early_stop_patience)},
        {"mlp.max_epochs", OB_SIZE(mlp.max_epochs)},
        {"mlp.batch_size", OB_SIZE(mlp.batch_size)},
        {"eval.curve_bins", OB_SIZE(curve_bins)},
        {"report.hist_bins", OB_SIZE(hist_bins)},
    };
    return table;
}

#undef OB_DOUBLE
#undef OB_SIZE
#undef OB_LIST

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& table = bindings();
    const auto it = table.find(key);
    if (it == table.end()) throw UsageError("unknown configuration key '" + key + "'");
    it->second.set(*this, key, value);
}

std::map<std::string, std::string> RunConfig::to_map() const {
    std::map<std::string, std::string> out;
    for (const auto& [key, binding] : bindings()) out[key] = binding.get(*this);
    return out;
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [key, binding] : bindings()) out.push_back(key);
        return out;
    }();
    return k;
}

std::filesystem::path RunConfig::dataset_path() const {
    return data_path ? *data_path : out_dir / "dataset.csv";
}

sim::SimConfig RunConfig::sim_config() const {
    auto c = sim;
    c.seed = seed;
    return c;
}

SplitSpec RunConfig::split_spec() const {
    auto s = split;
    s.seed = seed;
    return s;
}

gbdt::GbdtConfig RunConfig::gbdt_config(std::size_t max_depth) const {
    auto c = gbdt;
    c.max_depth = max_depth;
    c.seed = seed;
    return c;
}

mlp::MlpTrainConfig RunConfig::mlp_config() const {
    auto c = mlp;
    c.seed = seed;
    return c;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return entries;
}

std::optional<ModelPreset> parse_preset(std::string_view name) {
    if (name == "gbdt5") return ModelPreset::Gbdt5;
    if (name == "gbdt10") return ModelPreset::Gbdt10;
    if (name == "mlp3") return ModelPreset::Mlp3;
    if (name == "mlp5") return ModelPreset::Mlp5;
    return std::nullopt;
}

std::string to_string(ModelPreset preset) {
    switch (preset) {
        case ModelPreset::Gbdt5: return "gbdt5";
        case ModelPreset::Gbdt10: return "gbdt10";
        case ModelPreset::Mlp3: return "mlp3";
        case ModelPreset::Mlp5: return "mlp5";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

namespace {

json split_json(const SplitSpec& s) {
    return {{"train_fraction", s.train_fraction},
            {"val_fraction", s.val_fraction},
            {"test_fraction", s.test_fraction},
            {"seed", s.seed}};
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_json(const std::filesystem::path& path, const json& j) {
    io::write_text_file(path, j.dump(2) + "\n");
}

struct LoadedData {
    std::vector<OptionQuote> quotes;
    Dataset dataset;
    std::string digest;
};

LoadedData load_dataset(const RunConfig& cfg, std::ostream& err) {
    const auto path = cfg.dataset_path();
    if (!std::filesystem::exists(path)) throw IoError("dataset '" + path.string() + "' does not exist");
    auto read = io::read_csv_report(path);
    for (const auto& issue : read.issues)
        err << "warning: " << path.string() << " line " << issue.line << ": " << issue.message << "\n";
    auto filtered = filter_quotes(read.quotes);
    if (filtered.dropped_count > 0) {
        err << "warning: dropped " << filtered.dropped_count << " quotes failing the dataset filters\n";
    }
    LoadedData d;
    d.quotes = std::move(filtered.kept);
    d.dataset = Dataset::from_quotes(d.quotes, Provenance::Ingested);
    d.digest = io::file_digest(path);
    return d;
}

int cmd_gen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto sim_cfg = cfg.sim_config();
    const auto quotes = sim::generate_dataset(sim_cfg);
    if (quotes.empty()) err << "warning: generated dataset is empty\n";
    const auto path = cfg.out_dir / "dataset.csv";
    io::write_csv(quotes, path);

    json manifest;
    manifest["command"] = "gen";
    manifest["config"] = cfg.to_map();
    manifest["seed"] = cfg.seed;
    manifest["row_count"] = quotes.size();
    manifest["dataset_digest"] = io::file_digest(path);
    write_json(cfg.out_dir / "dataset.manifest.json", manifest);
    out << "wrote " << quotes.size() << " quotes to " << path.string() << "\n";
    return kOk;
}

int cmd_split(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto data = load_dataset(cfg, err);
    const auto spec = cfg.split_spec();
    const auto parts = split_dataset(data.dataset, spec);

    auto write_part = [&](const Dataset& part, const std::string& name) {
        std::vector<OptionQuote> quotes;
        quotes.reserve(part.size());
        for (const auto& row : part.rows()) quotes.push_back(data.quotes[row.id]);
        io::write_csv(quotes, cfg.out_dir / (name + ".csv"));
    };
    write_part(parts.train, "train");
    write_part(parts.val, "val");
    write_part(parts.test, "test");

    json manifest;
    manifest["command"] = "split";
    manifest["dataset_digest"] = data.digest;
    manifest["split"] = split_json(spec);
    manifest["sizes"] = {{"train", parts.train.size()}, {"val", parts.val.size()}, {"test", parts.test.size()}};
    write_json(cfg.out_dir / "split.manifest.json", manifest);
    out << "train " << parts.train.size() << ", val " << parts.val.size() << ", test " << parts.test.size() << "\n";
    return kOk;
}

std::string gbdt_metrics_csv(const gbdt::TreeEnsemble& model) {
    std::string csv = "round,eta,train_mae,val_mae\n";
    for (const auto& h : model.history)
        csv += std::to_string(h.round) + "," + fmt(h.eta) + "," + fmt(h.train_mae) + "," + fmt(h.val_mae) + "\n";
    return csv;
}

std::string mlp_metrics_csv(const mlp::MlpTrainResult& result) {
    std::string csv = "epoch,lr,train_mae,val_mae\n";
    for (const auto& h : result.history)
        csv += std::to_string(h.epoch) + "," + fmt(h.lr) + "," + fmt(h.train_mae) + "," + fmt(h.val_mae) + "\n";
    return csv;
}

int cmd_train(const RunConfig& cfg, ModelPreset preset, std::ostream& out, std::ostream& err) {
    const auto data = load_dataset(cfg, err);
    const auto spec = cfg.split_spec();
    const auto parts = split_dataset(data.dataset, spec);
    const std::string kind = to_string(preset);

    json metadata;
    metadata["kind"] = kind;
    metadata["dataset_digest"] = data.digest;
    metadata["split"] = split_json(spec);

    const auto model_path = cfg.out_dir / (kind + ".model");
    json sidecar;
    sidecar["kind"] = kind;
    sidecar["dataset_digest"] = data.digest;
    sidecar["train_rows"] = parts.train.size();
    sidecar["val_rows"] = parts.val.size();

    const auto start = std::chrono::steady_clock::now();
    if (preset == ModelPreset::Gbdt5 || preset == ModelPreset::Gbdt10) {
        const auto gcfg = cfg.gbdt_config(preset == ModelPreset::Gbdt5 ? 5 : 10);
        const auto model = gbdt::train_gbdt(parts.train, parts.val, gcfg);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        io::save_model(model, model_path, metadata);
        io::write_text_file(cfg.out_dir / (kind + ".metrics.csv"), gbdt_metrics_csv(model));
        sidecar["training_seconds"] = seconds;
        sidecar["best_round"] = model.best_round;
        sidecar["rounds_run"] = model.history.size();
        sidecar["hyperparameters"] = io::to_json(gcfg);
    } else {
        const auto arch = preset == ModelPreset::Mlp3 ? mlp::Architecture::three_layer()
                                                      : mlp::Architecture::five_layer();
        const auto mcfg = cfg.mlp_config();
        metadata["hyperparameters"] = io::to_json(mcfg);
        const auto result = mlp::train_mlp(parts.train, parts.val, arch, mcfg);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        io::save_model(result.network, model_path, metadata);
        io::write_text_file(cfg.out_dir / (kind + ".metrics.csv"), mlp_metrics_csv(result));
        sidecar["training_seconds"] = seconds;
        sidecar["best_epoch"] = result.best_epoch;
        sidecar["epochs_run"] = result.history.size();
        sidecar["layers"] = io::to_json(arch);
        sidecar["hyperparameters"] = io::to_json(mcfg);
    }
    write_json(cfg.out_dir / (kind + ".manifest.json"), sidecar);
    out << "trained " << kind << " in " << sidecar["training_seconds"].get<double>() << " s -> "
        << model_path.string() << "\n";
    return kOk;
}

std::vector<double> black_scholes_predictions(const Dataset& test, bool use_implied) {
    std::vector<double> preds;
    preds.reserve(test.size());
    for (const auto& row : test.rows()) {
        const auto& x = row.features;
        double vol = 0.0;
        if (use_implied) {
            vol = *row.implied_vol;
        } else {
            // Constant lags give zero realized vol; keep the input priceable.
            vol = std::max(1e-4, sim::realized_vol(std::span(x).subspan(feature::kFirstLag, kLagCount)));
        }
        const bs::BsInputs in{x[feature::kUnderlying],    x[feature::kStrike], x[feature::kMaturity],
                              x[feature::kRate],          x[feature::kDividendYield], vol,
                              x[feature::kIsCall] == 1.0 ? OptionType::Call : OptionType::Put};
        preds.push_back(bs::bs_price(in));
    }
    return preds;
}

std::optional<double> sidecar_seconds(const std::filesystem::path& model_path) {
    auto sidecar = model_path;
    sidecar.replace_extension(".manifest.json");
    if (!std::filesystem::exists(sidecar)) return std::nullopt;
    const json j = json::parse(io::read_text_file(sidecar), nullptr, false);
    if (j.is_discarded() || !j.contains("training_seconds")) return std::nullopt;
    return j["training_seconds"].get<double>();
}

int cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& model_paths, bool include_bs,
                 std::ostream& out, std::ostream& err) {
    if (model_paths.empty() && !include_bs) throw UsageError("evaluate: give model files and/or --include-bs");
    const auto data = load_dataset(cfg, err);
    const auto spec = cfg.split_spec();
    const auto parts = split_dataset(data.dataset, spec);
    const auto& test = parts.test;
    if (test.empty()) throw DataError("test split is empty");
    const auto targets = test.targets();

    std::vector<eval::ModelResult> results;
    for (const auto& p : model_paths) {
        const std::filesystem::path path(p);
        const auto kind = io::peek_model_kind(path);
        const json manifest = io::read_model_manifest(path);
        if (manifest.value("dataset_digest", std::string()) != data.digest)
            throw InconsistentEvaluationError("model '" + p + "' was trained on a different dataset");
        if (!manifest.contains("split") || manifest["split"] != split_json(spec))
            throw InconsistentEvaluationError("model '" + p + "' was trained with a different split");

        eval::ModelResult r;
        r.model_name = path.stem().string();
        r.targets = targets;
        r.training_seconds = sidecar_seconds(path);
        if (kind == io::ModelKind::TreeEnsemble) {
            const auto model = io::load_tree_ensemble(path);
            for (const auto& row : test.rows()) r.predictions.push_back(model.predict(row.features));
        } else {
            r.predictions = io::load_network(path).predict(test);
        }
        results.push_back(std::move(r));
    }
    if (include_bs) {
        const bool all_iv = std::all_of(test.rows().begin(), test.rows().end(),
                                        [](const DatasetRow& r) { return r.implied_vol.has_value(); });
        if (all_iv) {
            results.push_back({"bs_implied_vol", black_scholes_predictions(test, true), targets, std::nullopt});
        } else {
            err << "warning: some test rows lack implied_vol; skipping the implied-vol baseline\n";
        }
        results.push_back({"bs_realized_vol", black_scholes_predictions(test, false), targets, std::nullopt});
    }

    std::vector<std::string> names;
    for (const auto& r : results) {
        if (std::find(names.begin(), names.end(), r.model_name) != names.end())
            throw UsageError("evaluate: duplicate model name '" + r.model_name + "'");
        names.push_back(r.model_name);
    }

    const auto report = eval::compare_models(results, cfg.curve_bins);
    eval::write_report(report, cfg.out_dir);
    json manifest;
    manifest["command"] = "evaluate";
    manifest["generated_at"] = utc_timestamp();
    manifest["dataset_digest"] = data.digest;
    manifest["target_digest"] = report.target_digest;
    manifest["test_rows"] = test.size();
    manifest["split"] = split_json(spec);
    manifest["models"] = names;
    write_json(cfg.out_dir / "report.manifest.json", manifest);
    out << eval::format_table(report);
    return kOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto data = load_dataset(cfg, err);
    if (data.dataset.empty()) throw DataError("dataset is empty");
    std::vector<std::pair<std::string, eval::SummaryStats>> stats;
    for (auto column : eval::all_columns()) {
        const auto values = eval::column_values(data.dataset, column);
        if (values.empty()) continue;
        const auto name = eval::to_string(column);
        stats.emplace_back(name, eval::summary_stats(values));
        io::write_text_file(cfg.out_dir / ("hist_" + name + ".csv"),
                            eval::histogram_csv(eval::histogram(values, cfg.hist_bins)));
    }
    io::write_text_file(cfg.out_dir / "summary_stats.csv", eval::summary_csv(stats));

    json manifest;
    manifest["command"] = "report";
    manifest["dataset_digest"] = data.digest;
    manifest["rows"] = data.dataset.size();
    write_json(cfg.out_dir / "summary.manifest.json", manifest);

    char line[256];
    std::snprintf(line, sizeof line, "%-16s %10s %12s %12s %12s %12s %12s %12s %12s\n", "column", "count", "mean",
                  "std", "min", "25%", "50%", "75%", "max");
    out << line;
    for (const auto& [name, s] : stats) {
        std::snprintf(line, sizeof line, "%-16s %10zu %12.6g %12.6g %12.6g %12.6g %12.6g %12.6g %12.6g\n",
                      name.c_str(), s.count, s.mean, s.std, s.min, s.q25, s.median, s.q75, s.max);
        out << line;
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Options-pricing benchmark: synthetic data, Black-Scholes, boosted trees and dense networks"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> data_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Flat key = value configuration file");
    app.add_option("--seed", seed, "Global seed (overrides the config file)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--data", data_path, "Dataset CSV (default <out>/dataset.csv)");
    app.add_option("--set", overrides, "Override a configuration key: key=value");

    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    auto* split = app.add_subcommand("split", "Write the train/val/test partitions");
    auto* train = app.add_subcommand("train", "Train one model preset");
    std::string kind;
    train->add_option("kind", kind, "gbdt5 | gbdt10 | mlp3 | mlp5")->required();
    auto* evaluate = app.add_subcommand("evaluate", "Score models on the held-out test split");
    std::vector<std::string> model_paths;
    bool include_bs = false;
    evaluate->add_option("models", model_paths, "Model files");
    evaluate->add_flag("--include-bs", include_bs, "Add the Black-Scholes baselines");
    auto* report = app.add_subcommand("report", "Summary statistics and histograms of the dataset");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsageError;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            for (const auto& [k, v] : parse_config_text(io::read_text_file(config_path))) cfg.set(k, v);
        }
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + o + "'");
            cfg.set(trim(o.substr(0, eq)), o.substr(eq + 1));
        }
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.out_dir = *out_dir;
        if (data_path) cfg.data_path = *data_path;

        if (gen->parsed()) return cmd_gen(cfg, out, err);
        if (split->parsed()) return cmd_split(cfg, out, err);
        if (train->parsed()) {
            const auto preset = parse_preset(kind);
            if (!preset) throw UsageError("unknown model kind '" + kind + "' (expected gbdt5, gbdt10, mlp3, mlp5)");
            return cmd_train(cfg, *preset, out, err);
        }
        if (evaluate->parsed()) return cmd_evaluate(cfg, model_paths, include_bs, out, err);
        if (report->parsed()) return cmd_report(cfg, out, err);
        throw UsageError("no command given");
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsageError;
    } catch (const TrainingError& e) {
        err << "training error: " << e.what() << "\n";
        return kTrainingError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const ValidationError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const DomainError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    }
}

}  // namespace optbench::cli
