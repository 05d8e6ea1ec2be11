#include "optbench/ingest.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "optbench/errors.hpp"

namespace optbench::io {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

const std::vector<std::string>& csv_header() {
    static const std::vector<std::string> header = [] {
        std::vector<std::string> h{"option_type", "strike",         "underlying_price", "rate",
                                   "dividend_yield", "maturity_years", "implied_vol"};
        for (std::size_t i = 1; i <= kLagCount; ++i) h.push_back("lag_" + std::to_string(i));
        h.emplace_back("midpoint");
        return h;
    }();
    return header;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view text, const std::string& column) {
    text = trim(text);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value))
        throw std::invalid_argument(column + ": cannot parse '" + std::string(text) + "' as a number");
    return value;
}

OptionQuote parse_row(std::string_view line) {
    const auto& header = csv_header();
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
        throw std::invalid_argument("expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    OptionQuote q;
    const auto type = trim(fields[0]);
    if (type == "C") q.option_type = OptionType::Call;
    else if (type == "P") q.option_type = OptionType::Put;
    else throw std::invalid_argument("option_type: expected C or P, got '" + std::string(type) + "'");

    q.strike = parse_number(fields[1], header[1]);
    q.underlying_price = parse_number(fields[2], header[2]);
    q.rate = parse_number(fields[3], header[3]);
    q.dividend_yield = parse_number(fields[4], header[4]);
    q.maturity_years = parse_number(fields[5], header[5]);
    if (!trim(fields[6]).empty()) q.implied_vol = parse_number(fields[6], header[6]);
    q.lags.resize(kLagCount);
    for (std::size_t k = 0; k < kLagCount; ++k) q.lags[k] = parse_number(fields[7 + k], header[7 + k]);
    q.midpoint = parse_number(fields[7 + kLagCount], header[7 + kLagCount]);
    return q;
}

}  // namespace

CsvReadResult read_csv_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header");
    const auto header_fields = split_fields(trim(line));
    const auto& expected = csv_header();
    bool header_ok = header_fields.size() == expected.size();
    for (std::size_t i = 0; header_ok && i < expected.size(); ++i) header_ok = trim(header_fields[i]) == expected[i];
    if (!header_ok) throw SchemaError(path.string() + ": header does not match the dataset schema");

    CsvReadResult result;
    std::size_t line_no = 1;
    std::size_t data_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++data_rows;
        try {
            result.quotes.push_back(parse_row(line));
        } catch (const std::invalid_argument& e) {
            result.issues.push_back(RowIssue{line_no, e.what()});
        }
    }
    if (!result.issues.empty() && result.issues.size() * 100 > data_rows) {
        std::ostringstream msg;
        msg << path.string() << ": " << result.issues.size() << " of " << data_rows
            << " rows malformed (limit 1%)";
        for (std::size_t i = 0; i < std::min<std::size_t>(3, result.issues.size()); ++i)
            msg << "; line " << result.issues[i].line << ": " << result.issues[i].message;
        if (result.issues.size() == 1)
            throw RowError(result.issues[0].line, result.issues[0].message);
        throw DataError(msg.str());
    }
    return result;
}

std::vector<OptionQuote> read_csv(const std::filesystem::path& path) {
    return read_csv_report(path).quotes;
}

std::string to_csv(std::span<const OptionQuote> quotes) {
    std::string out;
    const auto& header = csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& q : quotes) {
        if (q.lags.size() != kLagCount) throw ValidationError("lags", "expected 20");
        out += q.option_type == OptionType::Call ? 'C' : 'P';
        for (double v : {q.strike, q.underlying_price, q.rate, q.dividend_yield, q.maturity_years}) {
            out += ',';
            out += format_double(v);
        }
        out += ',';
        if (q.implied_vol) out += format_double(*q.implied_vol);
        for (double lag : q.lags) {
            out += ',';
            out += format_double(lag);
        }
        out += ',';
        out += format_double(q.midpoint);
        out += '\n';
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_csv(std::span<const OptionQuote> quotes, const std::filesystem::path& path) {
    write_text_file(path, to_csv(quotes));
}

std::string bytes_digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) {
    return bytes_digest(read_text_file(path));
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kTreeMagic[8] = {'O', 'B', 'T', 'R', 'E', 'E', 'S', '1'};
constexpr char kDenseMagic[8] = {'O', 'B', 'D', 'E', 'N', 'S', 'E', '1'};

class Writer {
public:
    template <typename T>
    void put(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&value);
        buf_.append(p, sizeof(T));
    }
    void bytes(std::string_view s) { buf_.append(s); }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        need(sizeof(T));
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    // Guards count fields against absurd values before allocating.
    std::size_t count(std::size_t element_size) {
        const auto n = get<std::uint64_t>();
        if (element_size > 0 && n > (data_.size() - pos_) / element_size) fail("declared count exceeds file size");
        return static_cast<std::size_t>(n);
    }
    void finish() const {
        if (pos_ != data_.size()) fail("trailing bytes after payload");
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw IncompatibleModelError(path_ + ": " + what);
    }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) fail("file is truncated");
    }
    std::string data_;
    std::string path_;
    std::size_t pos_ = 0;
};

void write_header(Writer& w, const char (&magic)[8], const nlohmann::json& manifest) {
    w.bytes(std::string_view(magic, 8));
    w.put<std::uint32_t>(kModelFormatVersion);
    const std::string text = manifest.dump();
    w.put<std::uint64_t>(text.size());
    w.bytes(text);
}

Reader open_model(const std::filesystem::path& path, const char (&magic)[8], nlohmann::json* manifest) {
    std::string data;
    try {
        data = read_text_file(path);
    } catch (const IoError&) {
        throw IncompatibleModelError("cannot open model '" + path.string() + "'");
    }
    Reader r(std::move(data), path.string());
    const std::string tag = r.bytes(8);
    if (tag != std::string_view(magic, 8)) r.fail("unexpected magic tag '" + tag + "'");
    const auto version = r.get<std::uint32_t>();
    if (version != kModelFormatVersion) r.fail("unsupported format version " + std::to_string(version));
    const std::string text = r.bytes(r.count(1));
    nlohmann::json parsed = nlohmann::json::parse(text, nullptr, false);
    if (parsed.is_discarded()) r.fail("manifest is not valid JSON");
    if (manifest) *manifest = std::move(parsed);
    return r;
}

}  // namespace

nlohmann::json to_json(const gbdt::GbdtConfig& cfg) {
    return {{"max_depth", cfg.max_depth},
            {"num_rounds", cfg.num_rounds},
            {"early_stopping_rounds", cfg.early_stopping_rounds},
            {"n_bins", cfg.n_bins},
            {"lambda", cfg.lambda},
            {"min_child_weight", cfg.min_child_weight},
            {"eta_base", cfg.eta.eta_base},
            {"eta_min", cfg.eta.eta_min},
            {"eta_max_iter", cfg.eta.max_iter_decay},
            {"eval_metric", "mae"},
            {"objective", "squared_error"},
            {"seed", cfg.seed}};
}

nlohmann::json to_json(const mlp::Architecture& arch) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : arch.layers) layers.push_back(l.units);
    return layers;
}

nlohmann::json to_json(const mlp::MlpTrainConfig& cfg) {
    return {{"initial_lr", cfg.initial_lr},
            {"plateau_factor", cfg.plateau_factor},
            {"plateau_patience", cfg.plateau_patience},
            {"min_lr", cfg.min_lr},
            {"early_stop_patience", cfg.early_stop_patience},
            {"max_epochs", cfg.max_epochs},
            {"batch_size", cfg.batch_size},
            {"adam_beta1", cfg.adam.beta1},
            {"adam_beta2", cfg.adam.beta2},
            {"adam_epsilon", cfg.adam.epsilon},
            {"loss", "mae"},
            {"seed", cfg.seed}};
}

ModelKind peek_model_kind(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char tag[8] = {};
    if (!in || !in.read(tag, 8)) throw IncompatibleModelError(path.string() + ": not a model file");
    if (std::memcmp(tag, kTreeMagic, 8) == 0) return ModelKind::TreeEnsemble;
    if (std::memcmp(tag, kDenseMagic, 8) == 0) return ModelKind::Network;
    throw IncompatibleModelError(path.string() + ": unrecognized magic tag");
}

nlohmann::json read_model_manifest(const std::filesystem::path& path) {
    nlohmann::json manifest;
    const auto kind = peek_model_kind(path);
    (void)open_model(path, kind == ModelKind::TreeEnsemble ? kTreeMagic : kDenseMagic, &manifest);
    return manifest;
}

void save_model(const gbdt::TreeEnsemble& model, const std::filesystem::path& path,
                const nlohmann::json& metadata) {
    nlohmann::json manifest = metadata;
    manifest["model"] = "gbdt";
    manifest["hyperparameters"] = to_json(model.config);

    Writer w;
    write_header(w, kTreeMagic, manifest);
    w.put<double>(model.base_score);
    w.put<std::uint64_t>(model.best_round);
    w.put<std::uint64_t>(model.trees.size());
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        w.put<double>(model.etas.at(t));
        const auto& nodes = model.trees[t].nodes;
        w.put<std::uint64_t>(nodes.size());
        for (const auto& n : nodes) {
            w.put<std::uint32_t>(n.feature);
            w.put<double>(n.threshold);
            w.put<std::uint32_t>(n.left);
            w.put<std::uint32_t>(n.right);
            w.put<double>(n.value);
        }
    }
    w.put<std::uint64_t>(model.history.size());
    for (const auto& h : model.history) {
        w.put<std::uint64_t>(h.round);
        w.put<double>(h.eta);
        w.put<double>(h.train_mae);
        w.put<double>(h.val_mae);
    }
    write_text_file(path, w.str());
}

gbdt::TreeEnsemble load_tree_ensemble(const std::filesystem::path& path, nlohmann::json* manifest_out) {
    nlohmann::json manifest;
    Reader r = open_model(path, kTreeMagic, &manifest);
    gbdt::TreeEnsemble model;
    try {
        const auto& hp = manifest.at("hyperparameters");
        model.config.max_depth = hp.at("max_depth").get<std::size_t>();
        model.config.num_rounds = hp.at("num_rounds").get<std::size_t>();
        model.config.early_stopping_rounds = hp.at("early_stopping_rounds").get<std::size_t>();
        model.config.n_bins = hp.at("n_bins").get<std::size_t>();
        model.config.lambda = hp.at("lambda").get<double>();
        model.config.min_child_weight = hp.at("min_child_weight").get<double>();
        model.config.eta.eta_base = hp.at("eta_base").get<double>();
        model.config.eta.eta_min = hp.at("eta_min").get<double>();
        model.config.eta.max_iter_decay = hp.at("eta_max_iter").get<double>();
        model.config.seed = hp.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("manifest lacks hyperparameters: ") + e.what());
    }

    constexpr std::size_t kNodeBytes = 4 + 8 + 4 + 4 + 8;
    model.base_score = r.get<double>();
    model.best_round = r.get<std::uint64_t>();
    const std::size_t n_trees = r.count(8 + 8);
    model.trees.resize(n_trees);
    model.etas.resize(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        model.etas[t] = r.get<double>();
        const std::size_t n_nodes = r.count(kNodeBytes);
        if (n_nodes == 0) r.fail("tree without nodes");
        auto& nodes = model.trees[t].nodes;
        nodes.resize(n_nodes);
        for (auto& n : nodes) {
            n.feature = r.get<std::uint32_t>();
            n.threshold = r.get<double>();
            n.left = r.get<std::uint32_t>();
            n.right = r.get<std::uint32_t>();
            n.value = r.get<double>();
        }
        // Children must exist and come after their parent, so routing terminates.
        for (std::size_t i = 0; i < n_nodes; ++i) {
            const auto& n = nodes[i];
            if (n.is_leaf()) continue;
            if (n.right == gbdt::kNoChild || n.left <= i || n.right <= i || n.left >= n_nodes ||
                n.right >= n_nodes || n.feature >= kFeatureCount)
                r.fail("corrupt tree structure");
        }
    }
    const std::size_t n_hist = r.count(8 * 4);
    model.history.resize(n_hist);
    for (auto& h : model.history) {
        h.round = r.get<std::uint64_t>();
        h.eta = r.get<double>();
        h.train_mae = r.get<double>();
        h.val_mae = r.get<double>();
    }
    r.finish();
    if (manifest_out) *manifest_out = std::move(manifest);
    return model;
}

void save_model(const mlp::Network& model, const std::filesystem::path& path, const nlohmann::json& metadata) {
    nlohmann::json manifest = metadata;
    manifest["model"] = "mlp";
    manifest["layers"] = to_json(model.architecture());
    manifest["inputs"] = model.input_dim();

    Writer w;
    write_header(w, kDenseMagic, manifest);
    w.put<std::uint64_t>(model.input_dim());
    w.put<std::uint64_t>(model.layers.size());
    for (const auto& l : model.layers) {
        w.put<std::uint64_t>(static_cast<std::uint64_t>(l.weights.rows()));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.activation));
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
            for (Eigen::Index rr = 0; rr < l.weights.rows(); ++rr) w.put<double>(l.weights(rr, c));
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) w.put<double>(l.bias(i));
    }
    w.put<std::uint64_t>(model.scaler.mean.size());
    for (double m : model.scaler.mean) w.put<double>(m);
    for (double d : model.scaler.deviation) w.put<double>(d);
    write_text_file(path, w.str());
}

mlp::Network load_network(const std::filesystem::path& path, nlohmann::json* manifest_out) {
    nlohmann::json manifest;
    Reader r = open_model(path, kDenseMagic, &manifest);
    mlp::Network net;
    const std::size_t inputs = r.count(0);
    const std::size_t n_layers = r.count(9);
    if (inputs == 0 || n_layers == 0) r.fail("empty network");
    std::size_t fan_in = inputs;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t units = r.count(8);
        const auto act = r.get<std::uint8_t>();
        if (act > 1) r.fail("unknown activation code");
        if (units == 0 || fan_in > (std::size_t{1} << 40) / units) r.fail("implausible layer shape");
        mlp::DenseLayer layer;
        layer.activation = static_cast<mlp::Activation>(act);
        layer.weights.resize(static_cast<Eigen::Index>(units), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
            for (Eigen::Index rr = 0; rr < layer.weights.rows(); ++rr) layer.weights(rr, c) = r.get<double>();
        layer.bias.resize(static_cast<Eigen::Index>(units));
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = r.get<double>();
        net.layers.push_back(std::move(layer));
        fan_in = units;
    }
    const std::size_t n_stats = r.count(16);
    if (n_stats != inputs) r.fail("standardization statistics do not match the input width");
    net.scaler.mean.resize(n_stats);
    net.scaler.deviation.resize(n_stats);
    for (double& m : net.scaler.mean) m = r.get<double>();
    for (double& d : net.scaler.deviation) d = r.get<double>();
    r.finish();
    if (manifest_out) *manifest_out = std::move(manifest);
    return net;
}

}  // namespace optbench::io
