#include "optbench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "optbench/errors.hpp"
#include "optbench/ingest.hpp"

namespace optbench::eval {

namespace {

void check_pair(std::span<const double> p, std::span<const double> t) {
    if (p.empty() || t.empty()) throw ValidationError("predictions", "must not be empty");
    if (p.size() != t.size())
        throw ValidationError("predictions", "length " + std::to_string(p.size()) +
                                                 " does not match targets length " + std::to_string(t.size()));
}

void check_positive_targets(std::span<const double> t) {
    for (double v : t)
        if (!(v > 0.0)) throw ValidationError("targets", "must all be positive for MAPE");
}

double quantile_sorted(const std::vector<double>& s, double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= s.size()) return s.back();
    return s[lo] + frac * (s[lo + 1] - s[lo]);
}

}  // namespace

double mae(std::span<const double> p, std::span<const double> t) {
    check_pair(p, t);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - t[i]);
    return sum / static_cast<double>(p.size());
}

double mape(std::span<const double> p, std::span<const double> t) {
    check_pair(p, t);
    check_positive_targets(t);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - t[i]) / t[i];
    return 100.0 * sum / static_cast<double>(p.size());
}

std::vector<ErrorBin> binned_errors(std::span<const double> p, std::span<const double> t, std::size_t n_bins) {
    check_pair(p, t);
    check_positive_targets(t);
    if (n_bins < 1) throw ValidationError("n_bins", "must be at least 1");

    const auto [min_it, max_it] = std::minmax_element(t.begin(), t.end());
    const double lo = *min_it;
    const double hi = *max_it;
    const double log_lo = std::log(lo);
    const double log_span = std::log(hi) - log_lo;

    std::vector<ErrorBin> bins(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double f0 = static_cast<double>(b) / static_cast<double>(n_bins);
        const double f1 = static_cast<double>(b + 1) / static_cast<double>(n_bins);
        bins[b].lower = b == 0 ? lo : std::exp(log_lo + f0 * log_span);
        bins[b].upper = b + 1 == n_bins ? hi : std::exp(log_lo + f1 * log_span);
    }

    std::vector<double> abs_sum(n_bins, 0.0), pct_sum(n_bins, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::size_t b = 0;
        if (log_span > 0.0) {
            const double pos = (std::log(t[i]) - log_lo) / log_span * static_cast<double>(n_bins);
            b = std::min(n_bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(pos))));
        }
        const double err = std::abs(p[i] - t[i]);
        abs_sum[b] += err;
        pct_sum[b] += err / t[i];
        ++bins[b].count;
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (bins[b].count == 0) continue;
        const auto c = static_cast<double>(bins[b].count);
        bins[b].mean_abs_error = abs_sum[b] / c;
        bins[b].mean_abs_pct_error = 100.0 * pct_sum[b] / c;
    }
    return bins;
}

SummaryStats summary_stats(std::span<const double> column) {
    if (column.empty()) throw ValidationError("column", "must not be empty");
    std::vector<double> s(column.begin(), column.end());
    std::sort(s.begin(), s.end());
    SummaryStats st;
    st.count = s.size();
    const auto n = static_cast<double>(s.size());
    st.mean = s.front() == s.back() ? s.front() : std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : s) ss += (v - st.mean) * (v - st.mean);
    st.std = s.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    st.min = s.front();
    st.q25 = quantile_sorted(s, 0.25);
    st.median = quantile_sorted(s, 0.5);
    st.q75 = quantile_sorted(s, 0.75);
    st.max = s.back();
    return st;
}

std::string to_string(Column c) {
    switch (c) {
        case Column::Midpoint: return "midpoint";
        case Column::Strike: return "strike";
        case Column::ImpliedVol: return "implied_vol";
        case Column::Rate: return "rate";
        case Column::DividendYield: return "dividend_yield";
        case Column::Maturity: return "maturity_years";
        case Column::UnderlyingPrice: return "underlying_price";
        case Column::IsCall: return "is_call";
    }
    return "unknown";
}

const std::vector<Column>& all_columns() {
    static const std::vector<Column> cols{Column::Midpoint,      Column::Strike,   Column::ImpliedVol,
                                          Column::Rate,          Column::DividendYield, Column::Maturity,
                                          Column::UnderlyingPrice, Column::IsCall};
    return cols;
}

std::vector<double> column_values(const Dataset& ds, Column c) {
    std::vector<double> out;
    out.reserve(ds.size());
    for (const auto& row : ds.rows()) {
        switch (c) {
            case Column::Midpoint: out.push_back(row.target); break;
            case Column::Strike: out.push_back(row.features[feature::kStrike]); break;
            case Column::ImpliedVol:
                if (row.implied_vol) out.push_back(*row.implied_vol);
                break;
            case Column::Rate: out.push_back(row.features[feature::kRate]); break;
            case Column::DividendYield: out.push_back(row.features[feature::kDividendYield]); break;
            case Column::Maturity: out.push_back(row.features[feature::kMaturity]); break;
            case Column::UnderlyingPrice: out.push_back(row.features[feature::kUnderlying]); break;
            case Column::IsCall: out.push_back(row.features[feature::kIsCall]); break;
        }
    }
    return out;
}

SummaryStats summary_stats(const Dataset& ds, Column c) {
    return summary_stats(column_values(ds, c));
}

std::vector<HistogramBin> histogram(std::span<const double> column, std::size_t n_bins) {
    if (column.empty()) throw ValidationError("column", "must not be empty");
    if (n_bins < 1) throw ValidationError("n_bins", "must be at least 1");
    const auto [min_it, max_it] = std::minmax_element(column.begin(), column.end());
    const double lo = *min_it;
    const double hi = *max_it;
    const double width = (hi - lo) / static_cast<double>(n_bins);

    std::vector<HistogramBin> bins(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        bins[b].lower = lo + width * static_cast<double>(b);
        bins[b].upper = b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (double v : column) {
        std::size_t b = 0;
        if (width > 0.0) b = std::min(n_bins - 1, static_cast<std::size_t>((v - lo) / width));
        ++bins[b].count;
    }
    return bins;
}

std::string targets_digest(std::span<const double> targets) {
    std::string bytes(targets.size() * sizeof(double), '\0');
    if (!targets.empty()) std::memcpy(bytes.data(), targets.data(), bytes.size());
    return io::bytes_digest(bytes);
}

EvalReport compare_models(std::span<const ModelResult> results, std::size_t curve_bins) {
    if (results.empty()) throw ValidationError("results", "need at least one model result");
    EvalReport report;
    report.target_digest = targets_digest(results.front().targets);
    report.n_targets = results.front().targets.size();
    for (const auto& r : results) {
        if (targets_digest(r.targets) != report.target_digest)
            throw InconsistentEvaluationError("model '" + r.model_name +
                                              "' was evaluated on a different target sequence");
        report.rows.push_back(ReportRow{r.model_name, mae(r.predictions, r.targets),
                                        mape(r.predictions, r.targets), r.training_seconds});
        report.curves[r.model_name] = binned_errors(r.predictions, r.targets, curve_bins);
    }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.mae != b.mae) return a.mae < b.mae;
        return a.model_name < b.model_name;
    });
    return report;
}

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width, bool right_align) {
    if (s.size() >= width) return s;
    const std::string fill(width - s.size(), ' ');
    return right_align ? fill + s : s + fill;
}

std::string optional_cell(const std::optional<double>& v) {
    return v ? io::format_double(*v) : std::string();
}

}  // namespace

std::string format_table(const EvalReport& report) {
    std::size_t name_w = std::string("Model").size();
    for (const auto& r : report.rows) name_w = std::max(name_w, r.model_name.size());
    std::string out;
    out += pad("Model", name_w, false) + "  " + pad("MAE", 12, true) + "  " + pad("MAPE", 12, true) + "  " +
           pad("Training (s)", 12, true) + "\n";
    out += std::string(name_w + 2 + 12 + 2 + 12 + 2 + 12, '-') + "\n";
    for (const auto& r : report.rows) {
        out += pad(r.model_name, name_w, false) + "  " + pad(fixed(r.mae, 4), 12, true) + "  " +
               pad(fixed(r.mape, 2), 12, true) + "  " +
               pad(r.training_seconds ? fixed(*r.training_seconds, 1) : "NA", 12, true) + "\n";
    }
    return out;
}

std::string curve_csv(std::span<const ErrorBin> bins) {
    std::string out = "bin_lower,bin_upper,mean_abs_error,mean_abs_pct_error,count\n";
    for (const auto& b : bins) {
        out += io::format_double(b.lower) + "," + io::format_double(b.upper) + "," +
               optional_cell(b.mean_abs_error) + "," + optional_cell(b.mean_abs_pct_error) + "," +
               std::to_string(b.count) + "\n";
    }
    return out;
}

std::string histogram_csv(std::span<const HistogramBin> bins) {
    std::string out = "bin_lower,bin_upper,count\n";
    for (const auto& b : bins)
        out += io::format_double(b.lower) + "," + io::format_double(b.upper) + "," + std::to_string(b.count) + "\n";
    return out;
}

std::string summary_csv(const std::vector<std::pair<std::string, SummaryStats>>& stats) {
    std::string out = "column,count,mean,std,min,25%,50%,75%,max\n";
    for (const auto& [name, s] : stats) {
        out += name + "," + std::to_string(s.count);
        for (double v : {s.mean, s.std, s.min, s.q25, s.median, s.q75, s.max}) out += "," + io::format_double(v);
        out += "\n";
    }
    return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
    io::write_text_file(dir / "report.txt", format_table(report));
    std::string csv = "model,mae,mape,training_seconds\n";
    for (const auto& r : report.rows)
        csv += r.model_name + "," + io::format_double(r.mae) + "," + io::format_double(r.mape) + "," +
               optional_cell(r.training_seconds) + "\n";
    io::write_text_file(dir / "report.csv", csv);
    for (const auto& [name, bins] : report.curves) io::write_text_file(dir / ("curve_" + name + ".csv"), curve_csv(bins));
}

}  // namespace optbench::eval
