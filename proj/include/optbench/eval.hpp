#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optbench/core.hpp"

namespace optbench::eval {

double mae(std::span<const double> predictions, std::span<const double> targets);

// Percent: (100/n) * sum |p - t| / t. Every target must be positive.
double mape(std::span<const double> predictions, std::span<const double> targets);

struct ErrorBin {
    double lower = 0.0;
    double upper = 0.0;
    std::optional<double> mean_abs_error;      // empty when count == 0
    std::optional<double> mean_abs_pct_error;  // empty when count == 0
    std::size_t count = 0;
};

// Targets bucketed into n_bins log-spaced bins over [min target, max target].
std::vector<ErrorBin> binned_errors(std::span<const double> predictions, std::span<const double> targets,
                                    std::size_t n_bins);

struct SummaryStats {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // sample deviation, divisor n - 1
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
};

// Quantiles interpolate linearly between order statistics.
SummaryStats summary_stats(std::span<const double> column);

enum class Column { Midpoint, Strike, ImpliedVol, Rate, DividendYield, Maturity, UnderlyingPrice, IsCall };

std::string to_string(Column c);
const std::vector<Column>& all_columns();

// Values of one column; ImpliedVol skips rows that carry none.
std::vector<double> column_values(const Dataset& ds, Column c);

SummaryStats summary_stats(const Dataset& ds, Column c);

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
};

// Equal-width bins over [min, max]; the last bin is closed on the right.
std::vector<HistogramBin> histogram(std::span<const double> column, std::size_t n_bins);

struct ModelResult {
    std::string model_name;
    std::vector<double> predictions;
    std::vector<double> targets;
    std::optional<double> training_seconds;  // empty for untrained baselines
};

struct ReportRow {
    std::string model_name;
    double mae = 0.0;
    double mape = 0.0;
    std::optional<double> training_seconds;
};

struct EvalReport {
    std::vector<ReportRow> rows;  // ascending MAE, ties by name
    std::map<std::string, std::vector<ErrorBin>> curves;
    std::string target_digest;
    std::size_t n_targets = 0;
};

std::string targets_digest(std::span<const double> targets);

// Throws InconsistentEvaluationError unless all results share one target sequence.
EvalReport compare_models(std::span<const ModelResult> results, std::size_t curve_bins = 20);

// Aligned text table in the layout "Model  MAE  MAPE  Training (s)".
std::string format_table(const EvalReport& report);

// report.txt, report.csv and curve_<model>.csv under dir.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

std::string summary_csv(const std::vector<std::pair<std::string, SummaryStats>>& stats);
std::string histogram_csv(std::span<const HistogramBin> bins);
std::string curve_csv(std::span<const ErrorBin> bins);

}  // namespace optbench::eval
