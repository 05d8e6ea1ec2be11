#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "optbench/core.hpp"
#include "optbench/gbdt.hpp"
#include "optbench/mlp.hpp"

namespace optbench::io {

// option_type, strike, underlying_price, rate, dividend_yield, maturity_years,
// implied_vol, lag_1..lag_20, midpoint
const std::vector<std::string>& csv_header();

// Shortest decimal that parses back to the same double (at most 17 digits).
std::string format_double(double value);

struct RowIssue {
    std::size_t line = 0;
    std::string message;
};

struct CsvReadResult {
    std::vector<OptionQuote> quotes;
    std::vector<RowIssue> issues;  // malformed rows that were skipped
};

// Parses a dataset file. Malformed rows are skipped and reported; if more
// than 1% of data rows are malformed the whole read fails with a DataError
// that quotes the first offending lines.
CsvReadResult read_csv_report(const std::filesystem::path& path);
std::vector<OptionQuote> read_csv(const std::filesystem::path& path);

void write_csv(std::span<const OptionQuote> quotes, const std::filesystem::path& path);
std::string to_csv(std::span<const OptionQuote> quotes);

// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);
std::string bytes_digest(std::string_view bytes);

// ---------------------------------------------------------------------------
// Model files
//
// Layout (little endian):
//   8-byte magic tag  "OBTREES1" or "OBDENSE1"
//   u32 format version
//   u64 manifest length, manifest JSON bytes (hyperparameters + caller metadata)
//   payload, whose counts must account for every remaining byte
// ---------------------------------------------------------------------------

enum class ModelKind { TreeEnsemble, Network };

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Reads just the magic tag; throws IncompatibleModelError if unrecognized.
ModelKind peek_model_kind(const std::filesystem::path& path);

void save_model(const gbdt::TreeEnsemble& model, const std::filesystem::path& path,
                const nlohmann::json& metadata = nlohmann::json::object());
void save_model(const mlp::Network& model, const std::filesystem::path& path,
                const nlohmann::json& metadata = nlohmann::json::object());

gbdt::TreeEnsemble load_tree_ensemble(const std::filesystem::path& path, nlohmann::json* manifest = nullptr);
mlp::Network load_network(const std::filesystem::path& path, nlohmann::json* manifest = nullptr);

// The manifest embedded in any model file.
nlohmann::json read_model_manifest(const std::filesystem::path& path);

nlohmann::json to_json(const gbdt::GbdtConfig& cfg);
nlohmann::json to_json(const mlp::Architecture& arch);
nlohmann::json to_json(const mlp::MlpTrainConfig& cfg);

// Writes text to path, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace optbench::io
