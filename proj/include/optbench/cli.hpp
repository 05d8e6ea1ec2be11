#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "optbench/core.hpp"
#include "optbench/gbdt.hpp"
#include "optbench/mlp.hpp"
#include "optbench/simgen.hpp"

namespace optbench::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2, kTrainingError = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Everything a command needs. Built from defaults, then a config file, then
// --set/--seed/--out/--data flags, in that order.
struct RunConfig {
    sim::SimConfig sim{};
    SplitSpec split{};
    gbdt::GbdtConfig gbdt{};
    mlp::MlpTrainConfig mlp{};
    std::uint64_t seed = 42;
    std::filesystem::path out_dir = "out";
    std::optional<std::filesystem::path> data_path;
    std::size_t curve_bins = 20;
    std::size_t hist_bins = 50;

    // Throws UsageError for unknown keys or unparseable values.
    void set(const std::string& key, const std::string& value);
    std::map<std::string, std::string> to_map() const;
    static const std::vector<std::string>& keys();

    std::filesystem::path dataset_path() const;
    // Copies of the module configs with the global seed applied.
    sim::SimConfig sim_config() const;
    SplitSpec split_spec() const;
    gbdt::GbdtConfig gbdt_config(std::size_t max_depth) const;
    mlp::MlpTrainConfig mlp_config() const;
};

// Flat "key = value" text; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

enum class ModelPreset { Gbdt5, Gbdt10, Mlp3, Mlp5 };

std::optional<ModelPreset> parse_preset(std::string_view name);
std::string to_string(ModelPreset preset);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace optbench::cli
