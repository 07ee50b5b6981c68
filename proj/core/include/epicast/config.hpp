#pragma once

#include "epicast/additive.hpp"
#include "epicast/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace epicast {

/// Minimal TOML-style document: `key = value` lines, `# comments`, `[section]`
/// headers (keys become `section.key`), values are quoted strings, integers,
/// floats, booleans or flat arrays of those.
class ConfigDocument {
public:
    using Scalar = std::variant<std::string, long long, double, bool>;
    using Value = std::variant<Scalar, std::vector<Scalar>>;

    static ConfigDocument parse(std::string_view text);

    bool has(const std::string &key) const { return values_.count(key) > 0; }
    std::vector<std::string> keys() const;

    std::string get_string(const std::string &key, const std::string &fallback) const;
    long long get_int(const std::string &key, long long fallback) const;
    double get_double(const std::string &key, double fallback) const;
    bool get_bool(const std::string &key, bool fallback) const;
    std::vector<std::string> get_strings(const std::string &key, const std::vector<std::string> &fallback) const;

private:
    std::map<std::string, Value> values_;
};

enum class ModelKind { arima, ets, additive, average };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct RunConfig {
    std::filesystem::path cases;
    std::filesystem::path deaths;
    std::filesystem::path weather;
    std::filesystem::path name_map;
    std::vector<std::string> regions; // display names; empty selects every region
    std::vector<Measure> measures{Measure::confirmed};
    std::vector<ModelKind> models{ModelKind::arima, ModelKind::ets, ModelKind::average};
    std::size_t holdout_days = 10;
    std::size_t horizon = 14;
    int seasonal_period = 7;
    std::uint64_t seed = 42;
    std::filesystem::path output = "out";
    unsigned jobs = 1;
    bool lenient = false;
    bool arima_seasonal = true;
    SeriesKind model_series = SeriesKind::cumulative;
    additive::Config additive{};
    bool write_plots = true;

    // Classifier settings.
    int n_trees = 100;
    int max_depth = 8;
    int mtry = 2;
    int min_leaf = 5;
    double train_fraction = 0.7;

    /// Throws ConfigError.
    void validate() const;
};

/// Reads a config file; relative paths inside it resolve against its directory.
RunConfig load_run_config(const std::filesystem::path &path);
RunConfig run_config_from(const ConfigDocument &doc, const std::filesystem::path &base_dir);

} // namespace epicast
