#include "epicast/config.hpp"

#include "epicast/csv.hpp"
#include "epicast/errors.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace epicast {

namespace {

std::string strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) {
            in_string = !in_string;
        } else if (c == '#' && !in_string) {
            return std::string(line.substr(0, i));
        }
    }
    return std::string(line);
}

ConfigDocument::Scalar parse_scalar(std::string_view text, std::size_t line_no) {
    const std::string t = csv::trim(text);
    const auto fail = [&] {
        throw ConfigError("config line " + std::to_string(line_no) + ": cannot parse value '" + t + "'");
    };
    if (t.empty()) {
        fail();
    }
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"') {
            fail();
        }
        std::string out;
        for (std::size_t i = 1; i + 1 < t.size(); ++i) {
            if (t[i] == '\\' && i + 2 < t.size()) {
                const char n = t[++i];
                out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
            } else {
                out.push_back(t[i]);
            }
        }
        return out;
    }
    if (t == "true") {
        return true;
    }
    if (t == "false") {
        return false;
    }
    std::string digits;
    for (char c : t) {
        if (c != '_') {
            digits.push_back(c);
        }
    }
    const char *begin = digits.data();
    const char *end = digits.data() + digits.size();
    if (*begin == '+') {
        ++begin;
    }
    long long i = 0;
    if (auto res = std::from_chars(begin, end, i); res.ec == std::errc{} && res.ptr == end) {
        return i;
    }
    double d = 0.0;
    if (auto res = std::from_chars(begin, end, d); res.ec == std::errc{} && res.ptr == end) {
        return d;
    }
    fail();
    return {};
}

std::vector<std::string> split_array(std::string_view body, std::size_t line_no) {
    std::vector<std::string> items;
    std::string current;
    bool in_string = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '"' && (i == 0 || body[i - 1] != '\\')) {
            in_string = !in_string;
        }
        if (c == ',' && !in_string) {
            items.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (in_string) {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated string in array");
    }
    if (!csv::trim(current).empty()) {
        items.push_back(current);
    }
    return items;
}

std::string scalar_name(const ConfigDocument::Scalar &s) {
    switch (s.index()) {
    case 0:
        return "string";
    case 1:
        return "integer";
    case 2:
        return "float";
    default:
        return "boolean";
    }
}

} // namespace

ConfigDocument ConfigDocument::parse(std::string_view text) {
    ConfigDocument doc;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = csv::trim(strip_comment(raw));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
            }
            section = csv::trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = csv::trim(std::string_view(line).substr(0, eq));
        const std::string value = csv::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (doc.values_.count(full) > 0) {
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
        }
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) + ": arrays must close on the same line");
            }
            std::vector<Scalar> items;
            for (const auto &item : split_array(std::string_view(value).substr(1, value.size() - 2), line_no)) {
                items.push_back(parse_scalar(item, line_no));
            }
            doc.values_[full] = std::move(items);
        } else {
            doc.values_[full] = parse_scalar(value, line_no);
        }
    }
    return doc;
}

std::vector<std::string> ConfigDocument::keys() const {
    std::vector<std::string> out;
    for (const auto &[k, v] : values_) {
        out.push_back(k);
    }
    return out;
}

std::string ConfigDocument::get_string(const std::string &key, const std::string &fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const auto *scalar = std::get_if<Scalar>(&it->second);
    const auto *s = scalar ? std::get_if<std::string>(scalar) : nullptr;
    if (s == nullptr) {
        throw ConfigError("config key '" + key + "' must be a string");
    }
    return *s;
}

long long ConfigDocument::get_int(const std::string &key, long long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const auto *scalar = std::get_if<Scalar>(&it->second);
    const auto *v = scalar ? std::get_if<long long>(scalar) : nullptr;
    if (v == nullptr) {
        throw ConfigError("config key '" + key + "' must be an integer" +
                          (scalar ? " (found " + scalar_name(*scalar) + ")" : std::string{}));
    }
    return *v;
}

double ConfigDocument::get_double(const std::string &key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const auto *scalar = std::get_if<Scalar>(&it->second);
    if (scalar != nullptr) {
        if (const auto *d = std::get_if<double>(scalar)) {
            return *d;
        }
        if (const auto *i = std::get_if<long long>(scalar)) {
            return static_cast<double>(*i);
        }
    }
    throw ConfigError("config key '" + key + "' must be a number");
}

bool ConfigDocument::get_bool(const std::string &key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const auto *scalar = std::get_if<Scalar>(&it->second);
    const auto *b = scalar ? std::get_if<bool>(scalar) : nullptr;
    if (b == nullptr) {
        throw ConfigError("config key '" + key + "' must be true or false");
    }
    return *b;
}

std::vector<std::string> ConfigDocument::get_strings(const std::string &key,
                                                     const std::vector<std::string> &fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const auto *items = std::get_if<std::vector<Scalar>>(&it->second);
    if (items == nullptr) {
        // A single string is accepted as a one-element list.
        return {get_string(key, "")};
    }
    std::vector<std::string> out;
    for (const auto &item : *items) {
        const auto *s = std::get_if<std::string>(&item);
        if (s == nullptr) {
            throw ConfigError("config key '" + key + "' must be a list of strings");
        }
        out.push_back(*s);
    }
    return out;
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::arima:
        return "arima";
    case ModelKind::ets:
        return "ets";
    case ModelKind::additive:
        return "additive";
    case ModelKind::average:
        return "average";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
    const std::string name = csv::to_lower(csv::trim(text));
    if (name == "arima") {
        return ModelKind::arima;
    }
    if (name == "ets") {
        return ModelKind::ets;
    }
    if (name == "additive" || name == "prophet") {
        return ModelKind::additive;
    }
    if (name == "average") {
        return ModelKind::average;
    }
    throw ConfigError("unknown model '" + std::string(text) + "' (expected arima, ets, additive or average)");
}

void RunConfig::validate() const {
    if (models.empty()) {
        throw ConfigError("at least one model must be requested");
    }
    if (measures.empty()) {
        throw ConfigError("at least one measure must be requested");
    }
    if (horizon < 1) {
        throw ConfigError("horizon must be >= 1");
    }
    if (seasonal_period < 2) {
        throw ConfigError("seasonal_period must be >= 2");
    }
    if (jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (n_trees < 1 || max_depth < 0 || mtry < 1 || min_leaf < 1) {
        throw ConfigError("forest settings must be positive (max_depth may be 0)");
    }
    try {
        additive.validate();
    } catch (const ContractError &err) {
        throw ConfigError(std::string("additive settings: ") + err.what());
    }
}

RunConfig run_config_from(const ConfigDocument &doc, const std::filesystem::path &base_dir) {
    static const std::set<std::string> known{
        "cases", "deaths", "weather", "name_map", "regions", "measures", "models", "holdout_days", "horizon",
        "seasonal_period", "seed", "output", "jobs", "lenient", "series", "plots",
        "arima.seasonal",
        "additive.n_changepoints", "additive.changepoint_range", "additive.weekly_order", "additive.yearly_order",
        "additive.trend_ridge", "additive.season_ridge",
        "classifier.n_trees", "classifier.max_depth", "classifier.mtry", "classifier.min_leaf",
        "classifier.train_fraction"};
    for (const auto &key : doc.keys()) {
        if (known.count(key) == 0) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    const auto resolve = [&](const std::string &key) -> std::filesystem::path {
        const std::string value = doc.get_string(key, "");
        if (value.empty()) {
            return {};
        }
        const std::filesystem::path p(value);
        return p.is_absolute() ? p : base_dir / p;
    };
    const auto non_negative = [&](const std::string &key, long long fallback) {
        const long long v = doc.get_int(key, fallback);
        if (v < 0) {
            throw ConfigError("config key '" + key + "' must be >= 0");
        }
        return v;
    };

    RunConfig c;
    c.cases = resolve("cases");
    c.deaths = resolve("deaths");
    c.weather = resolve("weather");
    c.name_map = resolve("name_map");
    c.regions = doc.get_strings("regions", {});

    std::vector<std::string> default_measures{"confirmed"};
    if (!c.deaths.empty()) {
        default_measures.push_back("deaths");
    }
    c.measures.clear();
    for (const auto &m : doc.get_strings("measures", default_measures)) {
        try {
            c.measures.push_back(parse_measure(m));
        } catch (const ContractError &err) {
            throw ConfigError(err.what());
        }
    }
    c.models.clear();
    for (const auto &m : doc.get_strings("models", {"arima", "ets", "average"})) {
        c.models.push_back(parse_model_kind(m));
    }
    c.holdout_days = static_cast<std::size_t>(non_negative("holdout_days", 10));
    c.horizon = static_cast<std::size_t>(non_negative("horizon", 14));
    c.seasonal_period = static_cast<int>(doc.get_int("seasonal_period", 7));
    c.seed = static_cast<std::uint64_t>(non_negative("seed", 42));
    c.jobs = static_cast<unsigned>(non_negative("jobs", 1));
    c.lenient = doc.get_bool("lenient", false);
    c.write_plots = doc.get_bool("plots", true);
    const std::string out = doc.get_string("output", "out");
    c.output = std::filesystem::path(out).is_absolute() ? std::filesystem::path(out) : base_dir / out;

    const std::string series = csv::to_lower(doc.get_string("series", "cumulative"));
    if (series == "cumulative") {
        c.model_series = SeriesKind::cumulative;
    } else if (series == "daily") {
        c.model_series = SeriesKind::daily;
    } else {
        throw ConfigError("series must be 'cumulative' or 'daily'");
    }
    c.arima_seasonal = doc.get_bool("arima.seasonal", true);

    c.additive.n_changepoints = static_cast<int>(non_negative("additive.n_changepoints", 25));
    c.additive.changepoint_range = doc.get_double("additive.changepoint_range", 0.8);
    c.additive.weekly_order = static_cast<int>(non_negative("additive.weekly_order", 3));
    c.additive.yearly_order = static_cast<int>(non_negative("additive.yearly_order", 10));
    c.additive.trend_ridge = doc.get_double("additive.trend_ridge", 20.0);
    c.additive.season_ridge = doc.get_double("additive.season_ridge", 0.1);

    c.n_trees = static_cast<int>(doc.get_int("classifier.n_trees", 100));
    c.max_depth = static_cast<int>(doc.get_int("classifier.max_depth", 8));
    c.mtry = static_cast<int>(doc.get_int("classifier.mtry", 2));
    c.min_leaf = static_cast<int>(doc.get_int("classifier.min_leaf", 5));
    c.train_fraction = doc.get_double("classifier.train_fraction", 0.7);

    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return run_config_from(ConfigDocument::parse(buf.str()), path.parent_path());
}

} // namespace epicast
