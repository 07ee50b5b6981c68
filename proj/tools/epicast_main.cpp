#include "epicast/csv.hpp"
#include "epicast/errors.hpp"
#include "epicast/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

using namespace epicast;

enum Exit : int { ok = 0, config_error = 1, data_error = 2, numerical_failure = 3 };

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    bool verbose = false;
};

void apply_globals(RunConfig &config, const Globals &g) {
    if (g.seed) {
        config.seed = *g.seed;
    }
    if (g.jobs) {
        config.jobs = *g.jobs;
    }
}

void print_warnings(const std::vector<std::string> &warnings) {
    for (const auto &w : warnings) {
        std::cerr << "warning: " << w << "\n";
    }
}

int cmd_ingest(const std::filesystem::path &cases, const std::filesystem::path &deaths,
               const std::filesystem::path &weather, const std::filesystem::path &name_map,
               const std::filesystem::path &out, bool lenient, const Globals &g) {
    if (weather.empty() != name_map.empty()) {
        throw ConfigError("--weather and --name-map must be given together");
    }
    std::vector<RegionSeries> all;
    std::size_t repairs = 0;
    for (const auto &[path, measure] : {std::pair{cases, Measure::confirmed}, std::pair{deaths, Measure::deaths}}) {
        auto parsed = parse_wide_csv(read_file(path), measure, ParseOptions{lenient});
        for (const auto &issue : parsed.skipped) {
            std::cerr << "warning: " << path.string() << ":" << issue.row << ": " << issue.message << "\n";
        }
        for (auto &s : parsed.series) {
            auto repaired = repair_cumulative(s);
            repairs += repaired.changes;
            all.push_back(std::move(repaired.value));
        }
    }
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
        throw IoError("cannot create " + out.string() + ": " + ec.message());
    }

    std::string tidy = "region,measure,date,cumulative,daily\n";
    for (const auto &s : all) {
        const RegionSeries daily = to_daily(s);
        for (std::size_t i = 0; i < s.size(); ++i) {
            tidy += csv::join_row({s.key.display_name(), std::string(to_string(s.measure)), to_iso(s.date_at(i)),
                                   csv::format_number(s.values[i]), csv::format_number(daily.values[i])});
            tidy += "\n";
        }
    }
    write_file(out / "series.csv", tidy);

    if (!weather.empty()) {
        const auto records = parse_weather_csv(read_file(weather));
        const auto map = NameMap::parse(read_file(name_map));
        std::string joined = "region,date,day_index,temperature,latitude,new_cases\n";
        std::size_t dropped = 0;
        for (const auto &s : all) {
            if (s.measure != Measure::confirmed || !map.contains(s.key)) {
                continue;
            }
            if (!s.key.latitude) {
                std::cerr << "warning: '" << s.key.display_name() << "' has no latitude; not joined\n";
                continue;
            }
            const auto join = join_weather(to_daily(s), records, map);
            dropped += join.dropped;
            for (const auto &r : join.rows) {
                joined += csv::join_row({s.key.display_name(), to_iso(r.date), std::to_string(r.day_index),
                                         csv::format_number(r.temperature), csv::format_number(r.latitude),
                                         csv::format_number(r.new_cases)});
                joined += "\n";
            }
        }
        write_file(out / "joined.csv", joined);
        if (g.verbose) {
            std::cerr << "joined weather; " << dropped << " case dates had no weather record\n";
        }
    }
    if (g.verbose) {
        std::cerr << all.size() << " series, " << repairs << " cumulative values repaired\n";
    }
    std::cout << "wrote " << (out / "series.csv").string() << "\n";
    return Exit::ok;
}

int cmd_forecast(const std::filesystem::path &config_path, const Globals &g) {
    RunConfig config = load_run_config(config_path);
    apply_globals(config, g);
    const RunReport report = run(config);
    print_warnings(report.warnings);
    std::size_t failed = 0;
    for (const auto &row : report.rows) {
        if (!row.ok) {
            ++failed;
            std::cerr << "error: " << row.region << " " << to_string(row.measure) << " " << to_string(row.model)
                      << ": " << row.error << "\n";
        } else if (g.verbose) {
            std::cerr << row.region << " " << to_string(row.measure) << " " << to_string(row.model) << " -> "
                      << row.selected << " (" << csv::format_number(row.wall_ms) << " ms)\n";
        }
    }
    std::cout << report.to_csv();
    std::cout << "wrote " << (config.output / "report.csv").string() << " (" << report.rows.size() << " rows, "
              << failed << " failed)\n";
    return report.all_failed() ? Exit::numerical_failure : Exit::ok;
}

int cmd_classify(const std::filesystem::path &config_path, const Globals &g) {
    RunConfig config = load_run_config(config_path);
    apply_globals(config, g);
    const ClassifyReport report = run_classification(config);
    print_warnings(report.warnings);
    if (g.verbose) {
        std::cerr << report.n_rows << " labeled rows from " << report.regions.size() << " regions, positive rate "
                  << csv::format_number(report.positive_rate) << "\n";
    }
    std::cout << report.to_csv();
    return Exit::ok;
}

int cmd_reproduce(const std::string &which, const std::filesystem::path &archive, const Globals &g) {
    const Comparison cmp =
        reproduce(parse_paper_case(which), archive, g.jobs.value_or(1), g.seed.value_or(42));
    std::cout << cmp.to_text();
    return Exit::ok;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"epicast: epidemic case forecasting and weather classification"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Override the global random seed");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--verbose,-v", g.verbose, "Print progress and per-row details to stderr");

    std::filesystem::path cases, deaths, weather, name_map, out, config_path, archive = "data/archive";
    bool lenient = false;
    std::string which;

    auto *ingest = app.add_subcommand("ingest", "Parse wide time-series files into a tidy table");
    ingest->add_option("--cases", cases, "Cumulative confirmed cases (wide CSV)")->required()->check(CLI::ExistingFile);
    ingest->add_option("--deaths", deaths, "Cumulative deaths (wide CSV)")->required()->check(CLI::ExistingFile);
    ingest->add_option("--weather", weather, "Weather table region,date,temp_avg_c")->check(CLI::ExistingFile);
    ingest->add_option("--name-map", name_map, "case_region,weather_region mapping")->check(CLI::ExistingFile);
    ingest->add_option("--out", out, "Output directory")->required();
    ingest->add_flag("--lenient", lenient, "Skip malformed rows instead of failing");

    auto *forecast = app.add_subcommand("forecast", "Fit forecasters and score them on the holdout");
    forecast->add_option("--config", config_path, "Run configuration file")->required();

    auto *classify = app.add_subcommand("classify", "Train weather classifiers and report AUC");
    classify->add_option("--config", config_path, "Run configuration file")->required();

    auto *repro = app.add_subcommand("reproduce", "Compare against the published 2020 numbers");
    repro->add_option("--case", which, "table2, table3-prophet or table3-auc")
        ->required()
        ->check(CLI::IsMember({"table2", "table3-prophet", "table3-auc"}));
    repro->add_option("--archive", archive, "Directory holding the archived series");

    for (auto *sub : {ingest, forecast, classify, repro}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::config_error;
    }

    try {
        if (ingest->parsed()) {
            return cmd_ingest(cases, deaths, weather, name_map, out, lenient, g);
        }
        if (forecast->parsed()) {
            return cmd_forecast(config_path, g);
        }
        if (classify->parsed()) {
            return cmd_classify(config_path, g);
        }
        return cmd_reproduce(which, archive, g);
    } catch (const ConfigError &e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return Exit::config_error;
    } catch (const NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return Exit::numerical_failure;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return Exit::data_error;
    }
}
