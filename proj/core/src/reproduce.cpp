#include "epicast/runner.hpp"

#include "epicast/additive.hpp"
#include "epicast/arima.hpp"
#include "epicast/csv.hpp"
#include "epicast/errors.hpp"
#include "epicast/ets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

namespace epicast {

namespace {

constexpr auto kWindowStart = std::chrono::year{2020} / std::chrono::January / 22;
constexpr auto kTrainEnd = std::chrono::year{2020} / std::chrono::April / 23;
constexpr auto kWindowEnd = std::chrono::year{2020} / std::chrono::May / 4;

struct Published {
    double rmse;
    double me;
    double mae;
};

// Cuts a series to [from, to]; records a warning when the data does not cover the window.
std::optional<RegionSeries> window(const RegionSeries &s, Date from, Date to, std::vector<std::string> &warnings) {
    if (s.values.empty() || s.end_date() < from || s.start > to) {
        warnings.push_back("'" + s.key.display_name() + "' has no data in " + to_iso(from) + ".." + to_iso(to));
        return std::nullopt;
    }
    if (s.start > from || s.end_date() < to) {
        warnings.push_back("'" + s.key.display_name() + "' covers only " + to_iso(std::max(s.start, from)) + ".." +
                           to_iso(std::min(s.end_date(), to)) + " of the window " + to_iso(from) + ".." + to_iso(to));
    }
    const Date lo = std::max(s.start, from);
    const Date hi = std::min(s.end_date(), to);
    RegionSeries out = s;
    const auto begin = static_cast<std::size_t>((lo - s.start).count());
    const auto end = static_cast<std::size_t>((hi - s.start).count()) + 1;
    out.start = lo;
    out.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(begin),
                      s.values.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

void add_metric_rows(Comparison &cmp, const std::string &label, const std::string &region,
                     const std::optional<EvalReport> &ours, const std::optional<Published> &published,
                     const std::string &detail) {
    const auto pick = [](const auto &v, auto member) -> std::optional<double> {
        if (!v) {
            return std::nullopt;
        }
        return (*v).*member;
    };
    cmp.rows.push_back({label, region, "rmse", pick(ours, &EvalReport::rmse), pick(published, &Published::rmse), detail});
    cmp.rows.push_back({label, region, "me", pick(ours, &EvalReport::me), pick(published, &Published::me), ""});
    cmp.rows.push_back({label, region, "mae", pick(ours, &EvalReport::mae), pick(published, &Published::mae), ""});
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<RegionSeries> confirmed_only(const std::vector<RegionSeries> &series) {
    std::vector<RegionSeries> out;
    std::copy_if(series.begin(), series.end(), std::back_inserter(out),
                 [](const RegionSeries &s) { return s.measure == Measure::confirmed; });
    return out;
}

std::vector<RegionSeries> load_confirmed(const std::filesystem::path &path) {
    auto parsed = parse_wide_csv(read_file(path), Measure::confirmed, ParseOptions{true});
    std::vector<RegionSeries> out;
    for (auto &s : parsed.series) {
        const auto name = s.key.normalized();
        if (name == csv::to_lower(kLosAngeles) || name == csv::to_lower(kNewYork)) {
            out.push_back(repair_cumulative(s).value);
        }
    }
    return out;
}

} // namespace

PaperCase parse_paper_case(std::string_view text) {
    const std::string t = csv::to_lower(csv::trim(text));
    if (t == "table2") {
        return PaperCase::table2;
    }
    if (t == "table3-prophet" || t == "table3_prophet") {
        return PaperCase::table3_prophet;
    }
    if (t == "table3-auc" || t == "table3_auc") {
        return PaperCase::table3_auc;
    }
    throw ConfigError("unknown case '" + std::string(text) + "' (expected table2, table3-prophet or table3-auc)");
}

std::optional<double> ComparisonRow::relative_deviation() const {
    if (!ours || !published || *published == 0.0) {
        return std::nullopt;
    }
    return (*ours - *published) / std::abs(*published);
}

std::string Comparison::to_text() const {
    std::string out;
    char line[512];
    std::snprintf(line, sizeof line, "%-34s %-30s %-6s %12s %12s %9s  %s\n", "model", "region", "metric", "ours",
                  "published", "rel.dev", "detail");
    out += line;
    for (const auto &r : rows) {
        const int digits = r.metric == "auc" ? 4 : 1;
        const std::string ours = r.ours ? fixed(*r.ours, digits) : "-";
        const std::string pub = r.published ? fixed(*r.published, digits) : "-";
        const auto dev = r.relative_deviation();
        const std::string rel = dev ? fixed(100.0 * *dev, 1) + "%" : "-";
        std::snprintf(line, sizeof line, "%-34s %-30s %-6s %12s %12s %9s  %s\n", r.label.c_str(), r.region.c_str(),
                      r.metric.c_str(), ours.c_str(), pub.c_str(), rel.c_str(), r.detail.c_str());
        out += line;
    }
    for (const auto &w : warnings) {
        out += "warning: " + w + "\n";
    }
    return out;
}

ArchiveFiles ArchiveFiles::in(const std::filesystem::path &dir) {
    return {dir / "time_series_covid19_confirmed_US.csv", dir / "time_series_covid19_deaths_US.csv",
            dir / "weather.csv", dir / "name_map.csv"};
}

Comparison reproduce_table2(const std::vector<RegionSeries> &confirmed) {
    Comparison cmp;
    cmp.which = PaperCase::table2;
    const Date from{kWindowStart};
    const Date train_end{kTrainEnd};
    const Date to{kWindowEnd};
    const Date first = add_days(train_end, 1);

    for (const char *name : {kNewYork, kLosAngeles}) {
        const RegionSeries *s = find_region(confirmed, name);
        const std::vector<std::string> labels{"ARIMA Seasonal", "ARIMA Non-Seasonal", "ETS Seasonal",
                                              "ETS Non-Seasonal", "Average Seasonal ETS and ARIMA"};
        const std::vector<Published> published{
            {469.1, -428.2, 428.2}, {469.1, -428.2, 428.2}, {472.4, -431.7, 431.7}, {472.4, -431.7, 431.7},
            {470.8, -429.2, 429.2}};
        const auto fail_all = [&](const std::string &why) {
            for (std::size_t i = 0; i < labels.size(); ++i) {
                add_metric_rows(cmp, labels[i], name, std::nullopt, published[i], why);
            }
        };
        if (s == nullptr) {
            fail_all("region not present in the archive");
            continue;
        }
        const auto cut = window(*s, from, to, cmp.warnings);
        if (!cut || cut->end_date() <= train_end || cut->start > train_end) {
            fail_all("archive does not span the train/score split");
            continue;
        }
        const std::size_t holdout = static_cast<std::size_t>((cut->end_date() - train_end).count());
        const auto [train, test] = split_train_test(*cut, holdout);
        const double mean_actual =
            std::accumulate(test.values.begin(), test.values.end(), 0.0) / static_cast<double>(test.size());
        const std::string level = "mean actual " + fixed(mean_actual, 1);

        std::vector<std::optional<ForecastResult>> fc(labels.size());
        std::vector<std::string> detail(labels.size());
        const auto attempt = [&](std::size_t i, const std::function<std::pair<ForecastResult, std::string>()> &body) {
            try {
                auto [f, sel] = body();
                fc[i] = std::move(f);
                detail[i] = sel + "; " + level;
            } catch (const std::exception &err) {
                detail[i] = std::string("failed: ") + err.what();
            }
        };
        const auto arima_with = [&](bool seasonal) {
            arima::AutoOptions options;
            options.seasonal = seasonal;
            const auto fit = arima::auto_fit(train.values, options);
            return std::pair{arima::forecast(fit.best, train.values, holdout, first),
                             "ARIMA" + fit.best.order.to_string()};
        };
        const auto ets_with = [&](bool seasonal) {
            const std::vector<ets::Spec> specs =
                seasonal ? std::vector<ets::Spec>{{ets::Trend::none, ets::Season::additive, 7, false},
                                                  {ets::Trend::additive, ets::Season::additive, 7, false}}
                         : std::vector<ets::Spec>{{ets::Trend::none, ets::Season::none, 7, false},
                                                  {ets::Trend::additive, ets::Season::none, 7, false},
                                                  {ets::Trend::additive, ets::Season::none, 7, true}};
            std::optional<ets::Fit> best;
            for (const auto &spec : specs) {
                try {
                    auto f = ets::fit(train.values, spec);
                    if (f.converged && (!best || f.aic < best->aic)) {
                        best = std::move(f);
                    }
                } catch (const NumericalError &) {
                }
            }
            if (!best) {
                throw NumericalError("no ETS candidate converged");
            }
            return std::pair{ets::forecast(*best, holdout, first), best->spec.to_string()};
        };
        attempt(0, [&] { return arima_with(true); });
        attempt(1, [&] { return arima_with(false); });
        attempt(2, [&] { return ets_with(true); });
        attempt(3, [&] { return ets_with(false); });
        if (fc[0] && fc[2]) {
            attempt(4, [&] { return std::pair{average_forecasts(*fc[0], *fc[2]), std::string("average")}; });
        } else {
            detail[4] = "failed: a seasonal component failed";
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            std::optional<EvalReport> eval;
            if (fc[i]) {
                eval = evaluate(test.values, fc[i]->point);
            }
            add_metric_rows(cmp, labels[i], name, eval, published[i], detail[i]);
        }
    }
    return cmp;
}

Comparison reproduce_table3_prophet(const std::vector<RegionSeries> &confirmed) {
    Comparison cmp;
    cmp.which = PaperCase::table3_prophet;
    const std::vector<std::pair<const char *, Published>> cities{{kLosAngeles, {254.9, 181.6, 181.6}},
                                                                 {kNewYork, {467.5, 335.6, 335.6}}};
    for (const auto &[name, published] : cities) {
        const RegionSeries *s = find_region(confirmed, name);
        if (s == nullptr) {
            add_metric_rows(cmp, "Additive (rolling origin)", name, std::nullopt, published,
                            "region not present in the archive");
            continue;
        }
        const auto cut = window(*s, Date{kWindowStart}, Date{kWindowEnd}, cmp.warnings);
        if (!cut) {
            add_metric_rows(cmp, "Additive (rolling origin)", name, std::nullopt, published, "no data in window");
            continue;
        }
        try {
            const auto dates = cut->dates();
            const auto cv = additive::cross_validate(dates, cut->values, additive::Config{}, 10, 3);
            std::string folds = "folds rmse";
            for (const auto &f : cv.folds) {
                folds += " " + fixed(f.rmse, 1);
            }
            add_metric_rows(cmp, "Additive (rolling origin)", name, cv.mean, published, folds);
        } catch (const std::exception &err) {
            add_metric_rows(cmp, "Additive (rolling origin)", name, std::nullopt, published,
                            std::string("failed: ") + err.what());
        }
    }
    return cmp;
}

Comparison reproduce_table3_auc(const std::vector<RegionSeries> &confirmed, const std::vector<WeatherRecord> &weather,
                                const NameMap &name_map, std::uint64_t seed, unsigned jobs) {
    Comparison cmp;
    cmp.which = PaperCase::table3_auc;
    RunConfig config;
    config.regions = {kLosAngeles, kNewYork};
    config.seed = seed;
    config.jobs = jobs;
    std::vector<RegionSeries> cut;
    for (const auto &s : confirmed_only(confirmed)) {
        if (auto w = window(s, Date{kWindowStart}, Date{kWindowEnd}, cmp.warnings)) {
            cut.push_back(std::move(*w));
        }
    }
    const ClassifyReport report = classify_regions(cut, weather, name_map, config);
    for (const auto &w : report.warnings) {
        cmp.warnings.push_back(w);
    }
    const std::string info = "n_test " + std::to_string(report.rows.empty() ? 0 : report.rows.front().n_test) +
                             ", positive rate " + fixed(report.positive_rate, 3);
    for (const auto &row : report.rows) {
        std::optional<double> published;
        std::string detail;
        if (row.model == "logistic") {
            published = 0.9160;
            detail = "published range 0.9160-0.9597; " + info;
        } else if (row.model == "random_forest") {
            published = 0.9416;
            detail = "published range 0.9416-0.9658; " + info;
        }
        cmp.rows.push_back({row.model, "LA+NY", "auc", row.auc, published, detail});
    }
    return cmp;
}

Comparison reproduce(PaperCase which, const std::filesystem::path &archive_dir, unsigned jobs, std::uint64_t seed) {
    const ArchiveFiles files = ArchiveFiles::in(archive_dir);
    std::vector<std::filesystem::path> needed{files.confirmed};
    if (which == PaperCase::table3_auc) {
        needed.push_back(files.weather);
        needed.push_back(files.name_map);
    }
    std::string missing;
    for (const auto &p : needed) {
        if (!std::filesystem::exists(p)) {
            missing += "\n  " + p.string();
        }
    }
    if (!missing.empty()) {
        throw IoError(
            "archived data not found:" + missing +
            "\nFetch the CSSE US time series (e.g. from the CSSEGISandData/COVID-19 repository, "
            "csse_covid_19_data/csse_covid_19_time_series/) into " +
            archive_dir.string() +
            ". weather.csv (region,date,temp_avg_c) and name_map.csv (case_region,weather_region) must be "
            "supplied separately for the AUC case.");
    }
    const auto confirmed = load_confirmed(files.confirmed);
    switch (which) {
    case PaperCase::table2:
        return reproduce_table2(confirmed);
    case PaperCase::table3_prophet:
        return reproduce_table3_prophet(confirmed);
    case PaperCase::table3_auc:
        return reproduce_table3_auc(confirmed, parse_weather_csv(read_file(files.weather)),
                                    NameMap::parse(read_file(files.name_map)), seed, jobs);
    }
    throw ConfigError("unknown reproduction case");
}

} // namespace epicast
