// Property-based acceptance suite. One PASS/FAIL line per criterion; the exit
// status is non-zero when any criterion fails.

#include "epicast/additive.hpp"
#include "epicast/arima.hpp"
#include "epicast/classifier.hpp"
#include "epicast/ets.hpp"
#include "epicast/runner.hpp"
#include "epicast/series.hpp"

#include "synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace epicast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    double budget_s; // <= 0 means no runtime bound
    std::function<Outcome()> check;
};

std::string fmt(const char *format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::vector<double> random_vector(Rng &rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (auto &x : v) {
        x = scale * rng.normal();
    }
    return v;
}

Outcome metrics_oracle() {
    Rng rng(1001);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.index(8);
        const auto a = random_vector(rng, n, 10);
        const auto p = random_vector(rng, n, 10);
        long double se = 0, e = 0, ae = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const long double d = static_cast<long double>(a[i]) - p[i];
            se += d * d;
            e += d;
            ae += d < 0 ? -d : d;
        }
        const double m = static_cast<double>(n);
        worst = std::max({worst, std::abs(rmse(a, p) - static_cast<double>(std::sqrt(se / m))),
                          std::abs(me(a, p) - static_cast<double>(e / m)),
                          std::abs(mae(a, p) - static_cast<double>(ae / m))});
    }
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(50);
        const auto a = random_vector(rng, n, 1 + 100 * rng.uniform());
        const auto p = random_vector(rng, n, 1 + 100 * rng.uniform());
        const auto r = evaluate(a, p);
        const double slack = 1e-12 * std::max(1.0, r.rmse);
        violations += !(r.mae <= r.rmse + slack) + !(std::abs(r.me) <= r.mae + slack);
    }
    return {worst <= 1e-12 && violations == 0,
            fmt("max deviation from hand computation %.2e, inequality violations %d/2000", worst, violations)};
}

Outcome differencing_round_trip() {
    Rng rng(1002);
    double worst = 0;
    int cases = 0;
    for (int d = 0; d <= 2; ++d) {
        for (int sd = 0; sd <= 2; ++sd) {
            for (int s : {1, 7, 12}) {
                for (int trial = 0; trial < 100; ++trial) {
                    const std::size_t lost = static_cast<std::size_t>(d + sd * s);
                    const std::size_t n = lost + 5 + rng.index(60);
                    const auto y = random_vector(rng, n, 50);
                    const auto diffs = difference(y, d, sd, s);
                    const auto back = integrate(diffs, std::span(y).first(lost), d, sd, s);
                    // Normwise: element-wise ratios are meaningless for entries near zero.
                    double err = 0, scale = 0;
                    for (std::size_t i = 0; i < back.size(); ++i) {
                        err = std::max(err, std::abs(back[i] - y[lost + i]));
                        scale = std::max(scale, std::abs(y[lost + i]));
                    }
                    worst = std::max(worst, err / scale);
                    ++cases;
                }
            }
        }
    }
    return {worst <= 1e-9, fmt("%d series over 27 (d,D,s) combinations, max relative error %.2e", cases, worst)};
}

Outcome arima_recovery() {
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(20000 + seed);
        const auto y = synth::simulate_arma11(rng, 500, 0.8, 0.0);
        const auto fit = arima::fit(y, arima::Order{1, 0, 0});
        inside += fit.converged && fit.phi[0] >= 0.70 && fit.phi[0] <= 0.90;
    }
    Rng rng(1003);
    std::vector<double> walk{100};
    for (int i = 0; i < 99; ++i) {
        walk.push_back(walk.back() + rng.normal());
    }
    arima::FitOptions no_intercept;
    no_intercept.include_intercept = false;
    const auto rw = arima::fit(walk, arima::Order{0, 1, 0}, no_intercept);
    const auto fc = arima::forecast(rw, walk, 15, synth::day0());
    const bool exact = std::all_of(fc.point.begin(), fc.point.end(), [&](double v) { return v == walk.back(); });
    return {inside >= 95 && exact,
            fmt("phi in [0.70,0.90] in %d/100 runs; (0,1,0) forecasts equal last value exactly: %s", inside,
                exact ? "yes" : "no")};
}

Outcome psi_weights() {
    arima::Fit f;
    f.order = arima::Order{1, 0, 1};
    f.phi = {0.5};
    f.theta = {0.3};
    f.converged = true;
    const auto psi = arima::psi_weights(f, 4);
    const double err = std::max({std::abs(psi[1] - 0.8), std::abs(psi[2] - 0.4), std::abs(psi[3] - 0.2)});
    return {psi[0] == 1.0 && err <= 1e-12, fmt("psi1..3 = %.15g %.15g %.15g", psi[1], psi[2], psi[3])};
}

Outcome ets_recovery() {
    std::vector<double> ramp(60);
    for (std::size_t t = 0; t < ramp.size(); ++t) {
        ramp[t] = 3 + 2 * static_cast<double>(t);
    }
    const auto fit = ets::fit(ramp, ets::Spec{ets::Trend::additive, ets::Season::none});
    const auto fc = ets::forecast(fit, 10, synth::day0(), true);
    double worst = 0;
    for (std::size_t h = 1; h <= 10; ++h) {
        const double truth = 3 + 2 * static_cast<double>(59 + h);
        worst = std::max(worst, std::abs(fc.point[h - 1] - truth) / truth);
    }

    Rng rng(1005);
    const auto y = random_vector(rng, 40, 5);
    const ets::Spec level{};
    const auto pass = ets::smooth_pass(y, level, ets::Parameters{1.0}, ets::States{y[0]});
    double naive_err = 0;
    for (std::size_t t = 1; t < y.size(); ++t) {
        naive_err = std::max(naive_err, std::abs(pass.fitted[t] - y[t - 1]));
    }
    ets::Fit frozen;
    frozen.spec = level;
    frozen.params.alpha = 1.0;
    frozen.final_states = pass.final_states;
    frozen.sigma2 = 1.0;
    frozen.converged = true;
    for (double v : ets::forecast(frozen, 10, synth::day0()).point) {
        naive_err = std::max(naive_err, std::abs(v - y.back()));
    }
    return {worst < 0.01 && naive_err <= 1e-9,
            fmt("ramp max relative error %.2e at h<=10 (converged %s); alpha=1 deviation from naive %.2e", worst,
                fit.converged ? "yes" : "no", naive_err)};
}

Outcome additive_recovery() {
    const std::size_t n = 200;
    std::vector<Date> dates;
    std::vector<double> y, line, wave;
    Rng rng(1006);
    for (std::size_t i = 0; i < n; ++i) {
        dates.push_back(add_days(synth::day0(), static_cast<long long>(i)));
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        line.push_back(t < 0.5 ? 10 + 100 * t : 60 + 300 * (t - 0.5));
        wave.push_back(5.0 * std::sin(2 * std::numbers::pi * static_cast<double>(days_since_epoch(dates.back())) / 7));
        y.push_back(line.back() + wave.back() + 0.5 * rng.normal());
    }
    additive::Config config;
    config.n_changepoints = 10;
    const auto fit = additive::fit(dates, y, config);
    const auto trend = additive::trend_component(fit, dates);
    const auto weekly = additive::weekly_component(fit, dates);
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(trend[i] - line[i]));
    }
    const auto [lo, hi] = std::minmax_element(line.begin(), line.end());
    const double range = *hi - *lo;
    const double mw = std::accumulate(weekly.begin(), weekly.end(), 0.0) / static_cast<double>(n);
    const double mt = std::accumulate(wave.begin(), wave.end(), 0.0) / static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (weekly[i] - mw) * (wave[i] - mt);
        saa += (weekly[i] - mw) * (weekly[i] - mw);
        sbb += (wave[i] - mt) * (wave[i] - mt);
    }
    const double corr = sab / std::sqrt(saa * sbb);
    return {worst < 0.02 * range && corr > 0.99,
            fmt("trend max error %.2f%% of range, weekly correlation %.5f", 100 * worst / range, corr)};
}

double pairwise_auc(const std::vector<double> &s, const std::vector<int> &l) {
    double hits = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (l[i] == 1 && l[j] == 0) {
                pairs += 1;
                hits += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
        }
    }
    return hits / pairs;
}

classify::LabeledTable weather_like_table(Rng &rng, std::size_t n) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
    std::vector<int> labels;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        x(r, 0) = 12 + 7 * rng.normal();
        x(r, 1) = rng.uniform() < 0.5 ? 34.05 : 40.71;
        x(r, 2) = static_cast<double>(rng.index(104));
        labels.push_back(0.05 * x(r, 2) + 0.1 * x(r, 0) - 4 + rng.normal() > 0 ? 1 : 0);
    }
    return classify::make_table(std::move(x), std::move(labels), {"temperature", "latitude", "day"});
}

Outcome classifier_suite() {
    Rng rng(1007);
    std::size_t labelings = 0, mismatches = 0;
    for (std::size_t n = 2; n <= 8; ++n) {
        std::vector<double> scores(n);
        for (auto &s : scores) {
            s = static_cast<double>(rng.index(5)) / 5.0;
        }
        for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                labels[i] = static_cast<int>((mask >> i) & 1u);
            }
            ++labelings;
            mismatches += classify::auc(scores, labels) != pairwise_auc(scores, labels);
        }
    }

    const auto table = weather_like_table(rng, 150);
    const auto x = table.standardized();
    double worst_grad = 0;
    for (int point = 0; point < 10; ++point) {
        std::vector<double> w{rng.normal(), rng.normal(), rng.normal()};
        const double b = rng.normal();
        const auto g = classify::logistic_gradient(x, table.labels, w, b);
        for (std::size_t j = 0; j <= w.size(); ++j) {
            const double h = 1e-6;
            auto wp = w, wm = w;
            double bp = b, bm = b;
            (j < w.size() ? wp[j] : bp) += h;
            (j < w.size() ? wm[j] : bm) -= h;
            const double numeric = (classify::logistic_loss(x, table.labels, wp, bp) -
                                    classify::logistic_loss(x, table.labels, wm, bm)) /
                                   (2 * h);
            worst_grad = std::max(worst_grad, std::abs(g[j] - numeric) / std::max(1.0, std::abs(numeric)));
        }
    }

    classify::ForestOptions opt;
    opt.seed = 77;
    const auto first = classify::to_json(classify::fit_forest(table, opt));
    const auto second = classify::to_json(classify::fit_forest(table, opt));
    opt.jobs = 8;
    const auto parallel = classify::to_json(classify::fit_forest(table, opt));
    const bool deterministic = first == second && first == parallel;

    return {mismatches == 0 && worst_grad <= 1e-5 && deterministic,
            fmt("AUC mismatches %zu/%zu labelings; gradient max relative error %.2e; forest identical across runs "
                "and 1 vs 8 workers: %s",
                mismatches, labelings, worst_grad, deterministic ? "yes" : "no")};
}

Outcome null_weather() {
    int logistic_inside = 0, forest_inside = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(30000 + seed);
        auto table = weather_like_table(rng, 300);
        // Labels drawn independently of the features.
        for (auto &l : table.labels) {
            l = rng.uniform() < 0.5 ? 1 : 0;
        }
        const auto split = classify::stratified_split(table.labels, 0.7, seed);
        const auto train_rows = table.subset(split.train);
        const auto test = table.subset(split.test);
        const auto train = classify::make_table(train_rows.features, train_rows.labels);
        const double la = classify::auc(classify::predict_proba(classify::fit_logistic(train), test.features),
                                        test.labels);
        classify::ForestOptions opt;
        opt.seed = seed;
        const double fa =
            classify::auc(classify::predict_proba(classify::fit_forest(train, opt), test.features), test.labels);
        logistic_inside += la >= 0.35 && la <= 0.65;
        forest_inside += fa >= 0.35 && fa <= 0.65;
    }
    return {logistic_inside >= 45 && forest_inside >= 45,
            fmt("held-out AUC in [0.35,0.65]: logistic %d/50, random forest %d/50", logistic_inside, forest_inside)};
}

int run_cli(const std::string &args) {
    const std::string cmd = std::string("\"") + EPICAST_BIN + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end_determinism() {
    const char *archive_env = std::getenv("EPICAST_ARCHIVE_DIR");
    const fs::path archive = archive_env ? archive_env : fs::path(EPICAST_SOURCE_DIR) / "data" / "archive";
    const auto files = ArchiveFiles::in(archive);
    const fs::path dir = fs::temp_directory_path() / "epicast_acceptance_e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);

    std::string inputs;
    std::string source;
    if (fs::exists(files.confirmed)) {
        inputs = "cases = \"" + files.confirmed.string() + "\"\n";
        if (fs::exists(files.deaths)) {
            inputs += "deaths = \"" + files.deaths.string() + "\"\n";
        }
        inputs += "regions = [\"" + std::string(kLosAngeles) + "\", \"" + std::string(kNewYork) + "\"]\n";
        source = "archived dataset";
    } else {
        const auto ws = synth::make_workspace(dir / "data", 6, 104, 1012);
        inputs = "cases = \"" + ws.cases.string() + "\"\ndeaths = \"" + ws.deaths.string() + "\"\n";
        source = "synthetic stand-in (archive not found at " + archive.string() + ")";
    }
    const std::string common = inputs + "models = [\"arima\", \"ets\", \"additive\", \"average\"]\n";
    for (const char *run : {"a", "b", "c"}) {
        write_file(dir / (std::string(run) + ".toml"), common + "output = \"" + (dir / run).string() + "\"\n");
    }
    const auto cfg = [&](const char *run) { return "--config \"" + (dir / (std::string(run) + ".toml")).string() + "\""; };
    const int ra = run_cli("--jobs 1 forecast " + cfg("a"));
    const int rb = run_cli("--jobs 1 forecast " + cfg("b"));
    const int rc = run_cli("--jobs 8 forecast " + cfg("c"));
    if (ra != 0 || rb != 0 || rc != 0) {
        return {false, fmt("epicast exited with %d/%d/%d on the %s", ra, rb, rc, source.c_str())};
    }
    const auto report = [&](const char *run, const char *file) { return read_file(dir / run / file); };
    const bool repeat = report("a", "report.csv") == report("b", "report.csv") &&
                        report("a", "report.json") == report("b", "report.json");
    const bool workers = report("a", "report.csv") == report("c", "report.csv") &&
                         report("a", "report.json") == report("c", "report.json");
    const auto rows = std::count(report("a", "report.csv").begin(), report("a", "report.csv").end(), '\n') - 1;
    return {repeat && workers, fmt("%ld report rows on the %s; identical reruns: %s; --jobs 1 vs --jobs 8: %s", rows,
                                   source.c_str(), repeat ? "yes" : "no", workers ? "yes" : "no")};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "metrics oracle", 1.0, metrics_oracle},
        {2, "differencing round-trip", 1.0, differencing_round_trip},
        {3, "ARIMA recovery", 120.0, arima_recovery},
        {4, "ARIMA psi-weights", 0.0, psi_weights},
        {5, "ETS recovery", 0.0, ets_recovery},
        {6, "additive model recovery", 10.0, additive_recovery},
        {7, "classifier suite", 0.0, classifier_suite},
        {8, "null-weather sanity", 0.0, null_weather},
        {12, "end-to-end determinism", 120.0, end_to_end_determinism},
    };
    int failed = 0;
    for (const auto &c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.check();
        } catch (const std::exception &err) {
            out = {false, std::string("exception: ") + err.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string timing = fmt("%.2fs", secs);
        if (c.budget_s > 0) {
            const bool in_budget = secs < c.budget_s;
            timing += fmt(" (limit %.0fs%s)", c.budget_s, in_budget ? "" : ", exceeded");
            out.pass = out.pass && in_budget;
        }
        failed += !out.pass;
        std::printf("%s criterion %d: %s: %s [%s]\n", out.pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                    out.detail.c_str(), timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
