#include "epicast/additive.hpp"
#include "epicast/arima.hpp"
#include "epicast/classifier.hpp"
#include "epicast/ets.hpp"
#include "epicast/random.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace epicast;

namespace {

// Cumulative counts with a weekly reporting cycle, roughly the shape of a
// regional case curve.
std::vector<double> case_curve(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y;
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        const double daily = 800.0 / (1.0 + std::exp(-(t - 0.6 * static_cast<double>(n)) / 8.0)) *
                             (1.0 + 0.2 * std::sin(2 * std::numbers::pi * t / 7.0)) * (1.0 + 0.1 * rng.normal());
        total += std::max(0.0, daily);
        y.push_back(total);
    }
    return y;
}

std::vector<Date> calendar(std::size_t n) {
    std::vector<Date> d;
    for (std::size_t i = 0; i < n; ++i) {
        d.push_back(add_days(Date{std::chrono::year{2020} / 1 / 22}, static_cast<long long>(i)));
    }
    return d;
}

void BM_ArimaFit(benchmark::State &state) {
    const auto y = case_curve(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(arima::fit(y, arima::Order{2, 1, 1}));
    }
}
BENCHMARK(BM_ArimaFit)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_ArimaAutoFit(benchmark::State &state) {
    const auto y = case_curve(104, 2);
    arima::AutoOptions options;
    options.seasonal = state.range(0) != 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(arima::auto_fit(y, options));
    }
}
BENCHMARK(BM_ArimaAutoFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EtsAutoFit(benchmark::State &state) {
    const auto y = case_curve(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ets::auto_fit(y, 7));
    }
}
BENCHMARK(BM_EtsAutoFit)->Arg(104)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_AdditiveFit(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto y = case_curve(n, 4);
    const auto d = calendar(n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(additive::fit(d, y));
    }
}
BENCHMARK(BM_AdditiveFit)->Arg(104)->Arg(1000)->Unit(benchmark::kMillisecond);

classify::LabeledTable table(std::size_t n) {
    Rng rng(5);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
    std::vector<int> labels;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        x(r, 0) = 12 + 7 * rng.normal();
        x(r, 1) = 30 + 10 * rng.uniform();
        x(r, 2) = static_cast<double>(rng.index(104));
        labels.push_back(0.05 * x(r, 2) + 0.1 * x(r, 0) - 4 + rng.normal() > 0 ? 1 : 0);
    }
    return classify::make_table(std::move(x), std::move(labels));
}

void BM_ForestFit(benchmark::State &state) {
    const auto t = table(400);
    classify::ForestOptions options;
    options.jobs = static_cast<unsigned>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(classify::fit_forest(t, options));
    }
}
BENCHMARK(BM_ForestFit)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_LogisticFit(benchmark::State &state) {
    const auto t = table(400);
    for (auto _ : state) {
        benchmark::DoNotOptimize(classify::fit_logistic(t));
    }
}
BENCHMARK(BM_LogisticFit)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
