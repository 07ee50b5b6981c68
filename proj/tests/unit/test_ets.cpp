#include "epicast/errors.hpp"
#include "epicast/ets.hpp"

#include "synthetic.hpp"

#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace epicast;
using ets::Season;
using ets::Spec;
using ets::Trend;

namespace {

const Date kFirst{std::chrono::year{2020} / 5 / 1};

const Spec kLevel{};
const Spec kTrend{Trend::additive, Season::none};
const Spec kDamped{Trend::additive, Season::none, 7, true};
const Spec kSeasonal{Trend::none, Season::additive, 7};

double in_sample_rmse(const ets::Fit &f) {
    double s = 0;
    for (double e : f.residuals) {
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(f.residuals.size()));
}

std::vector<double> weekly_wave(Rng &rng, std::size_t n, double amplitude, double noise) {
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        y[t] = 50 + amplitude * std::sin(2 * std::numbers::pi * static_cast<double>(t) / 7.0) + noise * rng.normal();
    }
    return y;
}

} // namespace

TEST(SmoothPass, AlphaOneIsNaive) {
    const std::vector<double> y{3, 8, 2, 9, 4};
    const auto pass = ets::smooth_pass(y, kLevel, ets::Parameters{1.0}, ets::States{3.0});
    ASSERT_EQ(pass.fitted.size(), y.size());
    for (std::size_t t = 1; t < y.size(); ++t) {
        EXPECT_DOUBLE_EQ(pass.fitted[t], y[t - 1]);
    }
    EXPECT_DOUBLE_EQ(pass.final_states.level, y.back());
}

TEST(SmoothPass, AlphaZeroFreezesLevel) {
    const std::vector<double> y{3, 8, 2, 9, 4};
    const auto pass = ets::smooth_pass(y, kLevel, ets::Parameters{0.0}, ets::States{5.5});
    for (double f : pass.fitted) {
        EXPECT_DOUBLE_EQ(f, 5.5);
    }
}

TEST(SmoothPass, ThreePointsUnrolledByHand) {
    const std::vector<double> y{2.0, 4.0, 3.0};
    const auto pass = ets::smooth_pass(y, kLevel, ets::Parameters{0.5}, ets::States{2.0});
    // l0 = 2; yhat1 = 2, l1 = 2; yhat2 = 2, e = 2, l2 = 3; yhat3 = 3, e = 0.
    EXPECT_NEAR(pass.fitted[0], 2.0, 1e-12);
    EXPECT_NEAR(pass.fitted[1], 2.0, 1e-12);
    EXPECT_NEAR(pass.fitted[2], 3.0, 1e-12);
    EXPECT_NEAR(pass.sse, 4.0, 1e-12);
    EXPECT_NEAR(pass.final_states.level, 3.0, 1e-12);
}

TEST(SmoothPass, RejectsParametersOutsideTheBox) {
    const std::vector<double> y{1, 2, 3};
    EXPECT_THROW(ets::smooth_pass(y, kLevel, ets::Parameters{1.2}, ets::States{}), ContractError);
    EXPECT_THROW(ets::smooth_pass(y, kTrend, ets::Parameters{0.3, 0.5}, ets::States{}), ContractError);
    EXPECT_THROW(ets::smooth_pass(y, kDamped, ets::Parameters{0.3, 0.1, 0.0, 0.5}, ets::States{}), ContractError);
}

TEST(EtsFit, ConstantSeriesIsExact) {
    const std::vector<double> y(30, 7.25);
    const auto f = ets::fit(y, kLevel);
    EXPECT_TRUE(f.converged);
    EXPECT_NEAR(f.sigma2, 0.0, 1e-12);
    const auto fc = ets::forecast(f, 5, kFirst);
    for (double p : fc.point) {
        EXPECT_NEAR(p, 7.25, 1e-9);
    }
}

TEST(EtsFit, RampContinuesTheLine) {
    std::vector<double> y(60);
    for (std::size_t t = 0; t < y.size(); ++t) {
        y[t] = 3 + 2 * static_cast<double>(t);
    }
    const auto f = ets::fit(y, kTrend);
    ASSERT_TRUE(f.converged);
    const auto fc = ets::forecast(f, 10, kFirst);
    for (std::size_t h = 1; h <= 10; ++h) {
        const double truth = 3 + 2 * static_cast<double>(59 + h);
        EXPECT_LT(std::abs(fc.point[h - 1] - truth) / truth, 0.01) << "h=" << h;
    }
}

TEST(EtsFit, SeasonalBeatsLevelOnlyOnWeeklyWave) {
    Rng rng(31);
    const auto y = weekly_wave(rng, 84, 10, 1);
    const auto seasonal = ets::fit(y, kSeasonal);
    const auto level = ets::fit(y, kLevel);
    EXPECT_LT(in_sample_rmse(seasonal), in_sample_rmse(level));
}

TEST(EtsFit, SseMatchesAnIndependentPass) {
    Rng rng(32);
    const auto y = weekly_wave(rng, 70, 5, 2);
    for (const Spec &spec : {kLevel, kTrend, kDamped, kSeasonal, Spec{Trend::additive, Season::additive, 7}}) {
        const auto f = ets::fit(y, spec);
        const auto pass = ets::smooth_pass(y, spec, f.params, f.initial);
        EXPECT_NEAR(pass.sse, f.sse, 1e-9 * std::max(1.0, f.sse)) << spec.to_string();
        const double n = static_cast<double>(y.size());
        EXPECT_NEAR(f.aic, n * std::log(f.sse / n) + 2.0 * (f.n_parameters() + 1), 1e-9) << spec.to_string();
    }
}

TEST(EtsFit, ShiftEquivariance) {
    Rng rng(33);
    const auto y = weekly_wave(rng, 70, 5, 2);
    auto shifted = y;
    const double c = 1000.0;
    for (auto &v : shifted) {
        v += c;
    }
    for (const Spec &spec : {kLevel, kTrend, kSeasonal}) {
        const auto a = ets::fit(y, spec);
        const auto b = ets::fit(shifted, spec);
        EXPECT_NEAR(a.params.alpha, b.params.alpha, 1e-6) << spec.to_string();
        EXPECT_NEAR(a.params.beta, b.params.beta, 1e-6) << spec.to_string();
        EXPECT_NEAR(a.params.gamma, b.params.gamma, 1e-6) << spec.to_string();
        EXPECT_NEAR(a.initial.level + c, b.initial.level, 1e-6) << spec.to_string();
        const auto fa = ets::forecast(a, 10, kFirst, true);
        const auto fb = ets::forecast(b, 10, kFirst, true);
        for (std::size_t h = 0; h < 10; ++h) {
            EXPECT_NEAR(fa.point[h] + c, fb.point[h], 1e-6) << spec.to_string();
        }
    }
}

TEST(EtsFit, SeasonalStatesSumToZeroWithoutMovingForecasts) {
    Rng rng(34);
    const auto y = weekly_wave(rng, 70, 8, 1);
    const auto f = ets::fit(y, kSeasonal);
    double total = 0;
    for (double s : f.final_states.season) {
        total += s;
    }
    EXPECT_NEAR(total, 0.0, 1e-8);

    ets::States raw{10.0, 0.5, {3, -1, 4, 1, -5, 9, 2}};
    const auto normalized = ets::normalize_season(raw);
    auto a = f;
    a.spec = Spec{Trend::additive, Season::additive, 7};
    a.final_states = raw;
    auto b = a;
    b.final_states = normalized;
    const auto fa = ets::forecast(a, 14, kFirst, true);
    const auto fb = ets::forecast(b, 14, kFirst, true);
    for (std::size_t h = 0; h < 14; ++h) {
        EXPECT_NEAR(fa.point[h], fb.point[h], 1e-8);
    }
}

TEST(EtsFit, TooShortIsAContractError) {
    const std::vector<double> y(5, 1.0);
    EXPECT_THROW(ets::fit(y, kLevel), ContractError);
    const std::vector<double> z(23, 1.0);
    EXPECT_THROW(ets::fit(z, kSeasonal), ContractError);
}

TEST(EtsForecast, LevelOnlyIsFlat) {
    ets::Fit f;
    f.spec = kLevel;
    f.params.alpha = 0.4;
    f.final_states.level = 12.5;
    f.sigma2 = 1.0;
    f.converged = true;
    const auto fc = ets::forecast(f, 6, kFirst);
    for (double p : fc.point) {
        EXPECT_DOUBLE_EQ(p, 12.5);
    }
    EXPECT_EQ(fc.horizon_dates.front(), kFirst);
    EXPECT_EQ(fc.horizon_dates.back(), add_days(kFirst, 5));
}

TEST(EtsForecast, TrendArithmetic) {
    ets::Fit f;
    f.spec = kTrend;
    f.params = ets::Parameters{0.5, 0.1};
    f.final_states = ets::States{10.0, 2.0};
    f.sigma2 = 1.0;
    f.converged = true;
    const auto fc = ets::forecast(f, 3, kFirst);
    EXPECT_DOUBLE_EQ(fc.point[2], 16.0);
}

TEST(EtsForecast, SeasonIndexWrapsByPeriod) {
    ets::Fit f;
    f.spec = Spec{Trend::none, Season::additive, 3};
    f.params = ets::Parameters{0.3, 0.0, 0.2};
    f.final_states = ets::States{100.0, 0.0, {-1.0, 0.0, 1.0}}; // s_{n-3}, s_{n-2}, s_{n-1}
    f.sigma2 = 1.0;
    f.converged = true;
    const auto fc = ets::forecast(f, 6, kFirst);
    const std::vector<double> expected{99, 100, 101, 99, 100, 101};
    for (std::size_t h = 0; h < 6; ++h) {
        EXPECT_DOUBLE_EQ(fc.point[h], expected[h]);
    }
}

TEST(EtsForecast, VarianceMultipliersMatchClosedForms) {
    ets::Fit f;
    f.sigma2 = 1.0;
    f.converged = true;
    f.spec = kLevel;
    f.params = ets::Parameters{0.4};
    auto v = ets::variance_multipliers(f, 5);
    for (std::size_t h = 1; h <= 5; ++h) {
        EXPECT_NEAR(v[h - 1], 1 + (h - 1) * 0.16, 1e-12);
    }

    f.spec = kTrend;
    f.params = ets::Parameters{0.4, 0.1};
    v = ets::variance_multipliers(f, 5);
    for (std::size_t h = 1; h <= 5; ++h) {
        double sum = 1;
        for (std::size_t j = 1; j < h; ++j) {
            const double c = 0.4 + 0.1 * static_cast<double>(j);
            sum += c * c;
        }
        EXPECT_NEAR(v[h - 1], sum, 1e-12);
    }

    f.spec = Spec{Trend::none, Season::additive, 3};
    f.params = ets::Parameters{0.3, 0.0, 0.2};
    v = ets::variance_multipliers(f, 7);
    for (std::size_t h = 1; h <= 7; ++h) {
        double sum = 1;
        for (std::size_t j = 1; j < h; ++j) {
            const double c = 0.3 + (j % 3 == 0 ? 0.2 : 0.0);
            sum += c * c;
        }
        EXPECT_NEAR(v[h - 1], sum, 1e-12);
    }
}

TEST(EtsForecast, IntervalsWidenAndNest) {
    Rng rng(35);
    const auto y = weekly_wave(rng, 70, 5, 2);
    for (const Spec &spec : {kLevel, kTrend, kDamped, kSeasonal}) {
        const auto f = ets::fit(y, spec);
        const auto fc = ets::forecast(f, 20, kFirst, true);
        EXPECT_TRUE(fc.is_consistent());
        for (std::size_t h = 1; h < 20; ++h) {
            EXPECT_GE(fc.upper95[h] - fc.lower95[h], fc.upper95[h - 1] - fc.lower95[h - 1] - 1e-9);
        }
    }
    EXPECT_THROW(ets::forecast(ets::fit(y, kLevel), 0, kFirst), ContractError);
}

TEST(EtsAutoFit, RampPicksATrend) {
    std::vector<double> y(60);
    for (std::size_t t = 0; t < y.size(); ++t) {
        y[t] = 3 + 2 * static_cast<double>(t);
    }
    EXPECT_TRUE(ets::auto_fit(y).best.spec.has_trend());
}

TEST(EtsAutoFit, WhiteNoiseStaysNonSeasonal) {
    int plain = 0;
    for (int seed = 0; seed < 50; ++seed) {
        Rng rng(4000 + static_cast<std::uint64_t>(seed));
        std::vector<double> y(100);
        for (auto &v : y) {
            v = 20 + rng.normal();
        }
        const auto best = ets::auto_fit(y).best.spec;
        plain += !best.has_season() && (!best.has_trend() || best.damped);
    }
    EXPECT_GE(plain, 40);
}

TEST(EtsAutoFit, WeeklyWavePicksASeason) {
    int seasonal = 0;
    for (int seed = 0; seed < 40; ++seed) {
        Rng rng(5000 + static_cast<std::uint64_t>(seed));
        seasonal += ets::auto_fit(weekly_wave(rng, 84, 10, 1)).best.spec.has_season();
    }
    EXPECT_GE(seasonal, 38);
}

TEST(EtsAutoFit, WinnerHasMinimalAicAndSerializes) {
    Rng rng(36);
    const auto y = weekly_wave(rng, 70, 5, 2);
    const auto result = ets::auto_fit(y);
    EXPECT_EQ(result.candidates.size(), 5u);
    for (const auto &c : result.candidates) {
        if (c.converged) {
            EXPECT_LE(result.best.aic, c.aic);
        }
    }
    const auto j = nlohmann::json::parse(ets::to_json(result.best));
    EXPECT_EQ(j.at("spec").at("seasonal").get<std::string>() == "additive", result.best.spec.has_season());
    EXPECT_NEAR(j.at("parameters").at("alpha").get<double>(), result.best.params.alpha, 1e-12);

    const std::vector<double> short_y(20, 1.0);
    const auto no_season = ets::auto_fit(short_y);
    for (const auto &c : no_season.candidates) {
        EXPECT_FALSE(c.spec.has_season());
    }
}
