#include "epicast/additive.hpp"

#include "epicast/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace epicast::additive {

namespace {

constexpr double kWeekDays = 7.0;
constexpr double kYearDays = 365.25;
constexpr long long kTwoYears = 730;

void check_dates(std::span<const Date> dates) {
    if (dates.empty()) {
        throw ContractError("additive model needs at least one date");
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) {
            throw ContractError("dates must be strictly increasing (" + to_iso(dates[i - 1]) + " then " +
                                to_iso(dates[i]) + ")");
        }
    }
}

std::size_t fourier_offset(const Layout &layout) { return 2 + layout.changepoints.size(); }

} // namespace

void Config::validate() const {
    if (n_changepoints < 0 || weekly_order < 0 || yearly_order < 0) {
        throw ContractError("changepoint count and Fourier orders must be non-negative");
    }
    if (!(changepoint_range > 0.0 && changepoint_range <= 1.0)) {
        throw ContractError("changepoint_range must lie in (0, 1]");
    }
    if (!(trend_ridge >= 0.0) || !(season_ridge >= 0.0)) {
        throw ContractError("ridge penalties must be >= 0");
    }
}

Eigen::VectorXd Fit::weights() const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(2 + delta.size() + beta.size()));
    Eigen::Index i = 0;
    w[i++] = m;
    w[i++] = k;
    for (double d : delta) {
        w[i++] = d;
    }
    for (double b : beta) {
        w[i++] = b;
    }
    return w;
}

Layout make_layout(std::span<const Date> dates, const Config &config) {
    config.validate();
    check_dates(dates);
    Layout layout;
    layout.t0_days = days_since_epoch(dates.front());
    const long long span = days_since_epoch(dates.back()) - layout.t0_days;
    layout.t_scale = span > 0 ? static_cast<double>(span) : 1.0;
    layout.weekly_order = config.weekly_order;
    layout.yearly_order = span >= kTwoYears ? config.yearly_order : 0;

    const auto n = dates.size();
    const auto history = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.changepoint_range));
    std::size_t n_cp = static_cast<std::size_t>(config.n_changepoints);
    if (history == 0) {
        n_cp = 0;
    } else if (n_cp + 1 > history) {
        n_cp = history - 1;
    }
    // Evenly spaced indices over the first `history` points, dropping index 0.
    for (std::size_t j = 1; j <= n_cp; ++j) {
        const double pos = static_cast<double>(history - 1) * static_cast<double>(j) / static_cast<double>(n_cp);
        const auto idx = static_cast<std::size_t>(std::nearbyint(pos));
        layout.changepoints.push_back(static_cast<double>(days_since_epoch(dates[idx]) - layout.t0_days) /
                                      layout.t_scale);
    }
    return layout;
}

Eigen::MatrixXd design_matrix(std::span<const Date> dates, const Layout &layout) {
    const auto rows = static_cast<Eigen::Index>(dates.size());
    Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(layout.n_columns()));
    const double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const long long d = days_since_epoch(dates[static_cast<std::size_t>(r)]);
        const double t = static_cast<double>(d - layout.t0_days) / layout.t_scale;
        Eigen::Index c = 0;
        X(r, c++) = 1.0;
        X(r, c++) = t;
        for (double cp : layout.changepoints) {
            X(r, c++) = std::max(0.0, t - cp);
        }
        // Reduce the day count before scaling so large epochs keep full precision.
        const double week_phase = static_cast<double>(((d % 7) + 7) % 7) / kWeekDays;
        for (int k = 1; k <= layout.weekly_order; ++k) {
            X(r, c++) = std::sin(two_pi * k * week_phase);
            X(r, c++) = std::cos(two_pi * k * week_phase);
        }
        const double year_phase = std::fmod(static_cast<double>(d), kYearDays) / kYearDays;
        for (int k = 1; k <= layout.yearly_order; ++k) {
            X(r, c++) = std::sin(two_pi * k * year_phase);
            X(r, c++) = std::cos(two_pi * k * year_phase);
        }
    }
    return X;
}

Fit fit(std::span<const Date> dates, std::span<const double> y, const Config &config) {
    config.validate();
    if (dates.size() != y.size()) {
        throw ContractError("dates and values differ in length");
    }
    if (y.size() < 2 + static_cast<std::size_t>(config.n_changepoints)) {
        throw ContractError("additive model with " + std::to_string(config.n_changepoints) +
                            " changepoints needs at least " + std::to_string(2 + config.n_changepoints) +
                            " observations, got " + std::to_string(y.size()));
    }

    Fit out;
    out.layout = make_layout(dates, config);
    out.clamp_nonnegative = config.clamp_nonnegative;
    double max_abs = 0.0;
    for (double v : y) {
        max_abs = std::max(max_abs, std::abs(v));
    }
    out.y_scale = max_abs > 0.0 ? max_abs : 1.0;

    const Eigen::MatrixXd X = design_matrix(dates, out.layout);
    Eigen::VectorXd target(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) {
        target[static_cast<Eigen::Index>(i)] = y[i] / out.y_scale;
    }

    const Eigen::MatrixXd gram = X.transpose() * X;
    const Eigen::VectorXd rhs = X.transpose() * target;
    const auto n_cp = static_cast<Eigen::Index>(out.layout.changepoints.size());
    const auto solve = [&](double noise) {
        Eigen::MatrixXd normal = gram;
        for (Eigen::Index j = 0; j < n_cp; ++j) {
            normal(2 + j, 2 + j) += noise * config.trend_ridge;
        }
        for (Eigen::Index j = 2 + n_cp; j < normal.rows(); ++j) {
            normal(j, j) += noise * config.season_ridge;
        }
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
        // rcond() alone misses exactly zero pivots, so check the pivot spread too.
        const Eigen::VectorXd pivots = ldlt.vectorD();
        const bool degenerate = !(pivots.minCoeff() > 1e-13 * pivots.cwiseAbs().maxCoeff());
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || degenerate || !(ldlt.rcond() > 1e-13)) {
            throw NumericalError("additive model: penalized normal equations are singular (rcond " +
                                 std::to_string(ldlt.rcond()) + "); raise the ridge penalties or drop terms");
        }
        Eigen::VectorXd w = ldlt.solve(rhs);
        if (!w.allFinite()) {
            throw NumericalError("additive model: non-finite solution");
        }
        return w;
    };

    // The residual variance only shrinks as the penalty weakens, so the
    // iteration from s2 = 1 decreases monotonically to its fixed point.
    const double n = static_cast<double>(y.size());
    double noise = 1.0;
    Eigen::VectorXd w = solve(noise);
    constexpr int kMaxNoiseIterations = 200;
    for (int it = 1; it <= kMaxNoiseIterations; ++it) {
        const double next = std::max(kMinNoiseVariance, (target - X * w).squaredNorm() / n);
        out.noise_iterations = it;
        if (std::abs(next - noise) <= 1e-10 * noise) {
            break;
        }
        noise = next;
        w = solve(noise);
    }
    out.noise_variance = noise;

    out.m = w[0];
    out.k = w[1];
    out.delta.assign(w.data() + 2, w.data() + 2 + n_cp);
    out.beta.assign(w.data() + 2 + n_cp, w.data() + w.size());

    const Eigen::VectorXd fitted = X * w * out.y_scale;
    out.fitted.assign(fitted.data(), fitted.data() + fitted.size());
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - out.fitted[i];
        sse += e * e;
    }
    out.sigma2 = sse / static_cast<double>(y.size());
    return out;
}

ForecastResult predict(const Fit &fit, std::span<const Date> dates) {
    const Eigen::MatrixXd X = design_matrix(dates, fit.layout);
    const Eigen::VectorXd point = X * fit.weights() * fit.y_scale;
    const double sigma = std::sqrt(std::max(fit.sigma2, 0.0));

    ForecastResult out;
    out.model_name = "additive";
    out.horizon_dates.assign(dates.begin(), dates.end());
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        const double p = point[i];
        auto lower = [&](double z) {
            const double lo = p - z * sigma;
            return fit.clamp_nonnegative ? std::min(p, std::max(0.0, lo)) : lo;
        };
        out.point.push_back(p);
        out.lower80.push_back(lower(kZ80));
        out.upper80.push_back(p + kZ80 * sigma);
        out.lower95.push_back(lower(kZ95));
        out.upper95.push_back(p + kZ95 * sigma);
    }
    return out;
}

std::vector<double> trend_component(const Fit &fit, std::span<const Date> dates) {
    const Eigen::MatrixXd X = design_matrix(dates, fit.layout);
    const auto n_trend = static_cast<Eigen::Index>(fourier_offset(fit.layout));
    const Eigen::VectorXd v = X.leftCols(n_trend) * fit.weights().head(n_trend) * fit.y_scale;
    return {v.data(), v.data() + v.size()};
}

std::vector<double> weekly_component(const Fit &fit, std::span<const Date> dates) {
    const Eigen::MatrixXd X = design_matrix(dates, fit.layout);
    const auto offset = static_cast<Eigen::Index>(fourier_offset(fit.layout));
    const auto n_weekly = static_cast<Eigen::Index>(2 * fit.layout.weekly_order);
    const Eigen::VectorXd v = X.middleCols(offset, n_weekly) * fit.weights().segment(offset, n_weekly) * fit.y_scale;
    return {v.data(), v.data() + v.size()};
}

CrossValidation cross_validate(std::span<const Date> dates, std::span<const double> y, const Config &config,
                               std::size_t horizon, std::size_t n_folds) {
    if (horizon == 0 || n_folds == 0) {
        throw ContractError("cross_validate needs horizon >= 1 and at least one fold");
    }
    if (dates.size() != y.size()) {
        throw ContractError("dates and values differ in length");
    }
    const std::size_t min_train = std::max<std::size_t>(2 + static_cast<std::size_t>(config.n_changepoints), 3);
    if (y.size() < n_folds * horizon + min_train) {
        throw ContractError("series of length " + std::to_string(y.size()) + " cannot hold " +
                            std::to_string(n_folds) + " folds of " + std::to_string(horizon) +
                            " days after a training prefix of " + std::to_string(min_train));
    }
    CrossValidation out;
    for (std::size_t fold = 0; fold < n_folds; ++fold) {
        const std::size_t train = y.size() - (n_folds - fold) * horizon;
        const Fit f = fit(dates.first(train), y.first(train), config);
        const auto fc = predict(f, dates.subspan(train, horizon));
        out.folds.push_back(evaluate(y.subspan(train, horizon), fc.point));
    }
    for (const auto &r : out.folds) {
        out.mean.rmse += r.rmse;
        out.mean.me += r.me;
        out.mean.mae += r.mae;
        out.mean.n += r.n;
    }
    const auto k = static_cast<double>(out.folds.size());
    out.mean.rmse /= k;
    out.mean.me /= k;
    out.mean.mae /= k;
    return out;
}

std::string to_json(const Fit &fit) {
    const nlohmann::ordered_json j{{"k", fit.k},
                                   {"m", fit.m},
                                   {"delta", fit.delta},
                                   {"beta", fit.beta},
                                   {"changepoints", fit.layout.changepoints},
                                   {"t0_days", fit.layout.t0_days},
                                   {"t_scale", fit.layout.t_scale},
                                   {"weekly_order", fit.layout.weekly_order},
                                   {"yearly_order", fit.layout.yearly_order},
                                   {"y_scale", fit.y_scale},
                                   {"sigma2", fit.sigma2},
                                   {"noise_variance", fit.noise_variance}};
    return j.dump();
}

} // namespace epicast::additive
