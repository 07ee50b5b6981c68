#include "epicast/series.hpp"

#include "epicast/csv.hpp"
#include "epicast/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace epicast {

namespace {

void check_orders(int order, int seasonal_order, int period) {
    if (order < 0 || seasonal_order < 0 || period < 1) {
        throw ContractError("differencing orders must be >= 0 and the period >= 1");
    }
}

void check_pair(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw ContractError("metric inputs differ in length: " + std::to_string(actual.size()) + " vs " +
                            std::to_string(predicted.size()));
    }
    if (actual.empty()) {
        throw ContractError("metrics need at least one point");
    }
}

} // namespace

bool ForecastResult::is_consistent() const {
    const std::size_t n = point.size();
    if (horizon_dates.size() != n || lower80.size() != n || upper80.size() != n || lower95.size() != n ||
        upper95.size() != n) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(lower95[i] <= lower80[i] && lower80[i] <= point[i] && point[i] <= upper80[i] &&
              upper80[i] <= upper95[i])) {
            return false;
        }
    }
    return true;
}

ForecastResult ForecastResult::head(std::size_t n) const {
    n = std::min(n, size());
    const auto cut = [n](const auto &v) { return std::decay_t<decltype(v)>(v.begin(), v.begin() + n); };
    return {cut(horizon_dates), cut(point), cut(lower80), cut(upper80), cut(lower95), cut(upper95), model_name};
}

std::vector<double> difference(std::span<const double> values, int order, int seasonal_order, int period) {
    check_orders(order, seasonal_order, period);
    const auto lost = static_cast<std::size_t>(order + seasonal_order * period);
    if (values.size() <= lost) {
        throw ContractError("series of length " + std::to_string(values.size()) + " is too short for " +
                            std::to_string(lost) + " lost points of differencing");
    }
    std::vector<double> out(values.begin(), values.end());
    const auto lag_diff = [&out](std::size_t lag) {
        for (std::size_t i = out.size(); i-- > lag;) {
            out[i] -= out[i - lag];
        }
        out.erase(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(lag));
    };
    for (int k = 0; k < seasonal_order; ++k) {
        lag_diff(static_cast<std::size_t>(period));
    }
    for (int k = 0; k < order; ++k) {
        lag_diff(1);
    }
    return out;
}

std::vector<double> integrate(std::span<const double> diffs, std::span<const double> history, int order,
                              int seasonal_order, int period) {
    check_orders(order, seasonal_order, period);
    const auto needed = static_cast<std::size_t>(order + seasonal_order * period);
    if (history.size() < needed) {
        throw ContractError("integration needs " + std::to_string(needed) + " history values, got " +
                            std::to_string(history.size()));
    }
    const auto tail = history.subspan(history.size() - needed);
    const auto s = static_cast<std::size_t>(period);

    // seasonal_levels[k] = tail seasonally differenced k times.
    std::vector<std::vector<double>> seasonal_levels{std::vector<double>(tail.begin(), tail.end())};
    for (int k = 0; k < seasonal_order; ++k) {
        const auto &prev = seasonal_levels.back();
        std::vector<double> next;
        for (std::size_t i = s; i < prev.size(); ++i) {
            next.push_back(prev[i] - prev[i - s]);
        }
        seasonal_levels.push_back(std::move(next));
    }
    // ordinary_levels[j] = fully seasonally differenced tail, then j ordinary differences.
    std::vector<std::vector<double>> ordinary_levels{seasonal_levels.back()};
    for (int j = 0; j < order; ++j) {
        const auto &prev = ordinary_levels.back();
        std::vector<double> next;
        for (std::size_t i = 1; i < prev.size(); ++i) {
            next.push_back(prev[i] - prev[i - 1]);
        }
        ordinary_levels.push_back(std::move(next));
    }

    std::vector<double> out(diffs.begin(), diffs.end());
    for (int j = order; j >= 1; --j) {
        double running = ordinary_levels[static_cast<std::size_t>(j - 1)].back();
        for (double &v : out) {
            running += v;
            v = running;
        }
    }
    for (int k = seasonal_order; k >= 1; --k) {
        const auto &base = seasonal_levels[static_cast<std::size_t>(k - 1)];
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += i < s ? base[base.size() - s + i] : out[i - s];
        }
    }
    return out;
}

double rmse(std::span<const double> actual, std::span<const double> predicted) {
    check_pair(actual, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

double me(std::span<const double> actual, std::span<const double> predicted) {
    check_pair(actual, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sum += actual[i] - predicted[i];
    }
    return sum / static_cast<double>(actual.size());
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
    check_pair(actual, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sum += std::abs(actual[i] - predicted[i]);
    }
    return sum / static_cast<double>(actual.size());
}

EvalReport evaluate(std::span<const double> actual, std::span<const double> predicted) {
    return {rmse(actual, predicted), me(actual, predicted), mae(actual, predicted), actual.size()};
}

ForecastResult average_forecasts(const ForecastResult &a, const ForecastResult &b) {
    if (a.horizon_dates != b.horizon_dates || a.size() != b.size() || a.horizon_dates.size() != a.size()) {
        throw ContractError("average_forecasts: forecasts '" + a.model_name + "' and '" + b.model_name +
                            "' cover different horizons");
    }
    const auto mean = [](const std::vector<double> &x, const std::vector<double> &y) {
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = 0.5 * (x[i] + y[i]);
        }
        return out;
    };
    return {a.horizon_dates,
            mean(a.point, b.point),
            mean(a.lower80, b.lower80),
            mean(a.upper80, b.upper80),
            mean(a.lower95, b.lower95),
            mean(a.upper95, b.upper95),
            "average"};
}

std::string eval_csv_header() { return "model,region,measure,rmse,me,mae,n"; }

std::string eval_csv_row(const std::string &model, const std::string &region, const std::string &measure,
                         const EvalReport &report) {
    return csv::join_row({model, region, measure, csv::format_number(report.rmse), csv::format_number(report.me),
                          csv::format_number(report.mae), std::to_string(report.n)});
}

std::string eval_to_json(const std::string &model, const std::string &region, const std::string &measure,
                         const EvalReport &report) {
    const nlohmann::ordered_json j{{"model", model},   {"region", region},   {"measure", measure},
                                   {"rmse", report.rmse}, {"me", report.me}, {"mae", report.mae},
                                   {"n", report.n}};
    return j.dump();
}

std::string forecast_to_csv(const ForecastResult &forecast) {
    std::string out = "date,point,lo80,hi80,lo95,hi95\n";
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        out += csv::join_row({to_iso(forecast.horizon_dates[i]), csv::format_number(forecast.point[i]),
                              csv::format_number(forecast.lower80[i]), csv::format_number(forecast.upper80[i]),
                              csv::format_number(forecast.lower95[i]), csv::format_number(forecast.upper95[i])});
        out += "\n";
    }
    return out;
}

} // namespace epicast
