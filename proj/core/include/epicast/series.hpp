#pragma once

#include "epicast/date.hpp"

#include <span>
#include <string>
#include <vector>

namespace epicast {

/// Point forecasts with 80% and 95% bands, one entry per horizon step.
struct ForecastResult {
    std::vector<Date> horizon_dates;
    std::vector<double> point;
    std::vector<double> lower80;
    std::vector<double> upper80;
    std::vector<double> lower95;
    std::vector<double> upper95;
    std::string model_name;

    std::size_t size() const { return point.size(); }

    /// Equal lengths, lower <= point <= upper, and the 95% band covering the 80% one.
    bool is_consistent() const;

    /// Leading `n` steps.
    ForecastResult head(std::size_t n) const;
};

struct EvalReport {
    double rmse = 0.0;
    double me = 0.0;
    double mae = 0.0;
    std::size_t n = 0;
};

inline constexpr double kZ80 = 1.2816;
inline constexpr double kZ95 = 1.9600;

/// Seasonal differencing `seasonal_order` times at lag `period`, then ordinary
/// differencing `order` times. Output has n - order - seasonal_order*period values.
std::vector<double> difference(std::span<const double> values, int order, int seasonal_order, int period);

/// Undoes `difference` for values that follow `history`. Only the last
/// order + seasonal_order*period entries of `history` are used.
std::vector<double> integrate(std::span<const double> diffs, std::span<const double> history, int order,
                              int seasonal_order, int period);

double rmse(std::span<const double> actual, std::span<const double> predicted);
/// mean(actual - predicted): over-forecasting gives a negative value.
double me(std::span<const double> actual, std::span<const double> predicted);
double mae(std::span<const double> actual, std::span<const double> predicted);

EvalReport evaluate(std::span<const double> actual, std::span<const double> predicted);

/// Pointwise mean of two forecasts over the same dates, named "average".
ForecastResult average_forecasts(const ForecastResult &a, const ForecastResult &b);

/// Header `model,region,measure,rmse,me,mae,n`.
std::string eval_csv_header();
std::string eval_csv_row(const std::string &model, const std::string &region, const std::string &measure,
                         const EvalReport &report);
std::string eval_to_json(const std::string &model, const std::string &region, const std::string &measure,
                         const EvalReport &report);

/// Rows `date,point,lo80,hi80,lo95,hi95` with a header line.
std::string forecast_to_csv(const ForecastResult &forecast);

} // namespace epicast
