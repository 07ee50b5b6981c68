#pragma once

#include "epicast/date.hpp"
#include "epicast/series.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace epicast::additive {

/// Piecewise-linear trend with changepoints plus weekly and yearly Fourier
/// terms, fit by ridge-penalized least squares.
struct Config {
    int n_changepoints = 25;
    double changepoint_range = 0.8;
    int weekly_order = 3;
    int yearly_order = 10; // dropped automatically for histories under two years
    double trend_ridge = 20.0;
    double season_ridge = 0.1;
    bool clamp_nonnegative = true;

    void validate() const;
};

/// Everything the design matrix depends on.
struct Layout {
    long long t0_days = 0;        // days since epoch of the first training date
    double t_scale = 1.0;         // training span in days
    std::vector<double> changepoints; // scaled times in [0,1]
    int weekly_order = 0;
    int yearly_order = 0;

    std::size_t n_columns() const {
        return 2 + changepoints.size() + 2 * static_cast<std::size_t>(weekly_order) +
               2 * static_cast<std::size_t>(yearly_order);
    }
};

/// Columns: [1, t, relu(t - cp_j)..., sin/cos(2 pi k d / 7)..., sin/cos(2 pi k d / 365.25)...],
/// d = days since 1970-01-01, t = (d - t0) / t_scale.
Eigen::MatrixXd design_matrix(std::span<const Date> dates, const Layout &layout);

/// Layout a fit on `dates` would use.
Layout make_layout(std::span<const Date> dates, const Config &config);

inline constexpr double kMinNoiseVariance = 1e-6;

struct Fit {
    Layout layout;
    double k = 0.0; // base slope (normalized units)
    double m = 0.0; // base offset (normalized units)
    std::vector<double> delta; // slope changes, one per changepoint
    std::vector<double> beta;  // Fourier coefficients: weekly pairs then yearly pairs
    double y_scale = 1.0;
    double sigma2 = 0.0;       // residual variance on the original scale
    double noise_variance = 1.0; // normalized-scale variance the penalties were multiplied by
    int noise_iterations = 0;
    std::vector<double> fitted;
    bool clamp_nonnegative = true;

    Eigen::VectorXd weights() const;
};

/// Penalties act like Gaussian priors against a Gaussian likelihood, so they
/// are multiplied by the residual variance on the normalized scale:
/// (X'X + s2 * Lambda) w = X'y, with s2 = |y - Xw|^2 / n solved by fixed-point
/// iteration and floored at kMinNoiseVariance.
/// Throws NumericalError when the penalized normal equations are singular.
Fit fit(std::span<const Date> dates, std::span<const double> y, const Config &config = {});

ForecastResult predict(const Fit &fit, std::span<const Date> dates);

/// Trend part only (original scale).
std::vector<double> trend_component(const Fit &fit, std::span<const Date> dates);
/// Weekly Fourier part only (original scale).
std::vector<double> weekly_component(const Fit &fit, std::span<const Date> dates);

struct CrossValidation {
    std::vector<EvalReport> folds;
    EvalReport mean; // unweighted mean of the fold metrics
};

/// Rolling origin: fold i trains on the first n - (n_folds - i) * horizon
/// points and scores the next `horizon`.
CrossValidation cross_validate(std::span<const Date> dates, std::span<const double> y, const Config &config,
                               std::size_t horizon, std::size_t n_folds);

std::string to_json(const Fit &fit);

} // namespace epicast::additive
