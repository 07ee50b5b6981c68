#pragma once

#include "epicast/date.hpp"
#include "epicast/optimize.hpp"
#include "epicast/series.hpp"

#include <span>
#include <string>
#include <vector>

namespace epicast::ets {

enum class Trend { none, additive };
enum class Season { none, additive };

struct Spec {
    Trend trend = Trend::none;
    Season seasonal = Season::none;
    int period = 7;
    bool damped = false;

    bool has_trend() const { return trend == Trend::additive; }
    bool has_season() const { return seasonal == Season::additive; }
    /// ETS(A,N,N), ETS(A,Ad,A), ...
    std::string to_string() const;
};

struct Parameters {
    double alpha = 0.5;
    double beta = 0.0;
    double gamma = 0.0;
    double phi = 1.0; // damping; 1 when undamped
};

/// Initial states. `season` holds s_{-m}, ..., s_{-1}.
struct States {
    double level = 0.0;
    double trend = 0.0;
    std::vector<double> season;
};

struct Pass {
    std::vector<double> fitted; // one-step predictions
    std::vector<double> residuals;
    States final_states;        // season holds s_{n-m}, ..., s_{n-1}
    double sse = 0.0;
};

/// Additive-error recursions:
///   yhat_t = l_{t-1} + phi b_{t-1} + s_{t-m},  e_t = y_t - yhat_t
///   l_t = l_{t-1} + phi b_{t-1} + alpha e_t
///   b_t = phi b_{t-1} + beta e_t
///   s_t = s_{t-m} + gamma e_t
/// Accepts the closed parameter box (alpha in [0,1], beta in [0,alpha],
/// gamma in [0,1-alpha], phi in [0.8,0.99] when damped); anything else is a ContractError.
Pass smooth_pass(std::span<const double> y, const Spec &spec, const Parameters &params, const States &initial);

/// Moves the mean of the seasonal states into the level so they sum to zero.
/// Point forecasts are unchanged.
States normalize_season(const States &states);

struct Fit {
    Spec spec;
    Parameters params;
    States initial;
    States final_states; // seasonal part renormalized to zero sum
    double sigma2 = 0.0;
    double sse = 0.0;
    double aic = 0.0;
    std::vector<double> residuals;
    bool converged = false;
    int iterations = 0;

    /// Smoothing parameters plus free initial states.
    int n_parameters() const;
};

struct FitOptions {
    optimize::SimplexOptions simplex{};
};

/// 10, plus two full periods for seasonal specs.
std::size_t minimum_length(const Spec &spec);

/// Minimizes the one-step SSE over the smoothing parameters (logistic
/// reparameterization keeps them inside the admissible box) with the initial
/// states solved by least squares at every trial point.
Fit fit(std::span<const double> y, const Spec &spec, const FitOptions &options = {});

struct Candidate {
    Spec spec;
    double aic = 0.0;
    bool converged = false;
};

struct AutoFit {
    Fit best;
    std::vector<Candidate> candidates;
};

/// Tries level-only, trend, damped trend, seasonal and trend+seasonal and
/// keeps the smallest AIC among converged fits. Seasonal candidates are
/// skipped when the series is shorter than minimum_length allows.
AutoFit auto_fit(std::span<const double> y, int period = 7, const FitOptions &options = {});

/// Horizon variance multipliers v_1..v_h, so that Var(e_{n+h|n}) = sigma2 * v_h.
std::vector<double> variance_multipliers(const Fit &fit, std::size_t h);

ForecastResult forecast(const Fit &fit, std::size_t h, Date first_date, bool allow_unconverged = false);

std::string to_json(const Fit &fit);

} // namespace epicast::ets
