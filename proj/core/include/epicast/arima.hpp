#pragma once

#include "epicast/date.hpp"
#include "epicast/optimize.hpp"
#include "epicast/series.hpp"

#include <span>
#include <string>
#include <vector>

namespace epicast::arima {

/// Non-seasonal (p,d,q) and seasonal (P,D,Q)_s orders. period == 1 means non-seasonal.
struct Order {
    int p = 0;
    int d = 0;
    int q = 0;
    int P = 0;
    int D = 0;
    int Q = 0;
    int period = 1;

    int n_coefficients() const { return p + q + P + Q; }
    int lost_points() const { return d + D * period; }
    std::string to_string() const;

    auto operator<=>(const Order &) const = default;
};

/// Model y_t = c + sum phi_i y_{t-i} + sum Phi_j y_{t-j*s} + e_t + sum theta_k e_{t-k} + sum Theta_m e_{t-m*s}
/// on the differenced series. `center` is the constant subtracted from the
/// differenced series before the recursion ran (pre-sample values are zero
/// relative to it).
struct Fit {
    Order order;
    std::vector<double> phi;
    std::vector<double> theta;
    std::vector<double> seasonal_phi;
    std::vector<double> seasonal_theta;
    double intercept = 0.0;
    bool has_intercept = true;
    double center = 0.0;
    double sigma2 = 0.0;
    double sse = 0.0;
    double aic = 0.0;
    std::vector<double> residuals;
    bool converged = false;
    int iterations = 0;

    int n_parameters() const { return order.n_coefficients() + (has_intercept ? 1 : 0); }
};

struct FitOptions {
    bool include_intercept = true;
    bool enforce_stationarity = true;
    bool enforce_invertibility = true; // MA roots outside the unit circle
    optimize::SimplexOptions simplex{};
};

/// Packs [phi..., theta..., Phi..., Theta..., intercept] for css_objective.
std::vector<double> pack_parameters(const Fit &fit);

/// One-step innovations of the recursion with pre-sample y and e taken as 0.
/// `params` is [phi(p), theta(q), Phi(P), Theta(Q), intercept].
std::vector<double> css_residuals(std::span<const double> params, std::span<const double> y, const Order &order);

/// Conditional sum of squares: sum of squared css_residuals.
double css_objective(std::span<const double> params, std::span<const double> y, const Order &order);

/// Moduli of the roots of 1 - sum phi_i z^i - sum Phi_j z^{j*s}.
std::vector<double> ar_root_moduli(const Fit &fit);
bool is_stationary(const Fit &fit, double min_modulus = 1.001);

/// Moduli of the roots of 1 + sum theta_k z^k + sum Theta_m z^{m*s}.
std::vector<double> ma_root_moduli(const Fit &fit);
bool is_invertible(const Fit &fit, double min_modulus = 1.001);

/// Smallest distance between an inverse AR root and an inverse MA root
/// (seasonal lags included); +inf when either side is empty. Near zero means
/// the two polynomials nearly share a factor, so the model is redundant.
double common_factor_distance(const Fit &fit);

/// Minimum series length fit() accepts for an order.
std::size_t minimum_length(const Order &order);

/// Conditional-sum-of-squares estimate by Nelder-Mead. Never throws on
/// non-convergence: check `converged`.
Fit fit(std::span<const double> y, const Order &order, const FitOptions &options = {});

struct AutoOptions {
    bool seasonal = false;
    int period = 7;
    int max_p = 3;
    int max_q = 3;
    // Candidates whose AR and MA sides share a near-common factor are not
    // selected (see common_factor_distance).
    double min_factor_distance = 0.1;
    FitOptions fit{};
};

struct Candidate {
    Order order;
    double aic = 0.0;
    bool converged = false;
    bool admissible = false; // converged and eligible for selection
};

struct AutoFit {
    Fit best;
    std::vector<Candidate> candidates;
};

/// d from {0,1,2} with the smallest variance after differencing.
int select_difference_order(std::span<const double> y);

/// AIC grid search over admissible candidates; throws NumericalError listing
/// the attempted orders when none is admissible.
AutoFit auto_fit(std::span<const double> y, const AutoOptions &options = {});

/// MA(infinity) weights psi_0..psi_{h-1}, differencing included. psi_0 = 1.
std::vector<double> psi_weights(const Fit &fit, std::size_t h);

/// Forecasts `h` steps past the end of `history` (the original, undifferenced
/// series). Lower bounds are clamped at zero. Throws ContractError when the
/// fit did not converge unless `allow_unconverged` is set.
ForecastResult forecast(const Fit &fit, std::span<const double> history, std::size_t h, Date first_date,
                        bool allow_unconverged = false);

std::string to_json(const Fit &fit);

} // namespace epicast::arima
