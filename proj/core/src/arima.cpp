#include "epicast/arima.hpp"

#include "epicast/errors.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace epicast::arima {

namespace {

void check_order(const Order &order) {
    if (order.p < 0 || order.d < 0 || order.q < 0 || order.P < 0 || order.D < 0 || order.Q < 0) {
        throw ContractError("ARIMA orders must be non-negative: " + order.to_string());
    }
    if (order.period < 1) {
        throw ContractError("season length must be >= 1");
    }
    if ((order.P > 0 || order.Q > 0 || order.D > 0) && order.period < 2) {
        throw ContractError("seasonal terms need a season length >= 2: " + order.to_string());
    }
    if (order.n_coefficients() > 10) {
        throw ContractError("p+q+P+Q must not exceed 10: " + order.to_string());
    }
}

struct Coefficients {
    std::span<const double> phi, theta, seasonal_phi, seasonal_theta;
    double intercept = 0.0;
};

Coefficients unpack(std::span<const double> params, const Order &order) {
    const auto p = static_cast<std::size_t>(order.p);
    const auto q = static_cast<std::size_t>(order.q);
    const auto P = static_cast<std::size_t>(order.P);
    const auto Q = static_cast<std::size_t>(order.Q);
    Coefficients c;
    c.phi = params.subspan(0, p);
    c.theta = params.subspan(p, q);
    c.seasonal_phi = params.subspan(p + q, P);
    c.seasonal_theta = params.subspan(p + q + P, Q);
    c.intercept = params.size() > p + q + P + Q ? params[p + q + P + Q] : 0.0;
    return c;
}

// One step of the recursion given all earlier y and e; negative indices read as 0.
double innovation_free_prediction(const Coefficients &c, const std::vector<double> &y, const std::vector<double> &e,
                                  std::size_t t, std::size_t period) {
    const auto at = [t](const std::vector<double> &v, std::size_t lag) { return lag <= t ? v[t - lag] : 0.0; };
    double pred = c.intercept;
    for (std::size_t i = 0; i < c.phi.size(); ++i) {
        pred += c.phi[i] * at(y, i + 1);
    }
    for (std::size_t j = 0; j < c.seasonal_phi.size(); ++j) {
        pred += c.seasonal_phi[j] * at(y, (j + 1) * period);
    }
    for (std::size_t k = 0; k < c.theta.size(); ++k) {
        pred += c.theta[k] * at(e, k + 1);
    }
    for (std::size_t m = 0; m < c.seasonal_theta.size(); ++m) {
        pred += c.seasonal_theta[m] * at(e, (m + 1) * period);
    }
    return pred;
}

// Coefficients a_1..a_n of the AR side written as x_t = sum a_i x_{t-i} (additive seasonal terms).
std::vector<double> ar_lag_coefficients(std::span<const double> phi, std::span<const double> seasonal_phi,
                                        std::size_t period) {
    const std::size_t degree = std::max(phi.size(), seasonal_phi.size() * period);
    std::vector<double> a(degree, 0.0);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        a[i] += phi[i];
    }
    for (std::size_t j = 0; j < seasonal_phi.size(); ++j) {
        a[(j + 1) * period - 1] += seasonal_phi[j];
    }
    return a;
}

// Step-down (Schur-Cohn) test on 1 - sum a_i z^i: every reflection coefficient
// strictly inside (-1, 1). With radius r the roots must lie outside |z| = r,
// tested by substituting z -> r z.
bool ar_is_stationary(std::vector<double> a, double radius = 1.0) {
    double power = 1.0;
    for (double &v : a) {
        power *= radius;
        v *= power;
    }
    while (!a.empty() && a.back() == 0.0) {
        a.pop_back();
    }
    for (std::size_t m = a.size(); m > 0; --m) {
        const double k = a[m - 1];
        if (!(std::abs(k) < 1.0)) {
            return false;
        }
        const double denom = 1.0 - k * k;
        std::vector<double> next(m - 1);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            next[i] = (a[i] + k * a[m - 2 - i]) / denom;
        }
        a = std::move(next);
    }
    return true;
}

// Root-modulus margin shared by the in-optimizer guards and the final checks.
constexpr double kRootMargin = 1.001;

double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double ar_sum(const Fit &fit) {
    return std::accumulate(fit.phi.begin(), fit.phi.end(), 0.0) +
           std::accumulate(fit.seasonal_phi.begin(), fit.seasonal_phi.end(), 0.0);
}

// Multiplies polynomials given as coefficient vectors in ascending powers.
std::vector<double> poly_mul(const std::vector<double> &a, const std::vector<double> &b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

double variance_after(std::span<const double> y, int d) {
    const auto w = difference(y, d, 0, 1);
    const double m = mean_of(w);
    double ss = 0.0;
    for (double v : w) {
        ss += (v - m) * (v - m);
    }
    return ss / static_cast<double>(w.size());
}

} // namespace

std::string Order::to_string() const {
    std::string s = "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
    if (P > 0 || D > 0 || Q > 0) {
        s += "(" + std::to_string(P) + "," + std::to_string(D) + "," + std::to_string(Q) + ")[" +
             std::to_string(period) + "]";
    }
    return s;
}

std::vector<double> pack_parameters(const Fit &fit) {
    std::vector<double> params;
    params.insert(params.end(), fit.phi.begin(), fit.phi.end());
    params.insert(params.end(), fit.theta.begin(), fit.theta.end());
    params.insert(params.end(), fit.seasonal_phi.begin(), fit.seasonal_phi.end());
    params.insert(params.end(), fit.seasonal_theta.begin(), fit.seasonal_theta.end());
    params.push_back(fit.intercept);
    return params;
}

std::vector<double> css_residuals(std::span<const double> params, std::span<const double> y, const Order &order) {
    check_order(order);
    const auto k = static_cast<std::size_t>(order.n_coefficients());
    if (params.size() != k + 1) {
        throw ContractError("css parameters: expected " + std::to_string(k + 1) + " values, got " +
                            std::to_string(params.size()));
    }
    for (double v : params) {
        if (!std::isfinite(v)) {
            throw ContractError("css parameters must be finite");
        }
    }
    const Coefficients c = unpack(params, order);
    const std::vector<double> ys(y.begin(), y.end());
    std::vector<double> e(ys.size(), 0.0);
    const auto period = static_cast<std::size_t>(order.period);
    for (std::size_t t = 0; t < ys.size(); ++t) {
        e[t] = ys[t] - innovation_free_prediction(c, ys, e, t, period);
    }
    return e;
}

double css_objective(std::span<const double> params, std::span<const double> y, const Order &order) {
    const auto e = css_residuals(params, y, order);
    double sse = 0.0;
    for (double v : e) {
        sse += v * v;
    }
    return sse;
}

std::vector<double> ar_root_moduli(const Fit &fit) {
    auto a = ar_lag_coefficients(fit.phi, fit.seasonal_phi, static_cast<std::size_t>(fit.order.period));
    while (!a.empty() && a.back() == 0.0) {
        a.pop_back();
    }
    const auto n = static_cast<Eigen::Index>(a.size());
    if (n == 0) {
        return {};
    }
    // Roots of 1 - sum a_i z^i are reciprocals of the eigenvalues of the
    // companion matrix of z^n - a_1 z^{n-1} - ... - a_n.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        companion(0, i) = a[static_cast<std::size_t>(i)];
    }
    for (Eigen::Index i = 1; i < n; ++i) {
        companion(i, i - 1) = 1.0;
    }
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    std::vector<double> moduli;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lambda = std::abs(solver.eigenvalues()[i]);
        moduli.push_back(lambda == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / lambda);
    }
    std::sort(moduli.begin(), moduli.end());
    return moduli;
}

namespace {

// Inverse roots of 1 - sum a_i z^i: eigenvalues of the companion matrix.
std::vector<std::complex<double>> inverse_roots(std::vector<double> a) {
    while (!a.empty() && a.back() == 0.0) {
        a.pop_back();
    }
    const auto n = static_cast<Eigen::Index>(a.size());
    if (n == 0) {
        return {};
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        companion(0, i) = a[static_cast<std::size_t>(i)];
    }
    for (Eigen::Index i = 1; i < n; ++i) {
        companion(i, i - 1) = 1.0;
    }
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const auto values = solver.eigenvalues();
    return {values.data(), values.data() + values.size()};
}

} // namespace

double common_factor_distance(const Fit &fit) {
    const auto period = static_cast<std::size_t>(fit.order.period);
    const auto ar = inverse_roots(ar_lag_coefficients(fit.phi, fit.seasonal_phi, period));
    auto ma_coefficients = ar_lag_coefficients(fit.theta, fit.seasonal_theta, period);
    for (double &v : ma_coefficients) {
        v = -v;
    }
    const auto ma = inverse_roots(std::move(ma_coefficients));
    double best = std::numeric_limits<double>::infinity();
    for (const auto &a : ar) {
        for (const auto &m : ma) {
            best = std::min(best, std::abs(a - m));
        }
    }
    return best;
}

bool is_stationary(const Fit &fit, double min_modulus) {
    for (double m : ar_root_moduli(fit)) {
        if (!(m > min_modulus)) {
            return false;
        }
    }
    return true;
}

std::vector<double> ma_root_moduli(const Fit &fit) {
    Fit mirrored = fit;
    mirrored.phi.clear();
    mirrored.seasonal_phi.clear();
    for (double t : fit.theta) {
        mirrored.phi.push_back(-t);
    }
    for (double t : fit.seasonal_theta) {
        mirrored.seasonal_phi.push_back(-t);
    }
    return ar_root_moduli(mirrored);
}

bool is_invertible(const Fit &fit, double min_modulus) {
    for (double m : ma_root_moduli(fit)) {
        if (!(m > min_modulus)) {
            return false;
        }
    }
    return true;
}

std::size_t minimum_length(const Order &order) {
    return static_cast<std::size_t>(3 * order.n_coefficients() + order.lost_points() + 10);
}

Fit fit(std::span<const double> y, const Order &order, const FitOptions &options) {
    check_order(order);
    if (y.size() < minimum_length(order)) {
        throw ContractError("ARIMA" + order.to_string() + " needs at least " + std::to_string(minimum_length(order)) +
                            " observations, got " + std::to_string(y.size()));
    }
    const std::vector<double> w = difference(y, order.d, order.D, order.period);

    Fit out;
    out.order = order;
    out.has_intercept = options.include_intercept;
    out.center = options.include_intercept ? mean_of(w) : 0.0;

    // Optimize on a centred, unit-scale copy so the simplex tolerances mean
    // the same thing for every series.
    double scale = 0.0;
    for (double v : w) {
        scale += (v - out.center) * (v - out.center);
    }
    scale = std::sqrt(scale / static_cast<double>(w.size()));
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        scale = 1.0;
    }
    std::vector<double> z(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        z[i] = (w[i] - out.center) / scale;
    }

    const auto k = static_cast<std::size_t>(order.n_coefficients());
    const std::size_t n_free = k + (options.include_intercept ? 1 : 0);
    const auto period = static_cast<std::size_t>(order.period);
    const auto p = static_cast<std::size_t>(order.p);
    const auto q = static_cast<std::size_t>(order.q);
    const auto P = static_cast<std::size_t>(order.P);
    const auto Q = static_cast<std::size_t>(order.Q);

    std::vector<double> params(k + 1, 0.0);
    const auto objective = [&](const std::vector<double> &x) {
        std::copy(x.begin(), x.end(), params.begin());
        if (!options.include_intercept) {
            params[k] = 0.0;
        }
        const std::span<const double> all(params);
        if (options.enforce_stationarity && (p > 0 || P > 0)) {
            if (!ar_is_stationary(ar_lag_coefficients(all.subspan(0, p), all.subspan(p + q, P), period),
                                   kRootMargin)) {
                return std::numeric_limits<double>::infinity();
            }
        }
        if (options.enforce_invertibility && (q > 0 || Q > 0)) {
            auto a = ar_lag_coefficients(all.subspan(p, q), all.subspan(p + q + P, Q), period);
            for (double &v : a) {
                v = -v;
            }
            if (!ar_is_stationary(std::move(a), kRootMargin)) {
                return std::numeric_limits<double>::infinity();
            }
        }
        for (double v : params) {
            if (!std::isfinite(v)) {
                return std::numeric_limits<double>::infinity();
            }
        }
        return css_objective(params, z, order);
    };

    const auto result = optimize::nelder_mead(objective, std::vector<double>(n_free, 0.0), options.simplex);
    std::copy(result.x.begin(), result.x.end(), params.begin());
    if (!options.include_intercept) {
        params[k] = 0.0;
    }

    const Coefficients c = unpack(params, order);
    out.phi.assign(c.phi.begin(), c.phi.end());
    out.theta.assign(c.theta.begin(), c.theta.end());
    out.seasonal_phi.assign(c.seasonal_phi.begin(), c.seasonal_phi.end());
    out.seasonal_theta.assign(c.seasonal_theta.begin(), c.seasonal_theta.end());
    out.intercept = options.include_intercept ? scale * c.intercept + out.center * (1.0 - ar_sum(out)) : 0.0;

    out.residuals = css_residuals(params, z, order);
    out.sse = 0.0;
    for (double &e : out.residuals) {
        e *= scale;
        out.sse += e * e;
    }
    const auto n_eff = static_cast<double>(w.size());
    out.sigma2 = out.sse / n_eff;
    const double floor = std::numeric_limits<double>::min();
    out.aic = n_eff * std::log(std::max(out.sigma2, floor)) + 2.0 * (out.n_parameters() + 1);
    out.iterations = result.iterations;
    out.converged = result.converged && std::isfinite(result.value);
    if (options.enforce_stationarity && !is_stationary(out, kRootMargin * (1.0 - 1e-9))) {
        out.converged = false;
    }
    if (options.enforce_invertibility && !is_invertible(out, kRootMargin * (1.0 - 1e-9))) {
        out.converged = false;
    }
    return out;
}

int select_difference_order(std::span<const double> y) {
    int best = 0;
    double best_var = std::numeric_limits<double>::infinity();
    for (int d = 0; d <= 2; ++d) {
        if (y.size() <= static_cast<std::size_t>(d) + 1) {
            break;
        }
        const double v = variance_after(y, d);
        // Strictly smaller wins, so ties keep the lower order.
        if (v < best_var * (1.0 - 1e-12) || (best_var == std::numeric_limits<double>::infinity())) {
            best_var = v;
            best = d;
        }
    }
    return best;
}

AutoFit auto_fit(std::span<const double> y, const AutoOptions &options) {
    if (options.seasonal && options.period < 2) {
        throw ContractError("seasonal auto_fit needs a season length >= 2");
    }
    const int d = select_difference_order(y);
    AutoFit out;
    bool have_best = false;
    std::string attempted;

    const auto better = [](const Fit &a, const Fit &b) {
        if (a.aic != b.aic) {
            return a.aic < b.aic;
        }
        if (a.n_parameters() != b.n_parameters()) {
            return a.n_parameters() < b.n_parameters();
        }
        return std::tie(a.order.p, a.order.q, a.order.P, a.order.Q) <
               std::tie(b.order.p, b.order.q, b.order.P, b.order.Q);
    };

    const int max_seasonal = options.seasonal ? 1 : 0;
    for (int D = 0; D <= max_seasonal; ++D) {
        for (int p = 0; p <= options.max_p; ++p) {
            for (int q = 0; q <= options.max_q; ++q) {
                for (int P = 0; P <= max_seasonal; ++P) {
                    for (int Q = 0; Q <= max_seasonal; ++Q) {
                        Order order{p, d, q, P, D, Q, options.seasonal ? options.period : 1};
                        attempted += (attempted.empty() ? "" : " ") + order.to_string();
                        Candidate candidate{order, std::numeric_limits<double>::quiet_NaN(), false, false};
                        if (y.size() < minimum_length(order)) {
                            out.candidates.push_back(candidate);
                            continue;
                        }
                        Fit f = fit(y, order, options.fit);
                        candidate.aic = f.aic;
                        candidate.converged = f.converged;
                        candidate.admissible =
                            f.converged && common_factor_distance(f) >= options.min_factor_distance;
                        out.candidates.push_back(candidate);
                        if (candidate.admissible && (!have_best || better(f, out.best))) {
                            out.best = std::move(f);
                            have_best = true;
                        }
                    }
                }
            }
        }
    }
    if (!have_best) {
        throw NumericalError("no ARIMA candidate converged without redundant AR/MA factors; attempted " +
                             attempted);
    }
    return out;
}

std::vector<double> psi_weights(const Fit &fit, std::size_t h) {
    const auto period = static_cast<std::size_t>(fit.order.period);
    // AR side including the differencing factors, as 1 - sum a_i B^i.
    std::vector<double> ar{1.0};
    for (double a_i : ar_lag_coefficients(fit.phi, fit.seasonal_phi, period)) {
        ar.push_back(-a_i);
    }
    for (int i = 0; i < fit.order.d; ++i) {
        ar = poly_mul(ar, {1.0, -1.0});
    }
    for (int i = 0; i < fit.order.D; ++i) {
        std::vector<double> seasonal(period + 1, 0.0);
        seasonal.front() = 1.0;
        seasonal.back() = -1.0;
        ar = poly_mul(ar, seasonal);
    }
    std::vector<double> ma{1.0};
    for (std::size_t k = 0; k < fit.theta.size(); ++k) {
        ma.resize(std::max(ma.size(), k + 2), 0.0);
        ma[k + 1] += fit.theta[k];
    }
    for (std::size_t m = 0; m < fit.seasonal_theta.size(); ++m) {
        const std::size_t lag = (m + 1) * period;
        ma.resize(std::max(ma.size(), lag + 1), 0.0);
        ma[lag] += fit.seasonal_theta[m];
    }

    std::vector<double> psi(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
        double v = j < ma.size() ? ma[j] : 0.0;
        for (std::size_t i = 1; i <= j && i < ar.size(); ++i) {
            v -= ar[i] * psi[j - i];
        }
        psi[j] = v;
    }
    return psi;
}

ForecastResult forecast(const Fit &fit, std::span<const double> history, std::size_t h, Date first_date,
                        bool allow_unconverged) {
    if (h == 0) {
        throw ContractError("forecast horizon must be >= 1");
    }
    if (!fit.converged && !allow_unconverged) {
        throw ContractError("refusing to forecast from an unconverged ARIMA" + fit.order.to_string() + " fit");
    }
    const Order &order = fit.order;
    const std::vector<double> w = difference(history, order.d, order.D, order.period);
    const auto period = static_cast<std::size_t>(order.period);

    std::vector<double> params = pack_parameters(fit);
    params.back() = fit.intercept - fit.center * (1.0 - ar_sum(fit));
    std::vector<double> z(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        z[i] = w[i] - fit.center;
    }
    std::vector<double> e = css_residuals(params, z, order);

    const Coefficients c = unpack(params, order);
    for (std::size_t step = 0; step < h; ++step) {
        const std::size_t t = z.size();
        z.push_back(0.0);
        e.push_back(0.0);
        z[t] = innovation_free_prediction(c, z, e, t, period);
    }
    std::vector<double> diffs(z.end() - static_cast<std::ptrdiff_t>(h), z.end());
    for (double &v : diffs) {
        v += fit.center;
    }

    ForecastResult out;
    out.model_name = "arima" + order.to_string();
    out.point = integrate(diffs, history, order.d, order.D, order.period);

    const auto psi = psi_weights(fit, h);
    const double sigma = std::sqrt(std::max(fit.sigma2, 0.0));
    double cumulative = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
        cumulative += psi[i] * psi[i];
        const double se = sigma * std::sqrt(cumulative);
        const double point = out.point[i];
        out.horizon_dates.push_back(add_days(first_date, static_cast<long long>(i)));
        out.lower80.push_back(std::min(point, std::max(0.0, point - kZ80 * se)));
        out.upper80.push_back(point + kZ80 * se);
        out.lower95.push_back(std::min(point, std::max(0.0, point - kZ95 * se)));
        out.upper95.push_back(point + kZ95 * se);
    }
    return out;
}

std::string to_json(const Fit &fit) {
    const nlohmann::ordered_json j{
        {"order",
         {{"p", fit.order.p},
          {"d", fit.order.d},
          {"q", fit.order.q},
          {"P", fit.order.P},
          {"D", fit.order.D},
          {"Q", fit.order.Q},
          {"period", fit.order.period}}},
        {"coefficients",
         {{"phi", fit.phi},
          {"theta", fit.theta},
          {"seasonal_phi", fit.seasonal_phi},
          {"seasonal_theta", fit.seasonal_theta},
          {"intercept", fit.intercept}}},
        {"sigma2", fit.sigma2},
        {"aic", fit.aic},
        {"converged", fit.converged}};
    return j.dump();
}

} // namespace epicast::arima
