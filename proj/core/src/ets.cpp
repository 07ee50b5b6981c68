#include "epicast/ets.hpp"

#include "epicast/errors.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace epicast::ets {

namespace {

constexpr double kPhiLow = 0.8;
constexpr double kPhiHigh = 0.99;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_spec(const Spec &spec) {
    if (spec.has_season() && spec.period < 2) {
        throw ContractError("seasonal ETS needs a period >= 2");
    }
    if (spec.damped && !spec.has_trend()) {
        throw ContractError("damping requires a trend component");
    }
}

void check_params(const Spec &spec, const Parameters &p) {
    const auto bad = [](const std::string &what) { throw ContractError("ETS parameter out of range: " + what); };
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) {
        bad("alpha=" + std::to_string(p.alpha));
    }
    if (spec.has_trend() && !(p.beta >= 0.0 && p.beta <= p.alpha)) {
        bad("beta=" + std::to_string(p.beta));
    }
    if (spec.has_season() && !(p.gamma >= 0.0 && p.gamma <= 1.0 - p.alpha)) {
        bad("gamma=" + std::to_string(p.gamma));
    }
    if (spec.damped && !(p.phi >= kPhiLow && p.phi <= kPhiHigh)) {
        bad("phi=" + std::to_string(p.phi));
    }
}

// Map an unconstrained simplex point onto the admissible box.
Parameters decode(const Spec &spec, const std::vector<double> &x) {
    Parameters p;
    std::size_t i = 0;
    p.alpha = logistic(x[i++]);
    p.beta = spec.has_trend() ? p.alpha * logistic(x[i++]) : 0.0;
    p.gamma = spec.has_season() ? (1.0 - p.alpha) * logistic(x[i++]) : 0.0;
    p.phi = spec.damped ? kPhiLow + (kPhiHigh - kPhiLow) * logistic(x[i++]) : 1.0;
    return p;
}

std::size_t n_smoothing(const Spec &spec) {
    return 1 + (spec.has_trend() ? 1 : 0) + (spec.has_season() ? 1 : 0) + (spec.damped ? 1 : 0);
}

// Free initial states: level, trend, and m-1 seasonal terms (the last one is
// minus the sum of the others).
std::size_t n_initial(const Spec &spec) {
    return 1 + (spec.has_trend() ? 1 : 0) + (spec.has_season() ? static_cast<std::size_t>(spec.period) - 1 : 0);
}

States states_from_vector(const Spec &spec, const Eigen::VectorXd &x0) {
    States s;
    Eigen::Index i = 0;
    s.level = x0[i++];
    s.trend = spec.has_trend() ? x0[i++] : 0.0;
    if (spec.has_season()) {
        const auto m = static_cast<std::size_t>(spec.period);
        s.season.assign(m, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j + 1 < m; ++j) {
            s.season[j] = x0[i++];
            sum += s.season[j];
        }
        s.season[m - 1] = -sum;
    }
    return s;
}

// Residuals are affine in the free initial states for fixed smoothing
// parameters: e = e(0) - X x0. Solve for the x0 minimizing ||e||^2.
Eigen::VectorXd profile_initial_states(std::span<const double> y, const Spec &spec, const Parameters &params) {
    const auto n = static_cast<Eigen::Index>(y.size());
    const auto k = static_cast<Eigen::Index>(n_initial(spec));

    const Eigen::VectorXd zero_state = Eigen::VectorXd::Zero(k);
    const auto base = smooth_pass(y, spec, params, states_from_vector(spec, zero_state)).residuals;
    const std::vector<double> zeros(y.size(), 0.0);

    Eigen::MatrixXd X(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(k);
        unit[j] = 1.0;
        const auto response = smooth_pass(zeros, spec, params, states_from_vector(spec, unit)).residuals;
        for (Eigen::Index t = 0; t < n; ++t) {
            X(t, j) = -response[static_cast<std::size_t>(t)];
        }
    }
    Eigen::VectorXd b(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        b[t] = base[static_cast<std::size_t>(t)];
    }
    return X.colPivHouseholderQr().solve(b);
}

// Starting simplex point: the midpoint-ish values the transforms map to alpha=0.5 etc.
std::vector<double> start_point(const Spec &spec) {
    std::vector<double> x;
    x.push_back(0.0);               // alpha 0.5
    if (spec.has_trend()) {
        x.push_back(-1.5);          // beta ~ 0.09
    }
    if (spec.has_season()) {
        x.push_back(-1.5);          // gamma ~ 0.09
    }
    if (spec.damped) {
        x.push_back(1.0);           // phi ~ 0.94
    }
    return x;
}

} // namespace

std::string Spec::to_string() const {
    std::string s = "ETS(A,";
    s += has_trend() ? (damped ? "Ad" : "A") : "N";
    s += ",";
    s += has_season() ? "A" : "N";
    s += ")";
    if (has_season()) {
        s += "[" + std::to_string(period) + "]";
    }
    return s;
}

int Fit::n_parameters() const { return static_cast<int>(n_smoothing(spec) + n_initial(spec)); }

Pass smooth_pass(std::span<const double> y, const Spec &spec, const Parameters &params, const States &initial) {
    check_spec(spec);
    check_params(spec, params);
    const auto m = spec.has_season() ? static_cast<std::size_t>(spec.period) : 0;
    if (spec.has_season() && initial.season.size() != m) {
        throw ContractError("seasonal ETS needs " + std::to_string(m) + " initial seasonal states");
    }
    const double phi = spec.damped ? params.phi : 1.0;
    const double beta = spec.has_trend() ? params.beta : 0.0;

    Pass out;
    out.fitted.resize(y.size());
    out.residuals.resize(y.size());
    double level = initial.level;
    double trend = spec.has_trend() ? initial.trend : 0.0;
    std::vector<double> season = initial.season;

    for (std::size_t t = 0; t < y.size(); ++t) {
        const double s_old = m > 0 ? season[t % m] : 0.0;
        const double damped_trend = phi * trend;
        const double pred = level + damped_trend + s_old;
        const double e = y[t] - pred;
        level = level + damped_trend + params.alpha * e;
        trend = damped_trend + beta * e;
        if (m > 0) {
            season[t % m] = s_old + params.gamma * e;
        }
        out.fitted[t] = pred;
        out.residuals[t] = e;
        out.sse += e * e;
    }

    out.final_states.level = level;
    out.final_states.trend = trend;
    if (m > 0) {
        // Rotate so that index 0 is s_{n-m}.
        out.final_states.season.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            out.final_states.season[j] = season[(y.size() + j) % m];
        }
    }
    return out;
}

States normalize_season(const States &states) {
    States out = states;
    if (out.season.empty()) {
        return out;
    }
    const double shift = std::accumulate(out.season.begin(), out.season.end(), 0.0) /
                         static_cast<double>(out.season.size());
    for (double &s : out.season) {
        s -= shift;
    }
    out.level += shift;
    return out;
}

std::size_t minimum_length(const Spec &spec) {
    return spec.has_season() ? 10 + 2 * static_cast<std::size_t>(spec.period) : 10;
}

Fit fit(std::span<const double> y, const Spec &spec, const FitOptions &options) {
    check_spec(spec);
    if (y.size() < minimum_length(spec)) {
        throw ContractError(spec.to_string() + " needs at least " + std::to_string(minimum_length(spec)) +
                            " observations, got " + std::to_string(y.size()));
    }

    // Work on a standardized copy; smoothing parameters are scale-free and
    // the states map back affinely.
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double scale = 0.0;
    for (double v : y) {
        scale += (v - mean) * (v - mean);
    }
    scale = std::sqrt(scale / static_cast<double>(y.size()));
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        scale = 1.0;
    }
    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        z[i] = (y[i] - mean) / scale;
    }

    const auto objective = [&](const std::vector<double> &x) {
        const Parameters params = decode(spec, x);
        const Eigen::VectorXd x0 = profile_initial_states(z, spec, params);
        if (!x0.allFinite()) {
            return std::numeric_limits<double>::infinity();
        }
        return smooth_pass(z, spec, params, states_from_vector(spec, x0)).sse;
    };
    const auto result = optimize::nelder_mead(objective, start_point(spec), options.simplex);

    Fit out;
    out.spec = spec;
    out.params = decode(spec, result.x);
    const States standardized = states_from_vector(spec, profile_initial_states(z, spec, out.params));
    out.initial.level = mean + scale * standardized.level;
    out.initial.trend = scale * standardized.trend;
    out.initial.season = standardized.season;
    for (double &s : out.initial.season) {
        s *= scale;
    }

    const Pass pass = smooth_pass(y, spec, out.params, out.initial);
    out.final_states = normalize_season(pass.final_states);
    out.residuals = pass.residuals;
    out.sse = pass.sse;
    const auto n = static_cast<double>(y.size());
    out.sigma2 = out.sse / n;
    out.aic = n * std::log(std::max(out.sigma2, std::numeric_limits<double>::min())) + 2.0 * (out.n_parameters() + 1);
    out.iterations = result.iterations;
    out.converged = result.converged && std::isfinite(result.value) && std::isfinite(out.sse);
    return out;
}

AutoFit auto_fit(std::span<const double> y, int period, const FitOptions &options) {
    std::vector<Spec> specs{
        {Trend::none, Season::none, period, false},
        {Trend::additive, Season::none, period, false},
        {Trend::additive, Season::none, period, true},
    };
    if (period >= 2 && y.size() >= minimum_length({Trend::none, Season::additive, period, false})) {
        specs.push_back({Trend::none, Season::additive, period, false});
        specs.push_back({Trend::additive, Season::additive, period, false});
    }

    AutoFit out;
    bool have_best = false;
    std::string attempted;
    for (const auto &spec : specs) {
        attempted += (attempted.empty() ? "" : " ") + spec.to_string();
        if (y.size() < minimum_length(spec)) {
            out.candidates.push_back({spec, std::numeric_limits<double>::quiet_NaN(), false});
            continue;
        }
        Fit f = fit(y, spec, options);
        out.candidates.push_back({spec, f.aic, f.converged});
        if (f.converged && (!have_best || f.aic < out.best.aic)) {
            out.best = std::move(f);
            have_best = true;
        }
    }
    if (!have_best) {
        throw NumericalError("no ETS candidate converged; attempted " + attempted);
    }
    return out;
}

std::vector<double> variance_multipliers(const Fit &fit, std::size_t h) {
    const Spec &spec = fit.spec;
    const double phi = spec.damped ? fit.params.phi : 1.0;
    const auto m = static_cast<std::size_t>(spec.period);
    std::vector<double> v(h, 1.0);
    double accumulated = 1.0;
    double phi_sum = 0.0;  // phi + phi^2 + ... + phi^j
    double phi_pow = 1.0;
    for (std::size_t j = 1; j < h; ++j) {
        phi_pow *= phi;
        phi_sum += phi_pow;
        double c = fit.params.alpha;
        if (spec.has_trend()) {
            c += fit.params.beta * phi_sum;
        }
        if (spec.has_season() && j % m == 0) {
            c += fit.params.gamma;
        }
        accumulated += c * c;
        v[j] = accumulated;
    }
    return v;
}

ForecastResult forecast(const Fit &fit, std::size_t h, Date first_date, bool allow_unconverged) {
    if (h == 0) {
        throw ContractError("forecast horizon must be >= 1");
    }
    if (!fit.converged && !allow_unconverged) {
        throw ContractError("refusing to forecast from an unconverged " + fit.spec.to_string() + " fit");
    }
    const Spec &spec = fit.spec;
    const double phi = spec.damped ? fit.params.phi : 1.0;
    const auto m = static_cast<std::size_t>(spec.period);
    const auto v = variance_multipliers(fit, h);
    const double sigma = std::sqrt(std::max(fit.sigma2, 0.0));

    ForecastResult out;
    out.model_name = "ets" + spec.to_string().substr(3);
    double phi_sum = 0.0;
    double phi_pow = 1.0;
    for (std::size_t step = 1; step <= h; ++step) {
        phi_pow *= phi;
        phi_sum += phi_pow;
        double point = fit.final_states.level;
        if (spec.has_trend()) {
            point += phi_sum * fit.final_states.trend;
        }
        if (spec.has_season()) {
            // s_{n+h-m*ceil(h/m)}: final season[j] is s_{n-m+j}.
            point += fit.final_states.season[(step - 1) % m];
        }
        const double se = sigma * std::sqrt(v[step - 1]);
        out.horizon_dates.push_back(add_days(first_date, static_cast<long long>(step - 1)));
        out.point.push_back(point);
        out.lower80.push_back(std::min(point, std::max(0.0, point - kZ80 * se)));
        out.upper80.push_back(point + kZ80 * se);
        out.lower95.push_back(std::min(point, std::max(0.0, point - kZ95 * se)));
        out.upper95.push_back(point + kZ95 * se);
    }
    return out;
}

std::string to_json(const Fit &fit) {
    const nlohmann::ordered_json j{
        {"spec",
         {{"trend", fit.spec.has_trend() ? "additive" : "none"},
          {"seasonal", fit.spec.has_season() ? "additive" : "none"},
          {"period", fit.spec.period},
          {"damped", fit.spec.damped}}},
        {"parameters",
         {{"alpha", fit.params.alpha}, {"beta", fit.params.beta}, {"gamma", fit.params.gamma}, {"phi", fit.params.phi}}},
        {"initial_states",
         {{"level", fit.initial.level}, {"trend", fit.initial.trend}, {"season", fit.initial.season}}},
        {"sigma2", fit.sigma2},
        {"aic", fit.aic},
        {"converged", fit.converged}};
    return j.dump();
}

} // namespace epicast::ets
