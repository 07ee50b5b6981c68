#include "epicast/optimize.hpp"

#include "epicast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace epicast::optimize {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

SimplexResult run_simplex(const Objective &raw, const std::vector<double> &start, const SimplexOptions &options,
                          double step) {
    const std::size_t n = start.size();
    SimplexResult result;
    auto f = [&](const std::vector<double> &x) {
        ++result.evaluations;
        const double v = raw(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    if (n == 0) {
        result.x = start;
        result.value = f(start);
        result.converged = true;
        return result;
    }

    std::vector<std::vector<double>> simplex(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += start[i] != 0.0 ? step * std::max(1.0, std::abs(start[i])) : step;
    }
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        values[i] = f(simplex[i]);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);

    auto diameter = [&](std::size_t best) {
        double d = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            double dist = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double diff = simplex[i][k] - simplex[best][k];
                dist += diff * diff;
            }
            d = std::max(d, std::sqrt(dist));
        }
        return d;
    };

    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
        std::iota(order.begin(), order.end(), 0);
        // Stable ordering keeps ties deterministic.
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[n - 1];

        if (diameter(best) < options.diameter_tol) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t k = 0; k < n; ++k) {
                centroid[k] += simplex[i][k];
            }
        }
        for (double &c : centroid) {
            c /= static_cast<double>(n);
        }

        for (std::size_t k = 0; k < n; ++k) {
            trial[k] = centroid[k] + kReflect * (centroid[k] - simplex[worst][k]);
        }
        const double reflected = f(trial);

        if (reflected < values[best]) {
            for (std::size_t k = 0; k < n; ++k) {
                trial2[k] = centroid[k] + kExpand * (trial[k] - centroid[k]);
            }
            const double expanded = f(trial2);
            if (expanded < reflected) {
                simplex[worst] = trial2;
                values[worst] = expanded;
            } else {
                simplex[worst] = trial;
                values[worst] = reflected;
            }
            continue;
        }
        if (reflected < values[second_worst]) {
            simplex[worst] = trial;
            values[worst] = reflected;
            continue;
        }

        const bool outside = reflected < values[worst];
        for (std::size_t k = 0; k < n; ++k) {
            trial2[k] = outside ? centroid[k] + kContract * (trial[k] - centroid[k])
                                : centroid[k] + kContract * (simplex[worst][k] - centroid[k]);
        }
        const double contracted = f(trial2);
        if (contracted < std::min(reflected, values[worst])) {
            simplex[worst] = trial2;
            values[worst] = contracted;
            continue;
        }

        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) {
                continue;
            }
            for (std::size_t k = 0; k < n; ++k) {
                simplex[i][k] = simplex[best][k] + kShrink * (simplex[i][k] - simplex[best][k]);
            }
            values[i] = f(simplex[i]);
        }
    }

    const auto best_it = std::min_element(values.begin(), values.end());
    const auto best = static_cast<std::size_t>(best_it - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    if (!result.converged && diameter(best) < options.diameter_tol) {
        result.converged = true;
    }
    return result;
}

} // namespace

SimplexResult nelder_mead(const Objective &f, std::vector<double> start, const SimplexOptions &options) {
    for (double v : start) {
        if (!std::isfinite(v)) {
            throw ContractError("nelder_mead: non-finite starting point");
        }
    }
    SimplexResult first = run_simplex(f, start, options, options.initial_step);
    if (!options.restart) {
        return first;
    }
    // Restart from the best point with a fresh, smaller simplex to escape
    // premature collapse onto a ridge.
    SimplexResult second = run_simplex(f, first.x, options, options.initial_step * 0.5);
    second.iterations += first.iterations;
    second.evaluations += first.evaluations;
    if (first.value < second.value) {
        second.x = first.x;
        second.value = first.value;
        second.converged = second.converged && first.converged;
    }
    return second;
}

} // namespace epicast::optimize
