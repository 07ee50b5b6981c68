#pragma once

#include <functional>
#include <vector>

namespace epicast::optimize {

struct SimplexOptions {
    double diameter_tol = 1e-7;
    int max_iterations = 2000;
    double initial_step = 0.1;
    bool restart = true; // one restart from a perturbed copy of the best vertex
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(const std::vector<double> &)>;

/// Derivative-free Nelder-Mead minimization. Non-finite objective values are
/// treated as +infinity, so an objective can reject a point by returning NaN/inf.
/// Convergence means the largest vertex distance from the best vertex fell
/// below `diameter_tol` before `max_iterations`.
SimplexResult nelder_mead(const Objective &f, std::vector<double> start, const SimplexOptions &options = {});

} // namespace epicast::optimize
