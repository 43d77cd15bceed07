#pragma once

#include <functional>

namespace fedsim {

struct ScalarMinResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
};

/// Brent's derivative-free minimization of f on [lo, hi]: golden-section
/// steps with parabolic interpolation when the fit is trustworthy.
/// Guaranteed to terminate; exact on unimodal brackets.
ScalarMinResult brent_minimize(const std::function<double(double)>& f,
                               double lo, double hi,
                               double tol = 1e-8, int max_iter = 200);

}  // namespace fedsim
