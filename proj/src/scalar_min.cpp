#include "fedsim/scalar_min.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsim {

ScalarMinResult brent_minimize(const std::function<double(double)>& f,
                               double lo, double hi, double tol, int max_iter) {
    if (!(lo < hi)) throw std::invalid_argument("brent_minimize: need lo < hi");
    if (!(tol > 0.0)) throw std::invalid_argument("brent_minimize: tol must be positive");

    constexpr double golden = 0.3819660112501051;  // 2 - phi
    double a = lo, b = hi;
    double x = a + golden * (b - a);
    double w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double delta = 0.0, delta_prev = 0.0;

    int iter = 0;
    for (; iter < max_iter; ++iter) {
        const double mid = 0.5 * (a + b);
        const double tol1 = tol * std::fabs(x) + 1e-12;
        const double tol2 = 2.0 * tol1;
        if (std::fabs(x - mid) <= tol2 - 0.5 * (b - a)) break;

        bool parabolic_ok = false;
        if (std::fabs(delta_prev) > tol1) {
            // Parabola through (x, fx), (w, fw), (v, fv).
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            const double delta_prev2 = delta_prev;
            delta_prev = delta;
            if (std::fabs(p) < std::fabs(0.5 * q * delta_prev2) &&
                p > q * (a - x) && p < q * (b - x)) {
                delta = p / q;
                const double u = x + delta;
                if (u - a < tol2 || b - u < tol2) {
                    delta = (mid > x) ? tol1 : -tol1;
                }
                parabolic_ok = true;
            }
        }
        if (!parabolic_ok) {
            delta_prev = (x >= mid) ? a - x : b - x;
            delta = golden * delta_prev;
        }

        const double u = (std::fabs(delta) >= tol1) ? x + delta
                                                    : x + (delta > 0.0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx, iter};
}

}  // namespace fedsim
