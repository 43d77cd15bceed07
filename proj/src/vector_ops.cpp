#include "fedsim/update_vector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedsim {

namespace {

void require_same_dim(const UpdateVector& a, const UpdateVector& b, const char* op) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
}

double scalar_median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

UpdateVector add(const UpdateVector& a, const UpdateVector& b) {
    require_same_dim(a, b, "add");
    UpdateVector out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

UpdateVector subtract(const UpdateVector& a, const UpdateVector& b) {
    require_same_dim(a, b, "subtract");
    UpdateVector out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

UpdateVector scale(const UpdateVector& a, double c) {
    UpdateVector out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
    return out;
}

double norm(const UpdateVector& a) {
    double sum = 0.0;
    for (double x : a) sum += x * x;
    return std::sqrt(sum);
}

double inner(const UpdateVector& a, const UpdateVector& b) {
    require_same_dim(a, b, "inner");
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double angle_degrees(const UpdateVector& a, const UpdateVector& b) {
    require_same_dim(a, b, "angle_degrees");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("angle_degrees: zero-norm input");
    }
    double cosine = inner(a, b) / (na * nb);
    cosine = std::clamp(cosine, -1.0, 1.0);
    return std::acos(cosine) * 180.0 / std::numbers::pi;
}

UpdateVector marginal_median(const std::vector<UpdateVector>& updates) {
    if (updates.empty()) {
        throw std::invalid_argument("marginal_median: empty input");
    }
    const size_t dim = updates.front().size();
    for (const auto& u : updates) require_same_dim(updates.front(), u, "marginal_median");

    UpdateVector out(dim);
    std::vector<double> column(updates.size());
    for (size_t j = 0; j < dim; ++j) {
        for (size_t i = 0; i < updates.size(); ++i) column[i] = updates[i][j];
        std::sort(column.begin(), column.end());
        const size_t n = column.size();
        out[j] = (n % 2 == 1) ? column[n / 2] : (column[n / 2 - 1] + column[n / 2]) / 2.0;
    }
    return out;
}

double median_norm(const std::vector<UpdateVector>& updates) {
    if (updates.empty()) {
        throw std::invalid_argument("median_norm: empty input");
    }
    std::vector<double> norms;
    norms.reserve(updates.size());
    for (const auto& u : updates) norms.push_back(norm(u));
    return scalar_median(std::move(norms));
}

double sum_of_distances(const UpdateVector& x, const std::vector<UpdateVector>& points) {
    double total = 0.0;
    for (const auto& p : points) total += norm(subtract(x, p));
    return total;
}

UpdateVector geometric_median(const std::vector<UpdateVector>& points,
                              double tol, int max_iter) {
    if (points.empty()) {
        throw std::invalid_argument("geometric_median: empty input");
    }
    if (tol <= 0.0) {
        throw std::invalid_argument("geometric_median: tol must be positive");
    }
    const size_t dim = points.front().size();
    for (const auto& p : points) require_same_dim(points.front(), p, "geometric_median");
    if (points.size() == 1) return points.front();

    // Coordinate mean as the starting iterate.
    UpdateVector x(dim, 0.0);
    for (const auto& p : points) {
        for (size_t j = 0; j < dim; ++j) x[j] += p[j];
    }
    for (size_t j = 0; j < dim; ++j) x[j] /= static_cast<double>(points.size());

    // Smoothing floor scaled to the data so a near-coincident iterate does
    // not blow up the weights.
    double pairwise = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < points.size(); ++i) {
        for (size_t j = i + 1; j < points.size(); ++j) {
            pairwise += norm(subtract(points[i], points[j]));
            ++pairs;
        }
    }
    const double eps = 1e-12 * (1.0 + (pairs > 0 ? pairwise / static_cast<double>(pairs) : 0.0));

    for (int iter = 0; iter < max_iter; ++iter) {
        UpdateVector next(dim, 0.0);
        double weight_sum = 0.0;
        for (const auto& p : points) {
            const double d = std::max(norm(subtract(x, p)), eps);
            const double w = 1.0 / d;
            weight_sum += w;
            for (size_t j = 0; j < dim; ++j) next[j] += p[j] * w;
        }
        for (size_t j = 0; j < dim; ++j) next[j] /= weight_sum;
        const double step = norm(subtract(next, x));
        x = std::move(next);
        if (step < tol) break;
    }
    return x;
}

bool all_finite(const UpdateVector& a) {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace fedsim
