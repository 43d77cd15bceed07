#include "fedsim/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedsim {

std::string to_string(AggregationStrategy s) {
    switch (s) {
        case AggregationStrategy::FedAvg: return "fed_avg";
        case AggregationStrategy::MarginalMedian: return "marginal_median";
        case AggregationStrategy::Downscale: return "downscale";
        case AggregationStrategy::RflSelf: return "rfl_self";
    }
    return "unknown";
}

AggregationStrategy strategy_from_string(const std::string& name) {
    if (name == "fed_avg") return AggregationStrategy::FedAvg;
    if (name == "marginal_median") return AggregationStrategy::MarginalMedian;
    if (name == "downscale") return AggregationStrategy::Downscale;
    if (name == "rfl_self") return AggregationStrategy::RflSelf;
    throw std::invalid_argument("unknown aggregation strategy: " + name);
}

namespace {

void check_updates(const std::vector<std::pair<int, UpdateVector>>& updates) {
    if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
    const size_t dim = updates.front().second.size();
    for (const auto& [id, u] : updates) {
        if (u.size() != dim) {
            throw std::invalid_argument("aggregate: dimension mismatch for client " +
                                        std::to_string(id));
        }
    }
}

std::vector<UpdateVector> values_sorted_by_id(
    std::vector<std::pair<int, UpdateVector>> updates) {
    std::sort(updates.begin(), updates.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<UpdateVector> out;
    out.reserve(updates.size());
    for (auto& [id, u] : updates) out.push_back(std::move(u));
    return out;
}

}  // namespace

std::set<int> flag_suspects(const std::vector<std::pair<int, UpdateVector>>& updates) {
    check_updates(updates);
    std::vector<UpdateVector> values;
    values.reserve(updates.size());
    for (const auto& [id, u] : updates) values.push_back(u);
    const double n_med = median_norm(values);
    std::set<int> suspects;
    for (const auto& [id, u] : updates) {
        if (norm(u) > n_med) suspects.insert(id);
    }
    return suspects;
}

double solve_beta(const UpdateVector& delta_hat, const UpdateVector& delta_med,
                  double n_med) {
    if (delta_hat.size() != delta_med.size()) {
        throw std::invalid_argument("solve_beta: dimension mismatch");
    }
    if (!(n_med >= 0.0)) throw std::invalid_argument("solve_beta: n_med must be >= 0");
    if (!(norm(delta_hat) > n_med)) {
        throw std::invalid_argument("solve_beta: ||delta_hat|| must exceed n_med");
    }

    const UpdateVector diff = subtract(delta_hat, delta_med);
    const double a = inner(diff, diff);
    if (a == 0.0) {
        throw std::invalid_argument("solve_beta: delta_hat equals delta_med");
    }
    const double b = 2.0 * inner(delta_med, diff);
    const double c = inner(delta_med, delta_med) - n_med * n_med;

    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return 0.0;
    const double sqrt_disc = std::sqrt(disc);
    const double r1 = (-b - sqrt_disc) / (2.0 * a);
    const double r2 = (-b + sqrt_disc) / (2.0 * a);

    double best = 0.0;
    bool found = false;
    for (double r : {r1, r2}) {
        if (r >= 0.0 && r <= 1.0 && (!found || r > best)) {
            best = r;
            found = true;
        }
    }
    return found ? best : 0.0;
}

UpdateVector recover_update(const UpdateVector& delta_hat, const UpdateVector& delta_med,
                            double beta) {
    if (delta_hat.size() != delta_med.size()) {
        throw std::invalid_argument("recover_update: dimension mismatch");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("recover_update: beta must lie in [0,1]");
    }
    UpdateVector out(delta_hat.size());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = beta * delta_hat[i] + (1.0 - beta) * delta_med[i];
    }
    return out;
}

UpdateVector downscale_update(const UpdateVector& delta_hat, double n_med) {
    const double n = norm(delta_hat);
    if (n == 0.0) throw std::invalid_argument("downscale_update: zero-norm input");
    return scale(delta_hat, n_med / n);
}

AggregationOutcome aggregate(const std::vector<std::pair<int, UpdateVector>>& updates,
                             AggregationStrategy strategy) {
    check_updates(updates);
    const size_t dim = updates.front().second.size();
    const double k = static_cast<double>(updates.size());

    std::vector<std::pair<int, UpdateVector>> sorted = updates;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    AggregationOutcome out;
    out.global_update.assign(dim, 0.0);

    auto mean_of = [&](auto value_of) {
        for (const auto& entry : sorted) {
            const UpdateVector& v = value_of(entry);
            for (size_t i = 0; i < dim; ++i) out.global_update[i] += v[i];
        }
        for (size_t i = 0; i < dim; ++i) out.global_update[i] /= k;
    };

    switch (strategy) {
        case AggregationStrategy::FedAvg: {
            mean_of([](const auto& e) -> const UpdateVector& { return e.second; });
            break;
        }
        case AggregationStrategy::MarginalMedian: {
            out.global_update = marginal_median(values_sorted_by_id(sorted));
            break;
        }
        case AggregationStrategy::Downscale: {
            out.suspects = flag_suspects(sorted);
            const double n_med = median_norm(values_sorted_by_id(sorted));
            for (const auto& [id, u] : sorted) {
                if (out.suspects.count(id)) {
                    out.recovered[id] = downscale_update(u, n_med);
                }
            }
            mean_of([&](const auto& e) -> const UpdateVector& {
                auto it = out.recovered.find(e.first);
                return it != out.recovered.end() ? it->second : e.second;
            });
            break;
        }
        case AggregationStrategy::RflSelf: {
            out.suspects = flag_suspects(sorted);
            const std::vector<UpdateVector> values = values_sorted_by_id(sorted);
            const double n_med = median_norm(values);
            const UpdateVector delta_med = marginal_median(values);
            for (const auto& [id, u] : sorted) {
                if (out.suspects.count(id)) {
                    const double beta = solve_beta(u, delta_med, n_med);
                    out.betas[id] = beta;
                    out.recovered[id] = recover_update(u, delta_med, beta);
                }
            }
            // Split sum: untouched updates first, then the recovered ones,
            // each block in ascending client id.
            for (const auto& [id, u] : sorted) {
                if (!out.suspects.count(id)) {
                    for (size_t i = 0; i < dim; ++i) out.global_update[i] += u[i];
                }
            }
            for (const auto& [id, r] : out.recovered) {
                for (size_t i = 0; i < dim; ++i) out.global_update[i] += r[i];
            }
            for (size_t i = 0; i < dim; ++i) out.global_update[i] /= k;
            break;
        }
    }
    return out;
}

ModelParams apply_update(const ModelParams& model, const UpdateVector& delta) {
    if (model.weights.size() != delta.size()) {
        throw std::invalid_argument("apply_update: dimension mismatch");
    }
    ModelParams next;
    next.arch = model.arch;
    next.weights = add(model.weights, delta);
    return next;
}

}  // namespace fedsim
