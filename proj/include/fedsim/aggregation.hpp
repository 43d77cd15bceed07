#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/update_vector.hpp"

namespace fedsim {

enum class AggregationStrategy { FedAvg, MarginalMedian, Downscale, RflSelf };

std::string to_string(AggregationStrategy s);
AggregationStrategy strategy_from_string(const std::string& name);

struct AggregationOutcome {
    UpdateVector global_update;
    std::set<int> suspects;
    std::map<int, double> betas;             // RflSelf only
    std::map<int, UpdateVector> recovered;   // RflSelf and Downscale
};

/// Clients whose update norm strictly exceeds the median of all norms.
std::set<int> flag_suspects(const std::vector<std::pair<int, UpdateVector>>& updates);

/// Mixing coefficient making ||beta*delta_hat + (1-beta)*delta_med|| equal
/// n_med: largest real root of the induced quadratic inside [0,1], or 0 when
/// no such root exists. Requires ||delta_hat|| > n_med (callers only pass
/// flagged updates) and delta_hat != delta_med.
double solve_beta(const UpdateVector& delta_hat, const UpdateVector& delta_med,
                  double n_med);

/// Convex combination beta*delta_hat + (1-beta)*delta_med.
UpdateVector recover_update(const UpdateVector& delta_hat, const UpdateVector& delta_med,
                            double beta);

/// Rescales delta_hat to norm n_med without changing its direction.
UpdateVector downscale_update(const UpdateVector& delta_hat, double n_med);

/// Runs one round of server-side aggregation under the chosen strategy.
/// Sums always run in ascending client-id order.
AggregationOutcome aggregate(const std::vector<std::pair<int, UpdateVector>>& updates,
                             AggregationStrategy strategy);

/// w + delta as a fresh ModelParams.
ModelParams apply_update(const ModelParams& model, const UpdateVector& delta);

}  // namespace fedsim
