#include "fedsim/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsim {

Deviation deviation(const UpdateVector& global_with_selfish,
                    const UpdateVector& global_all_normal) {
    const double n_with = norm(global_with_selfish);
    const double n_without = norm(global_all_normal);
    if (n_with == 0.0 || n_without == 0.0) {
        throw std::invalid_argument("deviation: zero-norm input");
    }
    return {n_with / n_without, angle_degrees(global_with_selfish, global_all_normal)};
}

double recovery_error(const UpdateVector& recovered, const UpdateVector& true_update) {
    return norm(subtract(recovered, true_update));
}

double theorem2_bound(const std::vector<UpdateVector>& true_updates, int k) {
    if (true_updates.empty()) throw std::invalid_argument("theorem2_bound: no updates");
    const size_t dim = true_updates.front().size();
    const double n = static_cast<double>(true_updates.size());

    double trace = 0.0;
    for (size_t j = 0; j < dim; ++j) {
        double mean = 0.0;
        for (const auto& u : true_updates) mean += u[j];
        mean /= n;
        double var = 0.0;
        for (const auto& u : true_updates) {
            const double d = u[j] - mean;
            var += d * d;
        }
        trace += var / n;
    }
    const double kd = static_cast<double>(k);
    return (4.0 + kd) / (4.0 * kd) * trace;
}

namespace {

GroupStats stats_over(const std::vector<double>& values) {
    GroupStats s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        const double d = v - s.mean;
        var += d * d;
    }
    s.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

}  // namespace

ExperimentSummary group_stats(const std::vector<RoundRecord>& records,
                              const std::vector<ClientSpec>& roster) {
    if (records.empty()) throw std::invalid_argument("group_stats: no records");
    ExperimentSummary summary;
    summary.rounds = records;

    const RoundRecord& last = records.back();
    std::vector<double> normal, selfish;
    bool any_selfish = false;
    for (const ClientSpec& c : roster) {
        if (c.selfish) any_selfish = true;
        auto it = last.per_client_accuracy.find(c.id);
        if (it == last.per_client_accuracy.end()) continue;
        (c.selfish ? selfish : normal).push_back(it->second);
    }
    summary.normal_accuracy = stats_over(normal);
    if (any_selfish) summary.selfish_accuracy = stats_over(selfish);
    return summary;
}

}  // namespace fedsim
