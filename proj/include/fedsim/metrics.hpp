#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/selfish.hpp"
#include "fedsim/update_vector.hpp"

namespace fedsim {

/// One client in an experiment roster.
struct ClientSpec {
    int id = 0;
    bool selfish = false;
    double alpha = 0.0;
    KMode k_mode;
};

struct Deviation {
    double norm_ratio = 1.0;
    double angle_deg = 0.0;
};

/// How far the selfish-affected global update strays from the counterfactual
/// all-normal one: norm ratio ||with|| / ||without|| and angle in degrees.
Deviation deviation(const UpdateVector& global_with_selfish,
                    const UpdateVector& global_all_normal);

/// Euclidean distance between a recovered update and the true one.
double recovery_error(const UpdateVector& recovered, const UpdateVector& true_update);

/// ((4+k)/(4k)) times the trace of the per-coordinate (population) variance
/// of the true updates; the cap on the squared aggregation error.
double theorem2_bound(const std::vector<UpdateVector>& true_updates, int k);

struct RoundRecord {
    int round = 0;
    AggregationStrategy strategy = AggregationStrategy::FedAvg;
    std::map<int, double> per_client_accuracy;
    std::map<int, double> per_client_sent_norm;
    std::set<int> suspects;
    std::map<int, double> betas;
    double global_update_norm = 0.0;
    std::optional<double> deviation_norm_ratio;
    std::optional<double> deviation_angle_deg;
    std::map<int, double> recovery_errors;  // instrumented runs only
};

struct GroupStats {
    double mean = 0.0;
    double stddev = 0.0;  // population
    int count = 0;
};

struct ExperimentSummary {
    std::string config_fingerprint;
    GroupStats normal_accuracy;
    std::optional<GroupStats> selfish_accuracy;
    std::vector<RoundRecord> rounds;
};

/// Final-round accuracy statistics per client group; the full round series
/// is retained on the summary.
ExperimentSummary group_stats(const std::vector<RoundRecord>& records,
                              const std::vector<ClientSpec>& roster);

}  // namespace fedsim
