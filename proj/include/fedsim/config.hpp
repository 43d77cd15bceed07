#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/aggregation.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SyntheticSpec {
    int classes = 10;
    int features = 20;
    int per_class = 200;
    double spread = 0.1;
    uint64_t seed = 1;

    bool operator==(const SyntheticSpec&) const = default;
};

struct IdxSpec {
    std::string images;
    std::string labels;

    bool operator==(const IdxSpec&) const = default;
};

struct DatasetSpec {
    bool synthetic = true;
    SyntheticSpec syn;
    IdxSpec idx;

    // Only the active branch matters for equality (and round-trips).
    bool operator==(const DatasetSpec& o) const {
        if (synthetic != o.synthetic) return false;
        return synthetic ? syn == o.syn : idx == o.idx;
    }
};

struct ModelSpec {
    ArchKind kind = ArchKind::LogisticRegression;
    int hidden = 16;  // Mlp only

    bool operator==(const ModelSpec&) const = default;
};

struct SelfishSpec {
    int client = 0;
    double alpha = 0.5;
    bool k_known = true;

    bool operator==(const SelfishSpec&) const = default;
};

struct ExperimentConfig {
    int k = 10;
    int rounds = 30;
    LocalTrainConfig local;  // shuffle_seed is derived per client/round, not configured
    ModelSpec model;
    DatasetSpec dataset;
    uint64_t partition_seed = 1;
    uint64_t global_seed = 1;
    AggregationStrategy strategy = AggregationStrategy::FedAvg;
    std::vector<SelfishSpec> selfish_roster;
    bool paired_counterfactual = false;
    bool instrumented = false;
    bool emit_charts = true;
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

/// Strict parser: unknown keys anywhere in the document are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Loads and validates a config file. When the file does not set output_dir,
/// the FEDSIM_OUTPUT_DIR environment variable supplies the default.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stable hex digest of the canonical config serialization.
std::string config_fingerprint(const ExperimentConfig& cfg);

}  // namespace fedsim
