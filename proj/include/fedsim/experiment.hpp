#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/metrics.hpp"

namespace fedsim {

/// Raised when training or aggregation produces non-finite values; carries
/// the round and client (client -1 means the server-side step).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int round_in, int client_in, const std::string& what)
        : std::runtime_error(what), round(round_in), client(client_in) {}
    int round;
    int client;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Counterfactual twin: group stats and per-round mean accuracy of the
/// identically seeded all-normal FedAvg run.
struct PairedSeries {
    GroupStats normal_accuracy;
    std::vector<double> mean_normal_accuracy;
};

struct ResultBundle {
    ExperimentConfig config;
    std::string fingerprint;
    std::vector<RoundRecord> rounds;
    ExperimentSummary summary;
    bool diverged = false;
    int diverged_round = -1;
    int diverged_client = -1;
    std::optional<PairedSeries> paired;
};

/// Runs one full experiment. Deterministic for a fixed config regardless of
/// the thread count; a divergent run returns the completed rounds with the
/// diverged flag set instead of throwing.
ResultBundle run_experiment(const ExperimentConfig& cfg, int threads = 1);

struct SweepCell {
    double alpha = 0.0;
    int selfish_count = 0;
    uint64_t seed = 0;
    std::string status;  // "ok", "diverged" or "error: ..."
    std::optional<ResultBundle> bundle;
};

/// Cartesian sweep over selfishness level, selfish-client count and seed.
/// Each cell reruns the base config with the cell seed driving both the
/// global and partition seeds and clients 0..count-1 made selfish. Cell
/// failures are recorded and do not stop the sweep.
std::vector<SweepCell> run_sweep(const ExperimentConfig& base,
                                 const std::vector<double>& alphas,
                                 const std::vector<int>& selfish_counts,
                                 const std::vector<uint64_t>& seeds, int threads = 1);

/// Materializes the per-cell config a sweep uses (exposed for tests).
ExperimentConfig sweep_cell_config(const ExperimentConfig& base, double alpha,
                                   int selfish_count, uint64_t seed);

/// Writes rounds.csv, accuracy.csv, summary.json and (optionally) charts.
void emit_outputs(const ResultBundle& bundle, const std::filesystem::path& dir);

/// Writes sweep_summary.csv, sweep_table.csv, per-cell bundles and the
/// deviation-vs-alpha charts when the sweep carries paired runs.
void emit_sweep_outputs(const std::vector<SweepCell>& cells,
                        const ExperimentConfig& base,
                        const std::filesystem::path& dir);

/// Shortest round-trip decimal formatting used by all emitted files.
std::string format_double(double v);

}  // namespace fedsim
