// Command-line front end: run a configured experiment, sweep a grid of
// selfishness settings, or run the verification suites.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/checks.hpp"
#include "fedsim/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitIo = 3;

struct Overrides {
    int rounds = -1;
    int k = -1;
    std::string strategy;
    long long global_seed = -1;
    long long partition_seed = -1;
    std::string output_dir;
    int paired = -1;        // tri-state: unset/-1, off/0, on/1
    int instrumented = -1;
    int charts = -1;
};

void apply_overrides(fedsim::ExperimentConfig& cfg, const Overrides& o) {
    if (o.rounds > 0) cfg.rounds = o.rounds;
    if (o.k > 0) cfg.k = o.k;
    if (!o.strategy.empty()) cfg.strategy = fedsim::strategy_from_string(o.strategy);
    if (o.global_seed >= 0) cfg.global_seed = static_cast<uint64_t>(o.global_seed);
    if (o.partition_seed >= 0) cfg.partition_seed = static_cast<uint64_t>(o.partition_seed);
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (o.paired >= 0) cfg.paired_counterfactual = o.paired != 0;
    if (o.instrumented >= 0) cfg.instrumented = o.instrumented != 0;
    if (o.charts >= 0) cfg.emit_charts = o.charts != 0;
}

int run_command(const std::string& config_path, const Overrides& o, int threads) {
    fedsim::ExperimentConfig cfg = fedsim::load_config(config_path);
    apply_overrides(cfg, o);

    const fedsim::ResultBundle bundle = fedsim::run_experiment(cfg, threads);
    fedsim::emit_outputs(bundle, cfg.output_dir);
    std::printf("wrote %s (rounds completed: %zu%s)\n", cfg.output_dir.c_str(),
                bundle.rounds.size(), bundle.diverged ? ", diverged" : "");
    if (!bundle.rounds.empty()) {
        std::printf("final normal-client accuracy: %.4f",
                    bundle.summary.normal_accuracy.mean);
        if (bundle.summary.selfish_accuracy) {
            std::printf(", selfish: %.4f", bundle.summary.selfish_accuracy->mean);
        }
        std::printf("\n");
    }
    if (bundle.diverged) {
        std::fprintf(stderr, "training diverged at round %d (client %d)\n",
                     bundle.diverged_round, bundle.diverged_client);
        return kExitDiverged;
    }
    return kExitOk;
}

int sweep_command(const std::string& config_path, const Overrides& o,
                  const std::vector<double>& alphas, const std::vector<int>& counts,
                  const std::vector<uint64_t>& seeds, int threads) {
    fedsim::ExperimentConfig base = fedsim::load_config(config_path);
    apply_overrides(base, o);

    const std::vector<fedsim::SweepCell> cells =
        fedsim::run_sweep(base, alphas, counts, seeds, threads);
    fedsim::emit_sweep_outputs(cells, base, base.output_dir);

    int failures = 0;
    for (const auto& cell : cells) {
        if (cell.status != "ok" && cell.status != "diverged") ++failures;
        std::printf("alpha=%g selfish=%d seed=%llu: %s\n", cell.alpha, cell.selfish_count,
                    static_cast<unsigned long long>(cell.seed), cell.status.c_str());
    }
    std::printf("wrote %s (%zu cells, %d failed)\n", base.output_dir.c_str(), cells.size(),
                failures);
    return kExitOk;
}

int verify_command(bool full) {
    const auto results = fedsim::checks::run_all(full);
    int failures = 0;
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::printf("[%s] %2zu. %s (%.2fs) — %s\n", r.passed ? "PASS" : "FAIL", i + 1,
                    r.name.c_str(), r.seconds, r.detail.c_str());
        if (!r.passed) ++failures;
    }
    std::printf("%zu/%zu checks passed\n", results.size() - failures, results.size());
    return failures == 0 ? kExitOk : kExitDiverged;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated-learning round simulator with selfish-client crafting "
                 "and robust aggregation"};
    app.require_subcommand(1);

    Overrides o;
    int threads = 1;
    std::string config_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "JSON experiment config")->required();
        cmd->add_option("--rounds", o.rounds, "override communication rounds");
        cmd->add_option("--k", o.k, "override client count");
        cmd->add_option("--strategy", o.strategy,
                        "override aggregation strategy "
                        "(fed_avg|marginal_median|downscale|rfl_self)");
        cmd->add_option("--seed", o.global_seed, "override global seed");
        cmd->add_option("--partition-seed", o.partition_seed, "override partition seed");
        cmd->add_option("--output-dir", o.output_dir, "override output directory");
        cmd->add_option("--threads", threads, "worker threads for client training");
        cmd->add_flag_callback("--paired", [&o] { o.paired = 1; },
                               "run the all-normal counterfactual twin");
        cmd->add_flag_callback("--no-paired", [&o] { o.paired = 0; },
                               "skip the counterfactual twin");
        cmd->add_flag_callback("--instrumented", [&o] { o.instrumented = 1; },
                               "record recovery errors against true updates");
        cmd->add_flag_callback("--no-instrumented", [&o] { o.instrumented = 0; },
                               "do not record recovery errors");
        cmd->add_flag_callback("--charts", [&o] { o.charts = 1; }, "emit SVG charts");
        cmd->add_flag_callback("--no-charts", [&o] { o.charts = 0; }, "skip SVG charts");
    };

    CLI::App* run = app.add_subcommand("run", "run one experiment");
    add_common(run);

    CLI::App* sweep = app.add_subcommand("sweep", "run a grid of experiments");
    add_common(sweep);
    std::vector<double> alphas;
    std::vector<int> counts;
    std::vector<uint64_t> seeds;
    sweep->add_option("--alphas", alphas, "selfishness levels")
        ->required()
        ->delimiter(',');
    sweep->add_option("--selfish", counts, "selfish-client counts")
        ->required()
        ->delimiter(',');
    sweep->add_option("--seeds", seeds, "seeds (drive global and partition seeds)")
        ->required()
        ->delimiter(',');

    CLI::App* verify = app.add_subcommand("verify", "run the oracle/property suites");
    bool full = false;
    verify->add_flag("--full", full, "include the end-to-end and determinism suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, o, threads);
        if (sweep->parsed()) return sweep_command(config_path, o, alphas, counts, seeds, threads);
        return verify_command(full);
    } catch (const fedsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const fedsim::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
}
