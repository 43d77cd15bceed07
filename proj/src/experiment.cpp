#include "fedsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/selfish.hpp"

namespace fedsim {

namespace {

// Seed-derivation tags for the independent streams of one experiment.
constexpr uint64_t kSplitTag = 0x7e57;

/// Index-parallel loop with per-index exception capture; the lowest-index
/// failure is rethrown so error reporting does not depend on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min(threads, n);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (int i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
    }
}

struct StepResult {
    RoundRecord record;
    UpdateVector global_update;
};

/// One federation (server + clients) advanced round by round.
class RoundEngine {
public:
    RoundEngine(const ExperimentConfig& cfg, const Dataset& data,
                const PartitionPlan& plan, AggregationStrategy strategy,
                bool force_all_normal)
        : cfg_(cfg), strategy_(strategy) {
        const Architecture arch{cfg.model.kind, data.num_features,
                                cfg.model.kind == ArchKind::Mlp ? cfg.model.hidden : 0,
                                data.num_classes};
        model_ = init_model(arch, cfg.global_seed);

        client_train_.reserve(cfg.k);
        client_test_.reserve(cfg.k);
        for (int c = 0; c < cfg.k; ++c) {
            auto [train_idx, test_idx] = train_test_split(
                plan.assignments[c], 0.2, derive_seed(cfg.partition_seed, c, kSplitTag));
            client_train_.push_back(subset(data, train_idx));
            client_test_.push_back(subset(data, test_idx));
        }

        roster_.reserve(cfg.k);
        selfish_.assign(cfg.k, std::nullopt);
        for (int c = 0; c < cfg.k; ++c) roster_.push_back({c, false, 0.0, {}});
        if (!force_all_normal) {
            for (const SelfishSpec& s : cfg.selfish_roster) {
                roster_[s.client].selfish = true;
                roster_[s.client].alpha = s.alpha;
                roster_[s.client].k_mode = KMode{s.k_known, cfg.k};
                SelfishState state;
                state.alpha = s.alpha;
                state.k_mode = KMode{s.k_known, cfg.k};
                selfish_[s.client] = std::move(state);
            }
        }
    }

    const std::vector<ClientSpec>& roster() const { return roster_; }

    StepResult step(int round, int threads) {
        const int k = cfg_.k;
        std::vector<UpdateVector> true_updates(k);
        parallel_for(k, threads, [&](int c) {
            LocalTrainConfig lc = cfg_.local;
            lc.shuffle_seed = derive_seed(cfg_.global_seed, c, round);
            try {
                true_updates[c] = local_train(model_, client_train_[c], lc);
            } catch (const std::runtime_error& e) {
                throw DivergenceError(round, c, e.what());
            }
        });

        std::vector<std::pair<int, UpdateVector>> sent;
        sent.reserve(k);
        for (int c = 0; c < k; ++c) {
            UpdateVector update = selfish_[c]
                                      ? selfish_round(*selfish_[c], model_.weights,
                                                      true_updates[c])
                                      : true_updates[c];
            if (!all_finite(update)) {
                throw DivergenceError(round, c, "non-finite client update");
            }
            sent.emplace_back(c, std::move(update));
        }

        const AggregationOutcome outcome = aggregate(sent, strategy_);
        if (!all_finite(outcome.global_update)) {
            throw DivergenceError(round, -1, "non-finite global update");
        }
        model_ = apply_update(model_, outcome.global_update);
        if (!all_finite(model_.weights)) {
            throw DivergenceError(round, -1, "non-finite global weights");
        }

        StepResult result;
        result.global_update = outcome.global_update;
        RoundRecord& rec = result.record;
        rec.round = round;
        rec.strategy = strategy_;
        rec.suspects = outcome.suspects;
        rec.betas = outcome.betas;
        rec.global_update_norm = norm(outcome.global_update);
        for (int c = 0; c < k; ++c) rec.per_client_sent_norm[c] = norm(sent[c].second);
        if (cfg_.instrumented) {
            for (const auto& [id, recovered] : outcome.recovered) {
                rec.recovery_errors[id] = recovery_error(recovered, true_updates[id]);
            }
        }

        std::vector<double> acc(k);
        parallel_for(k, threads, [&](int c) { acc[c] = evaluate(model_, client_test_[c]); });
        for (int c = 0; c < k; ++c) rec.per_client_accuracy[c] = acc[c];
        return result;
    }

private:
    const ExperimentConfig& cfg_;
    AggregationStrategy strategy_;
    ModelParams model_;
    std::vector<Dataset> client_train_;
    std::vector<Dataset> client_test_;
    std::vector<ClientSpec> roster_;
    std::vector<std::optional<SelfishState>> selfish_;
};

double mean_accuracy(const RoundRecord& rec, const std::vector<ClientSpec>& roster,
                     bool selfish_group) {
    double sum = 0.0;
    int n = 0;
    for (const ClientSpec& c : roster) {
        if (c.selfish != selfish_group) continue;
        auto it = rec.per_client_accuracy.find(c.id);
        if (it == rec.per_client_accuracy.end()) continue;
        sum += it->second;
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

Dataset build_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset.synthetic) {
        const SyntheticSpec& s = cfg.dataset.syn;
        return make_synthetic(s.classes, s.features, s.per_class, s.spread, s.seed);
    }
    return load_idx_dataset(cfg.dataset.idx.images, cfg.dataset.idx.labels);
}

}  // namespace

ResultBundle run_experiment(const ExperimentConfig& cfg, int threads) {
    ResultBundle bundle;
    bundle.config = cfg;
    bundle.fingerprint = config_fingerprint(cfg);

    const Dataset data = build_dataset(cfg);
    const PartitionPlan plan = partition_two_class(data, cfg.k, cfg.partition_seed);

    RoundEngine main_engine(cfg, data, plan, cfg.strategy, /*force_all_normal=*/false);
    std::optional<RoundEngine> twin;
    if (cfg.paired_counterfactual) {
        // The counterfactual baseline is always plain averaging.
        twin.emplace(cfg, data, plan, AggregationStrategy::FedAvg,
                     /*force_all_normal=*/true);
    }

    std::vector<RoundRecord> twin_records;
    bool twin_alive = twin.has_value();
    for (int round = 1; round <= cfg.rounds; ++round) {
        StepResult main_step;
        try {
            main_step = main_engine.step(round, threads);
        } catch (const DivergenceError& e) {
            bundle.diverged = true;
            bundle.diverged_round = e.round;
            bundle.diverged_client = e.client;
            break;
        }
        if (twin_alive) {
            try {
                StepResult twin_step = twin->step(round, threads);
                const double n_main = norm(main_step.global_update);
                const double n_twin = norm(twin_step.global_update);
                if (n_main > 0.0 && n_twin > 0.0) {
                    const Deviation dev =
                        deviation(main_step.global_update, twin_step.global_update);
                    main_step.record.deviation_norm_ratio = dev.norm_ratio;
                    main_step.record.deviation_angle_deg = dev.angle_deg;
                }
                twin_records.push_back(std::move(twin_step.record));
            } catch (const DivergenceError&) {
                twin_alive = false;
            }
        }
        bundle.rounds.push_back(std::move(main_step.record));
    }

    if (!bundle.rounds.empty()) {
        bundle.summary = group_stats(bundle.rounds, main_engine.roster());
    } else {
        bundle.summary.rounds.clear();
    }
    bundle.summary.config_fingerprint = bundle.fingerprint;

    if (twin && !twin_records.empty()) {
        PairedSeries paired;
        const ExperimentSummary twin_summary = group_stats(twin_records, twin->roster());
        paired.normal_accuracy = twin_summary.normal_accuracy;
        paired.mean_normal_accuracy.reserve(twin_records.size());
        for (const RoundRecord& rec : twin_records) {
            paired.mean_normal_accuracy.push_back(
                mean_accuracy(rec, twin->roster(), false));
        }
        bundle.paired = std::move(paired);
    }
    return bundle;
}

ExperimentConfig sweep_cell_config(const ExperimentConfig& base, double alpha,
                                   int selfish_count, uint64_t seed) {
    ExperimentConfig cfg = base;
    cfg.global_seed = seed;
    cfg.partition_seed = seed;
    cfg.selfish_roster.clear();
    for (int c = 0; c < selfish_count; ++c) {
        cfg.selfish_roster.push_back({c, alpha, true});
    }
    return cfg;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& base,
                                 const std::vector<double>& alphas,
                                 const std::vector<int>& selfish_counts,
                                 const std::vector<uint64_t>& seeds, int threads) {
    if (alphas.empty() || selfish_counts.empty() || seeds.empty()) {
        throw std::invalid_argument("run_sweep: alphas, counts and seeds must be non-empty");
    }
    std::vector<SweepCell> cells;
    for (double alpha : alphas) {
        for (int count : selfish_counts) {
            for (uint64_t seed : seeds) {
                SweepCell cell;
                cell.alpha = alpha;
                cell.selfish_count = count;
                cell.seed = seed;
                try {
                    const ExperimentConfig cfg =
                        sweep_cell_config(base, alpha, count, seed);
                    if (count > base.k) {
                        throw ConfigError("selfish count exceeds k");
                    }
                    ResultBundle bundle = run_experiment(cfg, threads);
                    cell.status = bundle.diverged ? "diverged" : "ok";
                    cell.bundle = std::move(bundle);
                } catch (const std::exception& e) {
                    cell.status = std::string("error: ") + e.what();
                }
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

}  // namespace fedsim
