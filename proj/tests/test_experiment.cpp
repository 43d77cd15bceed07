#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedsim/experiment.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.k = 4;
    cfg.rounds = 3;
    cfg.local.epochs = 2;
    cfg.local.batch_size = 16;
    cfg.local.learning_rate = 0.05;
    cfg.dataset.syn = {4, 6, 40, 0.1, 11};
    cfg.partition_seed = 5;
    cfg.global_seed = 9;
    cfg.emit_charts = false;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config: json round-trip is lossless") {
    ExperimentConfig cfg = small_config();
    cfg.strategy = AggregationStrategy::RflSelf;
    cfg.selfish_roster = {{1, 0.4, true}, {3, 0.2, false}};
    cfg.paired_counterfactual = true;
    cfg.instrumented = true;
    cfg.model.kind = ArchKind::Mlp;
    cfg.model.hidden = 8;
    CHECK(config_from_json(config_to_json(cfg)) == cfg);

    ExperimentConfig idx_cfg = small_config();
    idx_cfg.dataset.synthetic = false;
    idx_cfg.dataset.idx = {"images.idx.gz", "labels.idx"};
    CHECK(config_from_json(config_to_json(idx_cfg)) == idx_cfg);
}

TEST_CASE("config: unknown keys and bad values are rejected") {
    nlohmann::json j = config_to_json(small_config());
    j["typo_field"] = 1;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);

    nlohmann::json nested = config_to_json(small_config());
    nested["local"]["learning_rt"] = 0.1;
    CHECK_THROWS_AS(config_from_json(nested), ConfigError);

    nlohmann::json bad_roster = config_to_json(small_config());
    bad_roster["selfish"] = {{{"client", 99}, {"alpha", 0.5}}};
    CHECK_THROWS_AS(config_from_json(bad_roster), ConfigError);

    nlohmann::json bad_alpha = config_to_json(small_config());
    bad_alpha["selfish"] = {{{"client", 0}, {"alpha", 1.5}}};
    CHECK_THROWS_AS(config_from_json(bad_alpha), ConfigError);

    nlohmann::json bad_strategy = config_to_json(small_config());
    bad_strategy["strategy"] = "krum";
    CHECK_THROWS_AS(config_from_json(bad_strategy), ConfigError);
}

TEST_CASE("config: fingerprint tracks content") {
    const ExperimentConfig a = small_config();
    ExperimentConfig b = a;
    CHECK(config_fingerprint(a) == config_fingerprint(b));
    b.global_seed += 1;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
}

TEST_CASE("config: environment variable supplies the default output dir") {
    TempDir dir("fedsim_cfg_env");
    const fs::path cfg_path = dir.path / "cfg.json";
    nlohmann::json j = config_to_json(small_config());
    j.erase("output_dir");
    std::ofstream(cfg_path) << j.dump(2);

    setenv("FEDSIM_OUTPUT_DIR", "/tmp/fedsim_env_out", 1);
    CHECK(load_config(cfg_path).output_dir == "/tmp/fedsim_env_out");
    unsetenv("FEDSIM_OUTPUT_DIR");
    CHECK(load_config(cfg_path).output_dir == "out");

    std::ofstream(cfg_path) << config_to_json(small_config()).dump(2);
    setenv("FEDSIM_OUTPUT_DIR", "/tmp/ignored", 1);
    CHECK(load_config(cfg_path).output_dir == "out");  // explicit value wins
    unsetenv("FEDSIM_OUTPUT_DIR");
}

TEST_CASE("run_experiment: k=1, one round, FedAvg of one") {
    ExperimentConfig cfg;
    cfg.k = 1;
    cfg.rounds = 1;
    cfg.local.epochs = 1;
    cfg.local.batch_size = 8;
    cfg.local.learning_rate = 0.05;
    cfg.dataset.syn = {2, 4, 20, 0.1, 3};
    cfg.emit_charts = false;

    const ResultBundle bundle = run_experiment(cfg);
    REQUIRE(bundle.rounds.size() == 1);
    CHECK_FALSE(bundle.diverged);

    // Recompute the single client's local update by hand.
    const Dataset data = make_synthetic(2, 4, 20, 0.1, 3);
    const PartitionPlan plan = partition_two_class(data, 1, cfg.partition_seed);
    auto [train_idx, test_idx] = train_test_split(plan.assignments[0], 0.2,
                                                  derive_seed(cfg.partition_seed, 0, 0x7e57));
    const Dataset train = subset(data, train_idx);
    const Architecture arch{ArchKind::LogisticRegression, 4, 0, 2};
    const ModelParams w0 = init_model(arch, cfg.global_seed);
    LocalTrainConfig lc = cfg.local;
    lc.shuffle_seed = derive_seed(cfg.global_seed, 0, 1);
    const UpdateVector delta = local_train(w0, train, lc);
    CHECK(bundle.rounds[0].global_update_norm == norm(delta));
}

TEST_CASE("run_experiment: reruns and thread counts give identical outputs") {
    ExperimentConfig cfg = small_config();
    cfg.selfish_roster = {{0, 0.5, true}};
    cfg.strategy = AggregationStrategy::RflSelf;
    cfg.paired_counterfactual = true;
    cfg.instrumented = true;

    TempDir dir("fedsim_determinism_unit");
    std::vector<std::string> rounds, acc, summary;
    int i = 0;
    for (int threads : {1, 4, 1}) {
        const fs::path out = dir.path / ("r" + std::to_string(i++));
        emit_outputs(run_experiment(cfg, threads), out);
        rounds.push_back(slurp(out / "rounds.csv"));
        acc.push_back(slurp(out / "accuracy.csv"));
        summary.push_back(slurp(out / "summary.json"));
    }
    CHECK(rounds[1] == rounds[0]);
    CHECK(rounds[2] == rounds[0]);
    CHECK(acc[1] == acc[0]);
    CHECK(acc[2] == acc[0]);
    CHECK(summary[1] == summary[0]);
    CHECK(summary[2] == summary[0]);
}

TEST_CASE("run_experiment: selfish at alpha=1/k matches the all-normal run bit for bit") {
    ExperimentConfig honest = small_config();
    ExperimentConfig disguised = small_config();
    disguised.selfish_roster = {{2, 1.0 / disguised.k, true}};

    const ResultBundle a = run_experiment(honest);
    const ResultBundle b = run_experiment(disguised);
    REQUIRE(a.rounds.size() == b.rounds.size());
    for (size_t r = 0; r < a.rounds.size(); ++r) {
        CHECK(a.rounds[r].global_update_norm == b.rounds[r].global_update_norm);
        CHECK(a.rounds[r].per_client_accuracy == b.rounds[r].per_client_accuracy);
        CHECK(a.rounds[r].per_client_sent_norm == b.rounds[r].per_client_sent_norm);
    }

    TempDir dir("fedsim_fixed_point");
    emit_outputs(a, dir.path / "honest");
    emit_outputs(b, dir.path / "disguised");
    CHECK(slurp(dir.path / "honest" / "rounds.csv") ==
          slurp(dir.path / "disguised" / "rounds.csv"));
}

TEST_CASE("run_experiment: changing one client's role leaves other streams alone") {
    ExperimentConfig honest = small_config();
    ExperimentConfig attacked = small_config();
    attacked.selfish_roster = {{0, 0.9, true}};

    const ResultBundle a = run_experiment(honest);
    const ResultBundle b = run_experiment(attacked);
    // Round 1: crafting has no history, so every client sends its true
    // update; all sent norms agree. Round 2: the other clients trained from
    // identical weights with their own streams, so their sent norms still
    // agree even though client 0 now crafts.
    CHECK(a.rounds[0].per_client_sent_norm == b.rounds[0].per_client_sent_norm);
    for (int c = 1; c < honest.k; ++c) {
        CHECK(a.rounds[1].per_client_sent_norm.at(c) ==
              b.rounds[1].per_client_sent_norm.at(c));
    }
    CHECK(a.rounds[1].per_client_sent_norm.at(0) != b.rounds[1].per_client_sent_norm.at(0));
}

TEST_CASE("run_experiment: divergence is flagged and partial results kept") {
    // Four colliding full-replacement clients amplify one another by a
    // factor of ~3 per round until the crafted updates overflow.
    ExperimentConfig cfg;
    cfg.k = 4;
    cfg.rounds = 800;
    cfg.local.epochs = 1;
    cfg.local.batch_size = 16;
    cfg.local.learning_rate = 0.1;
    cfg.dataset.syn = {2, 2, 8, 0.05, 21};
    cfg.emit_charts = false;
    cfg.selfish_roster = {{0, 1.0, true}, {1, 1.0, true}, {2, 1.0, true}, {3, 1.0, true}};

    const ResultBundle bundle = run_experiment(cfg);
    CHECK(bundle.diverged);
    CHECK(bundle.diverged_round >= 1);
    CHECK(bundle.rounds.size() < 800);

    TempDir dir("fedsim_diverged");
    emit_outputs(bundle, dir.path);
    const std::string summary = slurp(dir.path / "summary.json");
    CHECK(summary.find("\"diverged\": true") != std::string::npos);
}

TEST_CASE("emit_outputs: csv shapes, golden header, empty optionals") {
    ExperimentConfig cfg = small_config();
    cfg.selfish_roster = {{0, 0.5, true}};
    cfg.strategy = AggregationStrategy::RflSelf;
    cfg.instrumented = true;
    const ResultBundle bundle = run_experiment(cfg);

    TempDir dir("fedsim_outputs");
    emit_outputs(bundle, dir.path);

    const std::string rounds_csv = slurp(dir.path / "rounds.csv");
    std::istringstream rlines(rounds_csv);
    std::string line;
    std::getline(rlines, line);
    CHECK(line ==
          "round,strategy,global_update_norm,deviation_norm_ratio,deviation_angle_deg,"
          "num_suspects");
    int data_rows = 0;
    bool saw_empty_deviation = false;
    while (std::getline(rlines, line)) {
        ++data_rows;
        if (line.find(",,") != std::string::npos) saw_empty_deviation = true;
    }
    CHECK(data_rows == cfg.rounds);
    CHECK(saw_empty_deviation);  // no paired run -> deviation cells stay empty

    const std::string acc_csv = slurp(dir.path / "accuracy.csv");
    std::istringstream alines(acc_csv);
    std::getline(alines, line);
    CHECK(line == "round,client_id,role,accuracy,sent_norm,beta,recovery_error");
    int acc_rows = 0;
    while (std::getline(alines, line)) ++acc_rows;
    CHECK(acc_rows == cfg.rounds * cfg.k);
}

TEST_CASE("emit_outputs: summary.json re-emits unchanged after a parse round-trip") {
    ExperimentConfig cfg = small_config();
    cfg.paired_counterfactual = true;
    cfg.selfish_roster = {{1, 0.6, true}};
    const ResultBundle bundle = run_experiment(cfg);

    TempDir dir("fedsim_summary_roundtrip");
    emit_outputs(bundle, dir.path);
    const std::string first = slurp(dir.path / "summary.json");
    const nlohmann::json parsed = nlohmann::json::parse(first);
    CHECK(parsed.dump(2) + "\n" == first);
    CHECK(parsed.at("config_fingerprint").get<std::string>() == bundle.fingerprint);
    CHECK(parsed.contains("paired"));
    CHECK(parsed.at("series").contains("deviation_norm_ratio"));
}

TEST_CASE("run_sweep: a 1x1x1 sweep reproduces a direct run") {
    ExperimentConfig base = small_config();
    base.paired_counterfactual = false;
    const auto cells = run_sweep(base, {0.5}, {1}, {42});
    REQUIRE(cells.size() == 1);
    REQUIRE(cells[0].bundle.has_value());
    CHECK(cells[0].status == "ok");

    const ResultBundle direct = run_experiment(sweep_cell_config(base, 0.5, 1, 42));
    CHECK(cells[0].bundle->fingerprint == direct.fingerprint);
    REQUIRE(cells[0].bundle->rounds.size() == direct.rounds.size());
    for (size_t r = 0; r < direct.rounds.size(); ++r) {
        CHECK(cells[0].bundle->rounds[r].global_update_norm ==
              direct.rounds[r].global_update_norm);
        CHECK(cells[0].bundle->rounds[r].per_client_accuracy ==
              direct.rounds[r].per_client_accuracy);
    }
}

TEST_CASE("run_sweep: per-seed outputs differ but reproduce themselves") {
    ExperimentConfig base = small_config();
    const auto cells = run_sweep(base, {0.3}, {1}, {1, 2, 3});
    REQUIRE(cells.size() == 3);
    const auto again = run_sweep(base, {0.3}, {1}, {1, 2, 3});
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(cells[i].bundle.has_value());
        CHECK(cells[i].bundle->rounds.back().global_update_norm ==
              again[i].bundle->rounds.back().global_update_norm);
    }
    CHECK(cells[0].bundle->rounds.back().global_update_norm !=
          cells[1].bundle->rounds.back().global_update_norm);
}

TEST_CASE("run_sweep: a failing cell is recorded and the sweep continues") {
    ExperimentConfig base = small_config();
    const auto cells = run_sweep(base, {0.5}, {99, 1}, {7});
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].status.substr(0, 5) == "error");
    CHECK_FALSE(cells[0].bundle.has_value());
    CHECK(cells[1].status == "ok");

    TempDir dir("fedsim_sweep_out");
    emit_sweep_outputs(cells, base, dir.path);
    CHECK(fs::exists(dir.path / "sweep_summary.csv"));
    CHECK(fs::exists(dir.path / "sweep_table.csv"));
}

TEST_CASE("charts: svg files appear when enabled") {
    ExperimentConfig cfg = small_config();
    cfg.emit_charts = true;
    cfg.paired_counterfactual = true;
    cfg.selfish_roster = {{0, 0.5, true}};
    const ResultBundle bundle = run_experiment(cfg);
    TempDir dir("fedsim_charts");
    emit_outputs(bundle, dir.path);
    REQUIRE(fs::exists(dir.path / "accuracy_vs_round.svg"));
    const std::string svg = slurp(dir.path / "accuracy_vs_round.svg");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("polyline") != std::string::npos);
}
