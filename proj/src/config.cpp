#include "fedsim/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace fedsim {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
        }
    }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(j, {"k", "rounds", "local", "model", "dataset", "partition_seed",
                            "global_seed", "strategy", "selfish", "paired_counterfactual",
                            "instrumented", "emit_charts", "output_dir"},
                        "config");

    ExperimentConfig cfg;
    read_field(j, "k", cfg.k);
    read_field(j, "rounds", cfg.rounds);
    read_field(j, "partition_seed", cfg.partition_seed);
    read_field(j, "global_seed", cfg.global_seed);
    read_field(j, "paired_counterfactual", cfg.paired_counterfactual);
    read_field(j, "instrumented", cfg.instrumented);
    read_field(j, "emit_charts", cfg.emit_charts);
    read_field(j, "output_dir", cfg.output_dir);

    if (j.contains("strategy")) {
        try {
            cfg.strategy = strategy_from_string(j.at("strategy").get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    if (j.contains("local")) {
        const json& l = j.at("local");
        reject_unknown_keys(l, {"epochs", "batch_size", "learning_rate"}, "local");
        read_field(l, "epochs", cfg.local.epochs);
        read_field(l, "batch_size", cfg.local.batch_size);
        read_field(l, "learning_rate", cfg.local.learning_rate);
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown_keys(m, {"type", "hidden"}, "model");
        std::string type = "logistic";
        read_field(m, "type", type);
        if (type == "logistic") {
            cfg.model.kind = ArchKind::LogisticRegression;
        } else if (type == "mlp") {
            cfg.model.kind = ArchKind::Mlp;
        } else {
            throw ConfigError("model.type must be \"logistic\" or \"mlp\"");
        }
        read_field(m, "hidden", cfg.model.hidden);
    }

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        std::string type = "synthetic";
        read_field(d, "type", type);
        if (type == "synthetic") {
            reject_unknown_keys(
                d, {"type", "classes", "features", "per_class", "spread", "seed"}, "dataset");
            cfg.dataset.synthetic = true;
            read_field(d, "classes", cfg.dataset.syn.classes);
            read_field(d, "features", cfg.dataset.syn.features);
            read_field(d, "per_class", cfg.dataset.syn.per_class);
            read_field(d, "spread", cfg.dataset.syn.spread);
            read_field(d, "seed", cfg.dataset.syn.seed);
        } else if (type == "idx") {
            reject_unknown_keys(d, {"type", "images", "labels"}, "dataset");
            cfg.dataset.synthetic = false;
            read_field(d, "images", cfg.dataset.idx.images);
            read_field(d, "labels", cfg.dataset.idx.labels);
            if (cfg.dataset.idx.images.empty() || cfg.dataset.idx.labels.empty()) {
                throw ConfigError("idx dataset needs both \"images\" and \"labels\" paths");
            }
        } else {
            throw ConfigError("dataset.type must be \"synthetic\" or \"idx\"");
        }
    }

    if (j.contains("selfish")) {
        const json& roster = j.at("selfish");
        if (!roster.is_array()) throw ConfigError("\"selfish\" must be an array");
        for (const json& entry : roster) {
            reject_unknown_keys(entry, {"client", "alpha", "k_mode"}, "selfish entry");
            SelfishSpec s;
            read_field(entry, "client", s.client);
            read_field(entry, "alpha", s.alpha);
            if (entry.contains("k_mode")) {
                const std::string mode = entry.at("k_mode").get<std::string>();
                if (mode == "known") {
                    s.k_known = true;
                } else if (mode == "estimated") {
                    s.k_known = false;
                } else {
                    throw ConfigError("k_mode must be \"known\" or \"estimated\"");
                }
            }
            cfg.selfish_roster.push_back(s);
        }
    }

    // Cross-field validation.
    if (cfg.k < 1) throw ConfigError("k must be >= 1");
    if (cfg.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (cfg.local.epochs < 1 || cfg.local.batch_size < 1 || !(cfg.local.learning_rate > 0)) {
        throw ConfigError("local training settings out of range");
    }
    if (cfg.model.kind == ArchKind::Mlp && cfg.model.hidden < 1) {
        throw ConfigError("model.hidden must be >= 1 for mlp");
    }
    std::set<int> ids;
    for (const SelfishSpec& s : cfg.selfish_roster) {
        if (s.client < 0 || s.client >= cfg.k) {
            throw ConfigError("selfish client id " + std::to_string(s.client) +
                              " outside [0, k)");
        }
        if (!(s.alpha >= 0.0 && s.alpha <= 1.0)) {
            throw ConfigError("selfish alpha must lie in [0,1]");
        }
        if (!ids.insert(s.client).second) {
            throw ConfigError("duplicate selfish client id " + std::to_string(s.client));
        }
    }
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["k"] = cfg.k;
    j["rounds"] = cfg.rounds;
    j["local"] = {{"epochs", cfg.local.epochs},
                  {"batch_size", cfg.local.batch_size},
                  {"learning_rate", cfg.local.learning_rate}};
    j["model"] = {{"type", cfg.model.kind == ArchKind::Mlp ? "mlp" : "logistic"},
                  {"hidden", cfg.model.hidden}};
    if (cfg.dataset.synthetic) {
        j["dataset"] = {{"type", "synthetic"},
                        {"classes", cfg.dataset.syn.classes},
                        {"features", cfg.dataset.syn.features},
                        {"per_class", cfg.dataset.syn.per_class},
                        {"spread", cfg.dataset.syn.spread},
                        {"seed", cfg.dataset.syn.seed}};
    } else {
        j["dataset"] = {{"type", "idx"},
                        {"images", cfg.dataset.idx.images},
                        {"labels", cfg.dataset.idx.labels}};
    }
    j["partition_seed"] = cfg.partition_seed;
    j["global_seed"] = cfg.global_seed;
    j["strategy"] = to_string(cfg.strategy);
    json roster = json::array();
    for (const SelfishSpec& s : cfg.selfish_roster) {
        roster.push_back({{"client", s.client},
                          {"alpha", s.alpha},
                          {"k_mode", s.k_known ? "known" : "estimated"}});
    }
    j["selfish"] = roster;
    j["paired_counterfactual"] = cfg.paired_counterfactual;
    j["instrumented"] = cfg.instrumented;
    j["emit_charts"] = cfg.emit_charts;
    j["output_dir"] = cfg.output_dir;
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    ExperimentConfig cfg = config_from_json(j);
    if (!j.contains("output_dir")) {
        if (const char* env = std::getenv("FEDSIM_OUTPUT_DIR")) cfg.output_dir = env;
    }
    return cfg;
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    // FNV-1a, 64 bit.
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace fedsim
