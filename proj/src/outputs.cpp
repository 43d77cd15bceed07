#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "fedsim/experiment.hpp"
#include "fedsim/svg.hpp"

namespace fedsim {

namespace {

using nlohmann::json;

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

double mean_group_accuracy(const RoundRecord& rec, const std::set<int>& group) {
    double sum = 0.0;
    int n = 0;
    for (const auto& [id, acc] : rec.per_client_accuracy) {
        if (group.count(id)) {
            sum += acc;
            ++n;
        }
    }
    return n > 0 ? sum / n : 0.0;
}

json stats_json(const GroupStats& s) {
    return {{"count", s.count}, {"mean", s.mean}, {"std", s.stddev}};
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void emit_outputs(const ResultBundle& bundle, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());

    const ExperimentConfig& cfg = bundle.config;
    std::set<int> selfish_ids;
    for (const SelfishSpec& s : cfg.selfish_roster) selfish_ids.insert(s.client);

    {
        auto out = open_for_write(dir / "rounds.csv");
        out << "round,strategy,global_update_norm,deviation_norm_ratio,"
               "deviation_angle_deg,num_suspects\n";
        for (const RoundRecord& rec : bundle.rounds) {
            out << rec.round << ',' << csv_quote(to_string(rec.strategy)) << ','
                << format_double(rec.global_update_norm) << ',';
            if (rec.deviation_norm_ratio) out << format_double(*rec.deviation_norm_ratio);
            out << ',';
            if (rec.deviation_angle_deg) out << format_double(*rec.deviation_angle_deg);
            out << ',' << rec.suspects.size() << '\n';
        }
    }

    {
        auto out = open_for_write(dir / "accuracy.csv");
        out << "round,client_id,role,accuracy,sent_norm,beta,recovery_error\n";
        for (const RoundRecord& rec : bundle.rounds) {
            for (const auto& [id, acc] : rec.per_client_accuracy) {
                out << rec.round << ',' << id << ','
                    << (selfish_ids.count(id) ? "selfish" : "normal") << ','
                    << format_double(acc) << ',';
                auto norm_it = rec.per_client_sent_norm.find(id);
                if (norm_it != rec.per_client_sent_norm.end()) {
                    out << format_double(norm_it->second);
                }
                out << ',';
                auto beta_it = rec.betas.find(id);
                if (beta_it != rec.betas.end()) out << format_double(beta_it->second);
                out << ',';
                auto err_it = rec.recovery_errors.find(id);
                if (err_it != rec.recovery_errors.end()) out << format_double(err_it->second);
                out << '\n';
            }
        }
    }

    {
        json summary;
        summary["config_fingerprint"] = bundle.fingerprint;
        summary["strategy"] = to_string(cfg.strategy);
        summary["diverged"] = bundle.diverged;
        if (bundle.diverged) {
            summary["diverged_round"] = bundle.diverged_round;
            summary["diverged_client"] = bundle.diverged_client;
        }
        summary["rounds_completed"] = bundle.rounds.size();
        summary["normal_accuracy"] = stats_json(bundle.summary.normal_accuracy);
        if (bundle.summary.selfish_accuracy) {
            summary["selfish_accuracy"] = stats_json(*bundle.summary.selfish_accuracy);
        }

        json series;
        json rounds = json::array(), norms = json::array(), suspects = json::array();
        json normal_acc = json::array(), selfish_acc = json::array();
        json dev_ratio = json::array(), dev_angle = json::array();
        bool any_dev = false;
        std::set<int> normal_ids;
        for (int c = 0; c < cfg.k; ++c) {
            if (!selfish_ids.count(c)) normal_ids.insert(c);
        }
        for (const RoundRecord& rec : bundle.rounds) {
            rounds.push_back(rec.round);
            norms.push_back(rec.global_update_norm);
            suspects.push_back(rec.suspects.size());
            normal_acc.push_back(mean_group_accuracy(rec, normal_ids));
            if (!selfish_ids.empty()) {
                selfish_acc.push_back(mean_group_accuracy(rec, selfish_ids));
            }
            if (rec.deviation_norm_ratio) {
                any_dev = true;
                dev_ratio.push_back(*rec.deviation_norm_ratio);
                dev_angle.push_back(rec.deviation_angle_deg ? json(*rec.deviation_angle_deg)
                                                            : json());
            } else if (bundle.paired) {
                dev_ratio.push_back(json());
                dev_angle.push_back(json());
            }
        }
        series["round"] = rounds;
        series["global_update_norm"] = norms;
        series["num_suspects"] = suspects;
        series["mean_normal_accuracy"] = normal_acc;
        if (!selfish_ids.empty()) series["mean_selfish_accuracy"] = selfish_acc;
        if (bundle.paired && any_dev) {
            series["deviation_norm_ratio"] = dev_ratio;
            series["deviation_angle_deg"] = dev_angle;
        }
        summary["series"] = series;

        if (bundle.paired) {
            json paired;
            paired["normal_accuracy"] = stats_json(bundle.paired->normal_accuracy);
            paired["series"] = {
                {"mean_normal_accuracy", bundle.paired->mean_normal_accuracy}};
            summary["paired"] = paired;
        }

        auto out = open_for_write(dir / "summary.json");
        out << summary.dump(2) << '\n';
    }

    if (cfg.emit_charts && !bundle.rounds.empty()) {
        std::vector<ChartSeries> series;
        ChartSeries normal{"normal clients", {}, {}};
        ChartSeries selfish{"selfish clients", {}, {}};
        ChartSeries counterfactual{"all-normal twin", {}, {}};
        std::set<int> normal_ids;
        for (int c = 0; c < cfg.k; ++c) {
            if (!selfish_ids.count(c)) normal_ids.insert(c);
        }
        for (const RoundRecord& rec : bundle.rounds) {
            normal.x.push_back(rec.round);
            normal.y.push_back(mean_group_accuracy(rec, normal_ids));
            if (!selfish_ids.empty()) {
                selfish.x.push_back(rec.round);
                selfish.y.push_back(mean_group_accuracy(rec, selfish_ids));
            }
        }
        if (bundle.paired) {
            for (size_t i = 0; i < bundle.paired->mean_normal_accuracy.size(); ++i) {
                counterfactual.x.push_back(static_cast<double>(i + 1));
                counterfactual.y.push_back(bundle.paired->mean_normal_accuracy[i]);
            }
        }
        series.push_back(std::move(normal));
        if (!selfish_ids.empty()) series.push_back(std::move(selfish));
        if (bundle.paired) series.push_back(std::move(counterfactual));
        write_line_chart(dir / "accuracy_vs_round.svg", "Mean accuracy per round", "round",
                         "accuracy", series);
    }
}

void emit_sweep_outputs(const std::vector<SweepCell>& cells,
                        const ExperimentConfig& base,
                        const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());

    {
        auto out = open_for_write(dir / "sweep_summary.csv");
        out << "alpha,selfish_count,seed,status,normal_mean,normal_std,selfish_mean,"
               "selfish_std,paired_normal_mean,max_deviation_norm_ratio\n";
        for (const SweepCell& cell : cells) {
            out << format_double(cell.alpha) << ',' << cell.selfish_count << ',' << cell.seed
                << ',' << csv_quote(cell.status) << ',';
            if (cell.bundle && !cell.bundle->rounds.empty()) {
                const ExperimentSummary& s = cell.bundle->summary;
                out << format_double(s.normal_accuracy.mean) << ','
                    << format_double(s.normal_accuracy.stddev) << ',';
                if (s.selfish_accuracy) {
                    out << format_double(s.selfish_accuracy->mean) << ','
                        << format_double(s.selfish_accuracy->stddev) << ',';
                } else {
                    out << ",,";
                }
                if (cell.bundle->paired) {
                    out << format_double(cell.bundle->paired->normal_accuracy.mean);
                }
                out << ',';
                double max_ratio = 0.0;
                bool have_ratio = false;
                for (const RoundRecord& rec : cell.bundle->rounds) {
                    if (rec.deviation_norm_ratio) {
                        max_ratio = std::max(max_ratio, *rec.deviation_norm_ratio);
                        have_ratio = true;
                    }
                }
                if (have_ratio) out << format_double(max_ratio);
                out << '\n';
            } else {
                out << ",,,,,\n";
            }
        }
    }

    {
        // Aggregated view: one row per (alpha, count), averaged over seeds.
        auto out = open_for_write(dir / "sweep_table.csv");
        out << "alpha,selfish_count,strategy,cells,normal_mean,normal_std,selfish_mean,"
               "selfish_std\n";
        std::map<std::pair<double, int>, std::vector<const SweepCell*>> groups;
        for (const SweepCell& cell : cells) {
            groups[{cell.alpha, cell.selfish_count}].push_back(&cell);
        }
        for (const auto& [key, members] : groups) {
            double nm = 0, ns = 0, sm = 0, ss = 0;
            int n = 0, n_selfish = 0;
            for (const SweepCell* cell : members) {
                if (!cell->bundle || cell->bundle->rounds.empty()) continue;
                const ExperimentSummary& s = cell->bundle->summary;
                nm += s.normal_accuracy.mean;
                ns += s.normal_accuracy.stddev;
                if (s.selfish_accuracy) {
                    sm += s.selfish_accuracy->mean;
                    ss += s.selfish_accuracy->stddev;
                    ++n_selfish;
                }
                ++n;
            }
            out << format_double(key.first) << ',' << key.second << ','
                << csv_quote(to_string(base.strategy)) << ',' << n << ',';
            if (n > 0) out << format_double(nm / n) << ',' << format_double(ns / n);
            else out << ',';
            out << ',';
            if (n_selfish > 0) {
                out << format_double(sm / n_selfish) << ',' << format_double(ss / n_selfish);
            } else {
                out << ',';
            }
            out << '\n';
        }
    }

    for (const SweepCell& cell : cells) {
        if (!cell.bundle) continue;
        const std::string name = "a" + format_double(cell.alpha) + "_s" +
                                 std::to_string(cell.selfish_count) + "_seed" +
                                 std::to_string(cell.seed);
        emit_outputs(*cell.bundle, dir / "cells" / name);
    }

    // Deviation-vs-alpha charts over the paired cells.
    std::set<double> alphas;
    for (const SweepCell& cell : cells) alphas.insert(cell.alpha);
    if (base.emit_charts && alphas.size() >= 2) {
        std::map<int, ChartSeries> ratio_series, angle_series;
        std::map<std::pair<double, int>, std::pair<double, int>> ratio_acc, angle_acc;
        for (const SweepCell& cell : cells) {
            if (!cell.bundle) continue;
            for (const RoundRecord& rec : cell.bundle->rounds) {
                if (rec.deviation_norm_ratio) {
                    auto& r = ratio_acc[{cell.alpha, cell.selfish_count}];
                    r.first += *rec.deviation_norm_ratio;
                    r.second += 1;
                }
                if (rec.deviation_angle_deg) {
                    auto& a = angle_acc[{cell.alpha, cell.selfish_count}];
                    a.first += *rec.deviation_angle_deg;
                    a.second += 1;
                }
            }
        }
        if (!ratio_acc.empty()) {
            for (const auto& [key, acc] : ratio_acc) {
                auto& s = ratio_series[key.second];
                s.label = std::to_string(key.second) + " selfish";
                s.x.push_back(key.first);
                s.y.push_back(acc.first / acc.second);
            }
            for (const auto& [key, acc] : angle_acc) {
                auto& s = angle_series[key.second];
                s.label = std::to_string(key.second) + " selfish";
                s.x.push_back(key.first);
                s.y.push_back(acc.first / acc.second);
            }
            std::vector<ChartSeries> rs, as;
            for (auto& [count, s] : ratio_series) rs.push_back(std::move(s));
            for (auto& [count, s] : angle_series) as.push_back(std::move(s));
            write_line_chart(dir / "deviation_norm_vs_alpha.svg",
                             "Global-update norm ratio vs selfishness", "alpha",
                             "norm ratio", rs);
            write_line_chart(dir / "deviation_angle_vs_alpha.svg",
                             "Global-update angle vs selfishness", "alpha",
                             "angle (degrees)", as);
        }
    }
}

}  // namespace fedsim
