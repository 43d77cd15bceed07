#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fedsim/aggregation.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/selfish.hpp"

using namespace fedsim;

namespace {

UpdateVector random_vector(Rng& rng, size_t dim, double scale = 1.0) {
    UpdateVector v(dim);
    for (double& x : v) x = rng.normal(0.0, scale);
    return v;
}

UpdateVector random_unit(Rng& rng, size_t dim) {
    UpdateVector v = random_vector(rng, dim);
    const double n = norm(v);
    for (double& x : v) x /= n;
    return v;
}

// Straight-line re-implementation of the RFL-Self round, independent of the
// library aggregation path. Deliberately mirrors the published step order:
// norms, median norm, marginal median, flagging, per-suspect beta and
// recovery, split-sum aggregation.
UpdateVector rflself_transcription(const std::vector<std::pair<int, UpdateVector>>& input) {
    std::vector<std::pair<int, UpdateVector>> updates = input;
    std::sort(updates.begin(), updates.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const size_t k = updates.size();
    const size_t dim = updates.front().second.size();

    std::vector<double> norms(k);
    for (size_t i = 0; i < k; ++i) {
        double s = 0.0;
        for (double x : updates[i].second) s += x * x;
        norms[i] = std::sqrt(s);
    }
    std::vector<double> sorted_norms = norms;
    std::sort(sorted_norms.begin(), sorted_norms.end());
    const double n_med = (k % 2 == 1)
                             ? sorted_norms[k / 2]
                             : (sorted_norms[k / 2 - 1] + sorted_norms[k / 2]) / 2.0;

    UpdateVector med(dim);
    std::vector<double> column(k);
    for (size_t j = 0; j < dim; ++j) {
        for (size_t i = 0; i < k; ++i) column[i] = updates[i].second[j];
        std::sort(column.begin(), column.end());
        med[j] = (k % 2 == 1) ? column[k / 2] : (column[k / 2 - 1] + column[k / 2]) / 2.0;
    }

    std::vector<bool> suspect(k, false);
    for (size_t i = 0; i < k; ++i) suspect[i] = norms[i] > n_med;

    std::vector<UpdateVector> recovered(k);
    for (size_t i = 0; i < k; ++i) {
        if (!suspect[i]) continue;
        const UpdateVector& hat = updates[i].second;
        UpdateVector diff(dim);
        for (size_t j = 0; j < dim; ++j) diff[j] = hat[j] - med[j];
        double a = 0.0, half_b = 0.0, med_sq = 0.0;
        for (size_t j = 0; j < dim; ++j) {
            a += diff[j] * diff[j];
            half_b += med[j] * diff[j];
            med_sq += med[j] * med[j];
        }
        const double b = 2.0 * half_b;
        const double c = med_sq - n_med * n_med;
        double beta = 0.0;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double r1 = (-b - sq) / (2.0 * a);
            const double r2 = (-b + sq) / (2.0 * a);
            bool found = false;
            for (double r : {r1, r2}) {
                if (r >= 0.0 && r <= 1.0 && (!found || r > beta)) {
                    beta = r;
                    found = true;
                }
            }
        }
        recovered[i].resize(dim);
        for (size_t j = 0; j < dim; ++j) {
            recovered[i][j] = beta * hat[j] + (1.0 - beta) * med[j];
        }
    }

    UpdateVector total(dim, 0.0);
    for (size_t i = 0; i < k; ++i) {
        if (!suspect[i]) {
            for (size_t j = 0; j < dim; ++j) total[j] += updates[i].second[j];
        }
    }
    for (size_t i = 0; i < k; ++i) {
        if (suspect[i]) {
            for (size_t j = 0; j < dim; ++j) total[j] += recovered[i][j];
        }
    }
    for (size_t j = 0; j < dim; ++j) total[j] /= static_cast<double>(k);
    return total;
}

}  // namespace

TEST_CASE("flag_suspects: strictly above the median norm") {
    const std::vector<std::pair<int, UpdateVector>> updates{
        {7, {1, 0}}, {8, {0, 2}}, {9, {3, 0}}};
    CHECK(flag_suspects(updates) == std::set<int>{9});

    const std::vector<std::pair<int, UpdateVector>> equal{
        {0, {2, 0}}, {1, {0, 2}}, {2, {-2, 0}}};
    CHECK(flag_suspects(equal).empty());
}

TEST_CASE("flag_suspects: strictly-above-median count for 50 continuous norms") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<int, UpdateVector>> updates;
        for (int i = 0; i < 50; ++i) {
            UpdateVector v = random_unit(rng, 8);
            const double len = rng.uniform(0.1, 10.0);
            updates.emplace_back(i, scale(v, len));
        }
        const size_t s = flag_suspects(updates).size();
        CHECK(s >= 24);
        CHECK(s <= 25);
    }
}

TEST_CASE("solve_beta: worked quadratics") {
    // (1-b)^2 + 4b^2 = 1 -> roots {0, 0.4}
    CHECK(solve_beta({0, 2}, {1, 0}, 1.0) == doctest::Approx(0.4));
    // |1+b| = 1 -> roots {0, -2}
    CHECK(solve_beta({2, 0}, {1, 0}, 1.0) == doctest::Approx(0.0));
    // ||b*[2,0]|| = 1 -> b = 0.5
    CHECK(solve_beta({2, 0}, {0, 0}, 1.0) == doctest::Approx(0.5));

    CHECK_THROWS_AS(solve_beta({1, 0}, {1, 0}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(solve_beta({1, 0}, {0, 1}, 2.0), std::invalid_argument);
}

TEST_CASE("recover_update: endpoints") {
    const UpdateVector hat{3, 4};
    const UpdateVector med{1, 0};
    CHECK(recover_update(hat, med, 0.0) == med);
    CHECK(recover_update(hat, med, 1.0) == hat);
    CHECK_THROWS_AS(recover_update(hat, med, 1.5), std::invalid_argument);
}

TEST_CASE("recover_update: exact recovery under the ideal conditions") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = (trial % 2 == 0) ? 5 : 50;
        const size_t dim = 32;
        const UpdateVector delta_s = random_unit(rng, dim);
        const UpdateVector delta_bar = random_unit(rng, dim);
        double alpha;
        do {
            alpha = rng.uniform(0.1, 0.9);
        } while (alpha * k <= 1.0 + 1e-9);
        const UpdateVector hat = craft_selfish_update(delta_s, delta_bar, alpha, k);
        const double n_med = 1.0;  // == ||delta_s||
        const double beta = solve_beta(hat, delta_bar, n_med);
        const UpdateVector rec = recover_update(hat, delta_bar, beta);
        CHECK(norm(subtract(rec, delta_s)) < 1e-6);
    }
}

TEST_CASE("downscale_update: rescales without rotating") {
    const UpdateVector hat{0, 4};
    const UpdateVector out = downscale_update(hat, 2.0);
    CHECK(norm(out) == doctest::Approx(2.0));
    CHECK(angle_degrees(hat, out) == doctest::Approx(0.0));
    CHECK(downscale_update({3, 0}, 3.0) == UpdateVector{3, 0});
    CHECK_THROWS_AS(downscale_update({0, 0}, 1.0), std::invalid_argument);
}

TEST_CASE("aggregate: identical updates are a fixed point of every strategy") {
    const UpdateVector x{0.5, -1.0, 2.0};
    std::vector<std::pair<int, UpdateVector>> updates;
    for (int i = 0; i < 5; ++i) updates.emplace_back(i, x);
    for (AggregationStrategy s :
         {AggregationStrategy::FedAvg, AggregationStrategy::MarginalMedian,
          AggregationStrategy::Downscale, AggregationStrategy::RflSelf}) {
        const AggregationOutcome out = aggregate(updates, s);
        CHECK(norm(subtract(out.global_update, x)) <= 1e-15);
        CHECK(out.suspects.empty());
    }
}

TEST_CASE("aggregate: FedAvg mean") {
    const AggregationOutcome out =
        aggregate({{0, {0, 2}}, {1, {2, 0}}}, AggregationStrategy::FedAvg);
    CHECK(out.global_update == UpdateVector{1, 1});
    CHECK(out.suspects.empty());
    CHECK_THROWS_AS(aggregate({{0, {1}}, {1, {1, 2}}}, AggregationStrategy::FedAvg),
                    std::invalid_argument);
}

TEST_CASE("aggregate: RflSelf on the three-client example matches the transcription") {
    const std::vector<std::pair<int, UpdateVector>> updates{
        {0, {1, 0}}, {1, {0, 1}}, {2, {10, 0}}};
    const AggregationOutcome out = aggregate(updates, AggregationStrategy::RflSelf);
    CHECK(out.suspects == std::set<int>{2});
    REQUIRE(out.betas.count(2) == 1);
    REQUIRE(out.recovered.count(2) == 1);
    // Recovered norm hits the median of norms (1.0 here).
    CHECK(norm(out.recovered.at(2)) == doctest::Approx(1.0));
    CHECK(out.global_update == rflself_transcription(updates));
}

TEST_CASE("aggregate: RflSelf equals the straight-line transcription bit for bit") {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + rng.below_int(8);   // k <= 9
        const size_t dim = 1 + rng.below(20);  // d <= 20
        std::vector<std::pair<int, UpdateVector>> updates;
        for (int i = 0; i < k; ++i) {
            // Mix of tame and inflated updates so suspects exist.
            const double s = (rng.uniform01() < 0.3) ? 5.0 : 1.0;
            updates.emplace_back(i, random_vector(rng, dim, s));
        }
        const AggregationOutcome out = aggregate(updates, AggregationStrategy::RflSelf);
        CHECK(out.global_update == rflself_transcription(updates));
    }
}

TEST_CASE("aggregate: Downscale replaces suspects and keeps direction") {
    const std::vector<std::pair<int, UpdateVector>> updates{
        {0, {1, 0}}, {1, {0, 1}}, {2, {0, 8}}};
    const AggregationOutcome out = aggregate(updates, AggregationStrategy::Downscale);
    CHECK(out.suspects == std::set<int>{2});
    CHECK(out.betas.empty());
    REQUIRE(out.recovered.count(2) == 1);
    CHECK(norm(out.recovered.at(2)) == doctest::Approx(1.0));
    CHECK(angle_degrees(out.recovered.at(2), {0, 8}) == doctest::Approx(0.0));
}

TEST_CASE("aggregate: non-suspect updates enter the RflSelf sum bit-identically") {
    Rng rng(44);
    std::vector<std::pair<int, UpdateVector>> updates;
    for (int i = 0; i < 7; ++i) {
        updates.emplace_back(i, random_vector(rng, 6, i < 2 ? 6.0 : 1.0));
    }
    const AggregationOutcome out = aggregate(updates, AggregationStrategy::RflSelf);
    // Re-run with every non-suspect update replaced by itself: removing the
    // suspects' contribution must leave exactly the non-suspect sum.
    UpdateVector expected(6, 0.0);
    for (const auto& [id, u] : updates) {
        if (!out.suspects.count(id)) {
            for (size_t j = 0; j < 6; ++j) expected[j] += u[j];
        }
    }
    for (const auto& [id, r] : out.recovered) {
        (void)id;
        for (size_t j = 0; j < 6; ++j) expected[j] += r[j];
    }
    for (size_t j = 0; j < 6; ++j) expected[j] /= 7.0;
    CHECK(out.global_update == expected);
}

TEST_CASE("aggregate: every RflSelf recovered update has norm N_med (1e-9 relative)") {
    Rng rng(45);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 3 + rng.below_int(12);
        const size_t dim = 2 + rng.below(16);
        std::vector<std::pair<int, UpdateVector>> updates;
        for (int i = 0; i < k; ++i) {
            const double s = (i % 3 == 0) ? 4.0 : 1.0;
            updates.emplace_back(i, random_vector(rng, dim, s));
        }
        std::vector<UpdateVector> values;
        for (auto& [id, u] : updates) values.push_back(u);
        const double n_med = median_norm(values);
        const AggregationOutcome out = aggregate(updates, AggregationStrategy::RflSelf);
        for (const auto& [id, r] : out.recovered) {
            (void)id;
            // beta can fall back to 0 only if no admissible root exists; with
            // these inputs the median norm is reachable, so check the target.
            CHECK(std::fabs(norm(r) - n_med) <= 1e-9 * n_med);
        }
    }
}

TEST_CASE("theorem-2 style audit: recovered aggregate stays within the variance bound") {
    Rng rng(46);
    const int k = 50;
    const size_t dim = 100;
    for (int trial = 0; trial < 50; ++trial) {
        const int selfish_count = rng.below_int(11);
        std::vector<UpdateVector> truth;
        const UpdateVector mu = random_vector(rng, dim, 1.0);
        for (int i = 0; i < k; ++i) {
            truth.push_back(add(mu, random_vector(rng, dim, 0.5)));
        }
        std::vector<std::pair<int, UpdateVector>> sent;
        for (int i = 0; i < k; ++i) {
            if (i < selfish_count) {
                const double alpha = rng.uniform(0.05, 0.4);
                UpdateVector bar(dim, 0.0);
                for (int j = 0; j < k; ++j) {
                    if (j == i) continue;
                    for (size_t t = 0; t < dim; ++t) bar[t] += truth[j][t];
                }
                for (size_t t = 0; t < dim; ++t) bar[t] /= (k - 1);
                sent.emplace_back(i, craft_selfish_update(truth[i], bar, alpha, k));
            } else {
                sent.emplace_back(i, truth[i]);
            }
        }
        UpdateVector true_mean(dim, 0.0);
        for (const auto& u : truth) {
            for (size_t t = 0; t < dim; ++t) true_mean[t] += u[t];
        }
        for (size_t t = 0; t < dim; ++t) true_mean[t] /= k;

        const AggregationOutcome out = aggregate(sent, AggregationStrategy::RflSelf);
        const double err = norm(subtract(true_mean, out.global_update));
        CHECK(err * err <= theorem2_bound(truth, k));
    }
}

TEST_CASE("no selfish clients: FedAvg and RflSelf stay close under symmetric noise") {
    Rng rng(47);
    const int k = 30;
    const size_t dim = 40;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<UpdateVector> truth;
        std::vector<std::pair<int, UpdateVector>> sent;
        const UpdateVector mu = random_vector(rng, dim, 1.0);
        for (int i = 0; i < k; ++i) {
            truth.push_back(add(mu, random_vector(rng, dim, 0.3)));
            sent.emplace_back(i, truth.back());
        }
        const UpdateVector avg = aggregate(sent, AggregationStrategy::FedAvg).global_update;
        const UpdateVector rfl = aggregate(sent, AggregationStrategy::RflSelf).global_update;

        double trace = 0.0;
        for (size_t j = 0; j < dim; ++j) {
            double mean = 0.0;
            for (const auto& u : truth) mean += u[j];
            mean /= k;
            double var = 0.0;
            for (const auto& u : truth) var += (u[j] - mean) * (u[j] - mean);
            trace += var / k;
        }
        CHECK(norm(subtract(avg, rfl)) <= std::sqrt(trace));
    }
}

TEST_CASE("downscaling recovers worse than RflSelf under the ideal conditions") {
    Rng rng(48);
    int rfl_wins = 0;
    const int trials = 500;
    for (int trial = 0; trial < trials; ++trial) {
        const int k = (trial % 2 == 0) ? 5 : 50;
        const size_t dim = 24;
        const UpdateVector delta_s = random_unit(rng, dim);
        const UpdateVector delta_bar = random_unit(rng, dim);
        double alpha;
        do {
            alpha = rng.uniform(0.1, 0.9);
        } while (alpha * k <= 1.0 + 1e-9);
        const UpdateVector hat = craft_selfish_update(delta_s, delta_bar, alpha, k);
        const double n_med = 1.0;
        const UpdateVector rfl =
            recover_update(hat, delta_bar, solve_beta(hat, delta_bar, n_med));
        const UpdateVector down = downscale_update(hat, n_med);
        if (norm(subtract(down, delta_s)) > norm(subtract(rfl, delta_s))) ++rfl_wins;
    }
    CHECK(rfl_wins >= trials * 9 / 10);
}

TEST_CASE("apply_update: addition into a fresh model") {
    Architecture arch{ArchKind::LogisticRegression, 2, 0, 2};
    ModelParams w{arch, {1, 2, 3, 4, 5, 6}};
    const ModelParams same = apply_update(w, UpdateVector(6, 0.0));
    CHECK(same.weights == w.weights);

    const UpdateVector delta{0.5, -0.5, 1, -1, 2, -2};
    const ModelParams fwd = apply_update(w, delta);
    const ModelParams back = apply_update(fwd, scale(delta, -1.0));
    CHECK(norm(subtract(back.weights, w.weights)) <= 1e-15);
    CHECK(norm(subtract(fwd.weights, w.weights)) == doctest::Approx(norm(delta)));
    CHECK_THROWS_AS(apply_update(w, UpdateVector(5, 0.0)), std::invalid_argument);
}
