#include "fedsim/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim {

PartitionPlan partition_two_class(const Dataset& data, int k, uint64_t seed) {
    const int classes = data.num_classes;
    if (k < 1) throw std::invalid_argument("partition_two_class: k must be >= 1");
    if (classes < 2) throw std::invalid_argument("partition_two_class: need at least 2 classes");
    if (2 * k < classes) {
        throw std::invalid_argument(
            "partition_two_class: 2*k < classes, cannot cover every class");
    }

    Rng rng(derive_seed(seed, 0, 0));

    // Deal shuffled classes to shuffled clients so every class has an owner,
    // then fill the remaining slots with uniform draws.
    std::vector<int> class_order(classes);
    std::iota(class_order.begin(), class_order.end(), 0);
    rng.shuffle(class_order);
    std::vector<int> client_order(k);
    std::iota(client_order.begin(), client_order.end(), 0);
    rng.shuffle(client_order);

    std::vector<std::vector<int>> client_classes(k);
    for (int i = 0; i < classes; ++i) {
        client_classes[client_order[i % k]].push_back(class_order[i]);
    }
    for (int c = 0; c < k; ++c) {
        while (static_cast<int>(client_classes[c].size()) < 2) {
            const int draw = rng.below_int(classes);
            if (std::find(client_classes[c].begin(), client_classes[c].end(), draw) ==
                client_classes[c].end()) {
                client_classes[c].push_back(draw);
            }
        }
    }

    // Owners per class, in ascending client order for reproducible chunking.
    std::vector<std::vector<int>> owners(classes);
    for (int c = 0; c < k; ++c) {
        for (int cls : client_classes[c]) owners[cls].push_back(c);
    }
    for (auto& o : owners) std::sort(o.begin(), o.end());

    std::vector<std::vector<int>> samples_by_class(classes);
    for (int i = 0; i < data.num_samples; ++i) {
        samples_by_class[data.labels[i]].push_back(i);
    }

    PartitionPlan plan;
    plan.assignments.resize(k);
    plan.classes_per_client = 2;
    plan.seed = seed;

    for (int cls = 0; cls < classes; ++cls) {
        auto& pool = samples_by_class[cls];
        const int n_owners = static_cast<int>(owners[cls].size());
        if (static_cast<int>(pool.size()) < n_owners) {
            throw std::runtime_error("partition_two_class: class " + std::to_string(cls) +
                                     " has fewer samples than owners");
        }
        Rng class_rng(derive_seed(seed, 1, static_cast<uint64_t>(cls)));
        class_rng.shuffle(pool);
        // Near-equal contiguous chunks; the first (size % owners) chunks get
        // one extra sample.
        const size_t base = pool.size() / n_owners;
        const size_t extra = pool.size() % n_owners;
        size_t pos = 0;
        for (int o = 0; o < n_owners; ++o) {
            const size_t take = base + (static_cast<size_t>(o) < extra ? 1 : 0);
            auto& dst = plan.assignments[owners[cls][o]];
            dst.insert(dst.end(), pool.begin() + pos, pool.begin() + pos + take);
            pos += take;
        }
    }
    for (auto& a : plan.assignments) std::sort(a.begin(), a.end());
    return plan;
}

std::pair<std::vector<int>, std::vector<int>>
train_test_split(const std::vector<int>& indices, double test_fraction, uint64_t seed) {
    if (indices.empty()) throw std::invalid_argument("train_test_split: empty index list");
    std::vector<int> shuffled = indices;
    Rng rng(seed);
    rng.shuffle(shuffled);
    size_t test_count = static_cast<size_t>(test_fraction * static_cast<double>(shuffled.size()));
    if (shuffled.size() >= 2) {
        test_count = std::clamp<size_t>(test_count, 1, shuffled.size() - 1);
    } else {
        test_count = 0;
    }
    std::vector<int> test(shuffled.end() - test_count, shuffled.end());
    std::vector<int> train(shuffled.begin(), shuffled.end() - test_count);
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

}  // namespace fedsim
