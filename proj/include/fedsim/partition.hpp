#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedsim/dataset.hpp"

namespace fedsim {

/// Label-skewed data assignment: every client holds samples from exactly two
/// classes and every class has at least one owner.
struct PartitionPlan {
    std::vector<std::vector<int>> assignments;  // client -> ascending sample indices
    int classes_per_client = 2;
    uint64_t seed = 0;
};

/// Deterministic two-class partition. Classes are first dealt out (in seeded
/// order) so each has an owner, then clients draw the rest of their class
/// pairs uniformly; each class's samples are shuffled once and split into
/// near-equal contiguous chunks across its owners.
PartitionPlan partition_two_class(const Dataset& data, int k, uint64_t seed);

/// Seeded split of a client's sample indices into (train, test). The test
/// side gets ~test_fraction of the samples, at least one of each when the
/// input has two or more.
std::pair<std::vector<int>, std::vector<int>>
train_test_split(const std::vector<int>& indices, double test_fraction, uint64_t seed);

}  // namespace fedsim
