#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedsim {

/// Dense classification dataset: features are an n x f row-major matrix,
/// labels are class indices in [0, num_classes).
struct Dataset {
    std::vector<double> features;
    std::vector<int> labels;
    int num_samples = 0;
    int num_features = 0;
    int num_classes = 0;

    const double* row(int i) const {
        return features.data() + static_cast<size_t>(i) * num_features;
    }
};

/// Gaussian-blob dataset: class means drawn uniformly in [-1,1]^features,
/// redrawn until every pair of means is at least 4*spread apart; samples are
/// mean + N(0, spread^2 I). Throws if rejection sampling exceeds 1e5 draws.
Dataset make_synthetic(int classes, int features, int per_class, double spread,
                       uint64_t seed);

/// Copy of the rows named by indices (order preserved).
Dataset subset(const Dataset& data, const std::vector<int>& indices);

/// Reads an IDX image file and an IDX label file into a dataset. Both files
/// may be gzip-compressed; pixel values are scaled to [0, 1].
Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

}  // namespace fedsim
