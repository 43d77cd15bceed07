#include "fedsim/dataset.hpp"

#include <cmath>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim {

Dataset make_synthetic(int classes, int features, int per_class, double spread,
                       uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("make_synthetic: classes must be >= 2");
    if (features < 2) throw std::invalid_argument("make_synthetic: features must be >= 2");
    if (per_class < 1) throw std::invalid_argument("make_synthetic: per_class must be >= 1");
    if (!(spread > 0.0)) throw std::invalid_argument("make_synthetic: spread must be positive");

    Rng rng(seed);
    const double min_dist = 4.0 * spread;
    constexpr int kMaxDraws = 100000;

    std::vector<std::vector<double>> means;
    means.reserve(classes);
    int draws = 0;
    while (static_cast<int>(means.size()) < classes) {
        if (++draws > kMaxDraws) {
            throw std::runtime_error(
                "make_synthetic: could not place class means " +
                std::to_string(min_dist) + " apart after 1e5 draws; spread too large");
        }
        std::vector<double> candidate(features);
        for (double& x : candidate) x = rng.uniform(-1.0, 1.0);
        bool ok = true;
        for (const auto& m : means) {
            double d2 = 0.0;
            for (int j = 0; j < features; ++j) {
                const double diff = candidate[j] - m[j];
                d2 += diff * diff;
            }
            if (d2 < min_dist * min_dist) {
                ok = false;
                break;
            }
        }
        if (ok) means.push_back(std::move(candidate));
    }

    Dataset out;
    out.num_features = features;
    out.num_classes = classes;
    out.num_samples = classes * per_class;
    out.features.reserve(static_cast<size_t>(out.num_samples) * features);
    out.labels.reserve(out.num_samples);
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i) {
            for (int j = 0; j < features; ++j) {
                out.features.push_back(means[c][j] + rng.normal(0.0, spread));
            }
            out.labels.push_back(c);
        }
    }
    return out;
}

Dataset subset(const Dataset& data, const std::vector<int>& indices) {
    Dataset out;
    out.num_features = data.num_features;
    out.num_classes = data.num_classes;
    out.num_samples = static_cast<int>(indices.size());
    out.features.reserve(indices.size() * data.num_features);
    out.labels.reserve(indices.size());
    for (int idx : indices) {
        if (idx < 0 || idx >= data.num_samples) {
            throw std::out_of_range("subset: sample index out of range");
        }
        const double* r = data.row(idx);
        out.features.insert(out.features.end(), r, r + data.num_features);
        out.labels.push_back(data.labels[idx]);
    }
    return out;
}

}  // namespace fedsim
