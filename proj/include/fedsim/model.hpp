#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "fedsim/dataset.hpp"
#include "fedsim/update_vector.hpp"

namespace fedsim {

enum class ArchKind { LogisticRegression, Mlp };

/// Shape of a differentiable classifier. Parameters flatten layer by layer,
/// weights before biases, rows major.
struct Architecture {
    ArchKind kind = ArchKind::LogisticRegression;
    int features = 0;
    int hidden = 0;  // Mlp only
    int classes = 0;

    int param_count() const;
    bool operator==(const Architecture&) const = default;
};

struct ModelParams {
    Architecture arch;
    UpdateVector weights;
};

/// Fresh model with N(0, 1/fan_in) weights and zero biases, drawn from the
/// given seed only.
ModelParams init_model(const Architecture& arch, uint64_t seed);

struct LocalTrainConfig {
    int epochs = 5;
    int batch_size = 128;
    double learning_rate = 0.05;
    uint64_t shuffle_seed = 0;

    bool operator==(const LocalTrainConfig&) const = default;
};

/// Mean softmax cross-entropy gradient over the whole batch, flattened in
/// the ModelParams layout. Throws on non-finite results.
UpdateVector gradient(const ModelParams& model, const Dataset& batch);

/// Same, restricted to the given sample indices. Accumulates contributions
/// in the order the indices are listed.
UpdateVector gradient_at(const ModelParams& model, const Dataset& data,
                         std::span<const int> indices);

/// Mean cross-entropy loss (used for divergence checks and tests).
double mean_loss(const ModelParams& model, const Dataset& batch);

/// Runs cfg.epochs of mini-batch SGD and returns the parameter delta
/// (w_after - w_before). The input model is untouched. Each epoch shuffles
/// sample order from cfg.shuffle_seed; within a batch, gradients accumulate
/// in ascending sample-index order so full-batch training replays exactly as
/// manual gradient steps.
UpdateVector local_train(const ModelParams& model, const Dataset& data,
                         const LocalTrainConfig& cfg);

/// Top-1 accuracy on the test set.
double evaluate(const ModelParams& model, const Dataset& test);

}  // namespace fedsim
