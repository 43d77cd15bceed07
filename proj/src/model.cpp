#include "fedsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim {

int Architecture::param_count() const {
    switch (kind) {
        case ArchKind::LogisticRegression:
            return classes * features + classes;
        case ArchKind::Mlp:
            return hidden * features + hidden + classes * hidden + classes;
    }
    return 0;
}

ModelParams init_model(const Architecture& arch, uint64_t seed) {
    if (arch.features < 1 || arch.classes < 2 ||
        (arch.kind == ArchKind::Mlp && arch.hidden < 1)) {
        throw std::invalid_argument("init_model: bad architecture");
    }
    Rng rng(derive_seed(seed, 0x5eedULL, 0));
    ModelParams model;
    model.arch = arch;
    model.weights.assign(arch.param_count(), 0.0);

    auto fill_layer = [&](size_t offset, int rows, int cols) {
        const double stddev = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int i = 0; i < rows * cols; ++i) {
            model.weights[offset + i] = rng.normal(0.0, stddev);
        }
        // biases (rows entries after the weight block) stay zero
    };
    if (arch.kind == ArchKind::LogisticRegression) {
        fill_layer(0, arch.classes, arch.features);
    } else {
        fill_layer(0, arch.hidden, arch.features);
        fill_layer(static_cast<size_t>(arch.hidden) * arch.features + arch.hidden,
                   arch.classes, arch.hidden);
    }
    return model;
}

namespace {

// Layout offsets. Logistic: [W (C x f), b (C)].
// Mlp: [W1 (h x f), b1 (h), W2 (C x h), b2 (C)].
struct Layout {
    size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

Layout layout_of(const Architecture& a) {
    Layout l;
    if (a.kind == ArchKind::LogisticRegression) {
        l.w1 = 0;
        l.b1 = static_cast<size_t>(a.classes) * a.features;
    } else {
        l.w1 = 0;
        l.b1 = static_cast<size_t>(a.hidden) * a.features;
        l.w2 = l.b1 + a.hidden;
        l.b2 = l.w2 + static_cast<size_t>(a.classes) * a.hidden;
    }
    return l;
}

// Softmax probabilities from logits, max-subtracted for stability.
void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

struct Forward {
    std::vector<double> hidden_act;  // Mlp only
    std::vector<double> probs;
};

Forward forward_sample(const ModelParams& model, const double* x) {
    const Architecture& a = model.arch;
    const Layout l = layout_of(a);
    const UpdateVector& w = model.weights;
    Forward f;
    if (a.kind == ArchKind::LogisticRegression) {
        f.probs.assign(a.classes, 0.0);
        for (int c = 0; c < a.classes; ++c) {
            double z = w[l.b1 + c];
            const double* row = &w[l.w1 + static_cast<size_t>(c) * a.features];
            for (int j = 0; j < a.features; ++j) z += row[j] * x[j];
            f.probs[c] = z;
        }
        softmax_inplace(f.probs);
    } else {
        f.hidden_act.assign(a.hidden, 0.0);
        for (int h = 0; h < a.hidden; ++h) {
            double z = w[l.b1 + h];
            const double* row = &w[l.w1 + static_cast<size_t>(h) * a.features];
            for (int j = 0; j < a.features; ++j) z += row[j] * x[j];
            f.hidden_act[h] = std::tanh(z);
        }
        f.probs.assign(a.classes, 0.0);
        for (int c = 0; c < a.classes; ++c) {
            double z = w[l.b2 + c];
            const double* row = &w[l.w2 + static_cast<size_t>(c) * a.hidden];
            for (int h = 0; h < a.hidden; ++h) z += row[h] * f.hidden_act[h];
            f.probs[c] = z;
        }
        softmax_inplace(f.probs);
    }
    return f;
}

void accumulate_sample_gradient(const ModelParams& model, const double* x, int label,
                                UpdateVector& grad) {
    const Architecture& a = model.arch;
    const Layout l = layout_of(a);
    Forward f = forward_sample(model, x);
    // dL/dz = p - onehot(y)
    std::vector<double> dz = f.probs;
    dz[label] -= 1.0;

    if (a.kind == ArchKind::LogisticRegression) {
        for (int c = 0; c < a.classes; ++c) {
            double* grow = &grad[l.w1 + static_cast<size_t>(c) * a.features];
            for (int j = 0; j < a.features; ++j) grow[j] += dz[c] * x[j];
            grad[l.b1 + c] += dz[c];
        }
    } else {
        const UpdateVector& w = model.weights;
        std::vector<double> dh(a.hidden, 0.0);
        for (int c = 0; c < a.classes; ++c) {
            double* grow = &grad[l.w2 + static_cast<size_t>(c) * a.hidden];
            const double* wrow = &w[l.w2 + static_cast<size_t>(c) * a.hidden];
            for (int h = 0; h < a.hidden; ++h) {
                grow[h] += dz[c] * f.hidden_act[h];
                dh[h] += dz[c] * wrow[h];
            }
            grad[l.b2 + c] += dz[c];
        }
        for (int h = 0; h < a.hidden; ++h) {
            const double dpre = dh[h] * (1.0 - f.hidden_act[h] * f.hidden_act[h]);
            double* grow = &grad[l.w1 + static_cast<size_t>(h) * a.features];
            for (int j = 0; j < a.features; ++j) grow[j] += dpre * x[j];
            grad[l.b1 + h] += dpre;
        }
    }
}

void check_model_data(const ModelParams& model, const Dataset& data, const char* op) {
    if (data.num_samples < 1) {
        throw std::invalid_argument(std::string(op) + ": empty dataset");
    }
    if (data.num_features != model.arch.features) {
        throw std::invalid_argument(std::string(op) + ": feature-count mismatch");
    }
    if (static_cast<int>(model.weights.size()) != model.arch.param_count()) {
        throw std::invalid_argument(std::string(op) + ": weight vector does not match architecture");
    }
}

}  // namespace

UpdateVector gradient_at(const ModelParams& model, const Dataset& data,
                         std::span<const int> indices) {
    check_model_data(model, data, "gradient");
    if (indices.empty()) throw std::invalid_argument("gradient: empty batch");
    UpdateVector grad(model.weights.size(), 0.0);
    for (int idx : indices) {
        accumulate_sample_gradient(model, data.row(idx), data.labels[idx], grad);
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (double& g : grad) g *= inv;
    if (!all_finite(grad)) throw std::runtime_error("gradient: non-finite gradient");
    return grad;
}

UpdateVector gradient(const ModelParams& model, const Dataset& batch) {
    std::vector<int> all(batch.num_samples);
    std::iota(all.begin(), all.end(), 0);
    return gradient_at(model, batch, all);
}

double mean_loss(const ModelParams& model, const Dataset& batch) {
    check_model_data(model, batch, "mean_loss");
    double total = 0.0;
    for (int i = 0; i < batch.num_samples; ++i) {
        Forward f = forward_sample(model, batch.row(i));
        total += -std::log(f.probs[batch.labels[i]]);
    }
    return total / static_cast<double>(batch.num_samples);
}

UpdateVector local_train(const ModelParams& model, const Dataset& data,
                         const LocalTrainConfig& cfg) {
    check_model_data(model, data, "local_train");
    if (cfg.epochs < 1) throw std::invalid_argument("local_train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("local_train: batch_size must be >= 1");
    if (!(cfg.learning_rate > 0.0)) {
        throw std::invalid_argument("local_train: learning_rate must be positive");
    }

    ModelParams current = model;
    Rng rng(cfg.shuffle_seed);
    std::vector<int> order(data.num_samples);
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> batch;
    batch.reserve(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < data.num_samples; start += cfg.batch_size) {
            const int end = std::min(start + cfg.batch_size, data.num_samples);
            batch.assign(order.begin() + start, order.begin() + end);
            // Canonical accumulation order inside the batch.
            std::sort(batch.begin(), batch.end());
            const UpdateVector grad = gradient_at(current, data, batch);
            for (size_t i = 0; i < current.weights.size(); ++i) {
                current.weights[i] -= cfg.learning_rate * grad[i];
            }
        }
    }
    UpdateVector delta = subtract(current.weights, model.weights);
    if (!all_finite(delta)) throw std::runtime_error("local_train: non-finite update");
    return delta;
}

double evaluate(const ModelParams& model, const Dataset& test) {
    check_model_data(model, test, "evaluate");
    int correct = 0;
    for (int i = 0; i < test.num_samples; ++i) {
        Forward f = forward_sample(model, test.row(i));
        const int pred = static_cast<int>(
            std::max_element(f.probs.begin(), f.probs.end()) - f.probs.begin());
        if (pred == test.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.num_samples);
}

}  // namespace fedsim
