#include "fedsim/selfish.hpp"

#include <cmath>
#include <stdexcept>

#include "fedsim/scalar_min.hpp"

namespace fedsim {

UpdateVector estimate_avg_normal_update(const UpdateVector& w_t,
                                        const UpdateVector& w_prev,
                                        const UpdateVector& prev_sent, int k) {
    if (k < 2) throw std::invalid_argument("estimate_avg_normal_update: k must be >= 2");
    if (w_t.size() != w_prev.size() || w_t.size() != prev_sent.size()) {
        throw std::invalid_argument("estimate_avg_normal_update: dimension mismatch");
    }
    const double kd = static_cast<double>(k);
    UpdateVector out(w_t.size());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = (kd * (w_t[i] - w_prev[i]) - prev_sent[i]) / (kd - 1.0);
    }
    return out;
}

UpdateVector craft_selfish_update(const UpdateVector& delta_true,
                                  const UpdateVector& delta_bar, double alpha, int k) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("craft_selfish_update: alpha must lie in [0,1]");
    }
    if (k < 2) throw std::invalid_argument("craft_selfish_update: k must be >= 2");
    if (delta_true.size() != delta_bar.size()) {
        throw std::invalid_argument("craft_selfish_update: dimension mismatch");
    }
    // The two fixed points of the formula must hold bitwise; rounding in
    // (x - y) + y would break the alpha*k == 1 case.
    if (alpha == 0.0) return delta_bar;
    const double ak = alpha * static_cast<double>(k);
    if (ak == 1.0) return delta_true;

    UpdateVector out(delta_true.size());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = ak * (delta_true[i] - delta_bar[i]) + delta_bar[i];
    }
    return out;
}

namespace {

// Residual-sum objective of the joint (k, average-update) fit.
double k_objective(double k, const UpdateVector& delta,
                   const HistoryEntry& last, const HistoryEntry& prev) {
    double total = 0.0;
    for (const HistoryEntry* h : {&last, &prev}) {
        double sq = 0.0;
        for (size_t i = 0; i < delta.size(); ++i) {
            const double r = h->global_update[i] * k - h->sent[i] - delta[i] * (k - 1.0);
            sq += r * r;
        }
        total += std::sqrt(sq);
    }
    return total;
}

// Given k, the residual sum is minimized by the geometric median of the two
// per-round reconstructions (Delta_w*k - sent) / (k - 1).
UpdateVector delta_for_k(double k, const HistoryEntry& last, const HistoryEntry& prev) {
    const size_t dim = last.global_update.size();
    std::vector<UpdateVector> points(2, UpdateVector(dim));
    int p = 0;
    for (const HistoryEntry* h : {&last, &prev}) {
        for (size_t i = 0; i < dim; ++i) {
            points[p][i] = (h->global_update[i] * k - h->sent[i]) / (k - 1.0);
        }
        ++p;
    }
    return geometric_median(points);
}

}  // namespace

KEstimate estimate_k(const HistoryEntry& last, const HistoryEntry& prev,
                     double tol, int max_outer, double k_max) {
    if (!(tol > 0.0)) throw std::invalid_argument("estimate_k: tol must be positive");
    const size_t dim = last.global_update.size();
    if (dim == 0 || last.sent.size() != dim || prev.global_update.size() != dim ||
        prev.sent.size() != dim) {
        throw std::invalid_argument("estimate_k: dimension mismatch");
    }

    const double k_lo = 2.0;
    const double k_hi = 10.0 * k_max;

    KEstimate est;
    est.delta_bar_hat =
        geometric_median({last.global_update, prev.global_update});
    est.k_hat = k_lo;

    bool interior = false;
    for (est.iterations = 1; est.iterations <= max_outer; ++est.iterations) {
        const UpdateVector& delta = est.delta_bar_hat;
        const auto objective = [&](double k) { return k_objective(k, delta, last, prev); };

        // A flat objective carries no information about k.
        const double f_lo = objective(k_lo);
        const double f_mid = objective(0.5 * (k_lo + k_hi));
        const double f_hi = objective(k_hi);
        const double scale = std::fabs(f_lo) + std::fabs(f_mid) + std::fabs(f_hi);
        if (std::fabs(f_lo - f_mid) + std::fabs(f_hi - f_mid) <= 1e-12 * (1.0 + scale)) {
            est.converged = false;
            est.k_rounded = std::max(2, static_cast<int>(std::llround(est.k_hat)));
            return est;
        }

        const double k_new = brent_minimize(objective, k_lo, k_hi, 1e-10).x;
        const double change = std::fabs(k_new - est.k_hat);
        est.k_hat = k_new;
        est.delta_bar_hat = delta_for_k(est.k_hat, last, prev);
        interior = est.k_hat > k_lo + 1e-6 && est.k_hat < k_hi - 1e-6;
        if (change < tol) {
            est.converged = interior;
            break;
        }
    }
    est.k_rounded = std::max(2, static_cast<int>(std::llround(est.k_hat)));
    return est;
}

UpdateVector selfish_round(SelfishState& state, const UpdateVector& w_t,
                           const UpdateVector& delta_true) {
    // Record the outcome of the previous round before crafting.
    if (state.prev_global_weights && state.prev_sent) {
        state.history.push_front(
            {subtract(w_t, *state.prev_global_weights), *state.prev_sent});
        while (state.history.size() > 2) state.history.pop_back();
    }

    UpdateVector sent;
    if (!state.prev_sent) {
        // First round: nothing observed yet.
        sent = delta_true;
    } else {
        int k = 0;
        if (state.k_mode.known) {
            k = state.k_mode.k;
        } else if (state.history.size() >= 2) {
            k = estimate_k(state.history[0], state.history[1]).k_rounded;
        }
        if (k >= 2) {
            const UpdateVector delta_bar = estimate_avg_normal_update(
                w_t, *state.prev_global_weights, *state.prev_sent, k);
            sent = craft_selfish_update(delta_true, delta_bar, state.alpha, k);
        } else {
            // Estimation mode without two observed rounds yet.
            sent = delta_true;
        }
    }

    state.prev_sent = sent;
    state.prev_global_weights = w_t;
    return sent;
}

}  // namespace fedsim
