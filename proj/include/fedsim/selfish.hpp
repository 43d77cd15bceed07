#pragma once

#include <deque>
#include <optional>

#include "fedsim/update_vector.hpp"

namespace fedsim {

/// Whether a selfish client knows the participant count or estimates it from
/// the global-update history.
struct KMode {
    bool known = true;
    int k = 0;  // meaningful when known

    bool operator==(const KMode&) const = default;
};

/// One observed round: the realized global update and the update this client
/// sent into it.
struct HistoryEntry {
    UpdateVector global_update;
    UpdateVector sent;
};

struct KEstimate {
    double k_hat = 2.0;
    int k_rounded = 2;
    UpdateVector delta_bar_hat;
    int iterations = 0;
    bool converged = false;
};

/// Average normal-client update inferred from the last global step:
/// (k*(w_t - w_prev) - prev_sent) / (k - 1).
UpdateVector estimate_avg_normal_update(const UpdateVector& w_t,
                                        const UpdateVector& w_prev,
                                        const UpdateVector& prev_sent, int k);

/// Selfish crafting: alpha*k*(delta_true - delta_bar) + delta_bar.
/// alpha = 1/k reproduces the true update and alpha = 0 the estimated
/// average, both bitwise.
UpdateVector craft_selfish_update(const UpdateVector& delta_true,
                                  const UpdateVector& delta_bar, double alpha, int k);

/// Joint recovery of the participant count and the normal clients' average
/// update from two observed rounds, by alternating a bracketed scalar
/// minimization over k with a geometric-median step for the average.
/// `last` is the most recent round. The continuous k search runs on
/// [2, 10*k_max]; a flat objective or a boundary minimum leaves
/// converged == false.
KEstimate estimate_k(const HistoryEntry& last, const HistoryEntry& prev,
                     double tol = 1e-3, int max_outer = 50, double k_max = 100.0);

/// Per-client crafting state. Owned by exactly one client; never shared.
struct SelfishState {
    double alpha = 0.0;
    KMode k_mode;
    std::optional<UpdateVector> prev_sent;
    std::optional<UpdateVector> prev_global_weights;
    std::deque<HistoryEntry> history;  // newest first, at most 2 kept
};

/// One round of selfish behavior: returns the update to send and advances
/// the state. The first round (and, in estimation mode, any round without
/// two observed global updates) sends the true update unchanged.
UpdateVector selfish_round(SelfishState& state, const UpdateVector& w_t,
                           const UpdateVector& delta_true);

}  // namespace fedsim
