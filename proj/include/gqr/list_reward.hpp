#pragma once

#include <cstddef>
#include <vector>

#include "gqr/common.hpp"
#include "gqr/prompt.hpp"

namespace gqr {

inline void check_probability_vector(const std::vector<double>& p) {
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ArgumentError("list reward: probability outside [0,1]");
    }
}

// Probability that at least one of the independently clickable slots is
// clicked: 1 - prod(1 - p_k).
inline double reward_multi(const std::vector<double>& p) {
    check_probability_vector(p);
    double no_click = 1.0;
    for (double v : p) no_click *= (1.0 - v);
    return 1.0 - no_click;
}

// Expected click count when at most one slot can be clicked: sum p_k. The sum
// may exceed 1 when per-slot probabilities are not jointly calibrated; it is
// returned as written.
inline double reward_single(const std::vector<double>& p) {
    check_probability_vector(p);
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

inline double list_reward(ComponentKind kind, const std::vector<double>& p) {
    return kind == ComponentKind::multi_choice ? reward_multi(p) : reward_single(p);
}

// Incremental form used inside beam search: the no-click mass so far is the
// whole beam state for multi components, the running sum for single ones.
struct RewardAccumulator {
    ComponentKind kind;
    double no_click = 1.0;
    double sum = 0.0;

    explicit RewardAccumulator(ComponentKind k) : kind(k) {}

    void add(double p) {
        no_click *= (1.0 - p);
        sum += p;
    }

    double value() const {
        return kind == ComponentKind::multi_choice ? 1.0 - no_click : sum;
    }
};

// Brute-force evaluation of the same quantities without the closed forms.
// multi: enumerate all 2^N independent click outcomes and total the mass of
// outcomes with at least one click. single: expectation of the click count
// under the categorical model (one event per slot plus a no-click event).
inline double reward_oracle(const std::vector<double>& p, ComponentKind kind) {
    check_probability_vector(p);
    const std::size_t n = p.size();
    if (n > 20) throw ArgumentError("reward_oracle: N > 20");
    if (kind == ComponentKind::multi_choice) {
        double has_click = 0.0;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            if (mask == 0) continue;
            double prob = 1.0;
            for (std::size_t k = 0; k < n; ++k) {
                prob *= (mask >> k) & 1u ? p[k] : 1.0 - p[k];
            }
            has_click += prob;
        }
        return has_click;
    }
    double expected_clicks = 0.0;
    double no_click_mass = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        expected_clicks += p[k] * 1.0;
        no_click_mass -= p[k];
    }
    expected_clicks += no_click_mass * 0.0;
    return expected_clicks;
}

}  // namespace gqr
