#pragma once

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "paneldml/errors.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/rng.hpp"

namespace paneldml {

enum class SplitStrategy { Random, ByUnit, ByPeriod, TimeFolds, NeighborsLeftOut };

inline const char* split_name(SplitStrategy s) {
    switch (s) {
        case SplitStrategy::Random: return "random";
        case SplitStrategy::ByUnit: return "by-unit";
        case SplitStrategy::ByPeriod: return "by-period";
        case SplitStrategy::TimeFolds: return "time-folds";
        default: return "nlo";
    }
}

inline SplitStrategy split_from_name(const std::string& s) {
    if (s == "random") return SplitStrategy::Random;
    if (s == "by-unit") return SplitStrategy::ByUnit;
    if (s == "by-period") return SplitStrategy::ByPeriod;
    if (s == "time-folds") return SplitStrategy::TimeFolds;
    if (s == "nlo") return SplitStrategy::NeighborsLeftOut;
    throw ConfigError("unknown split strategy '" + s + "'");
}

/// Cross-fitting partition plus the training-index rule it implies.
/// Fold ids are 1-based.
struct FoldPlan {
    SplitStrategy strategy = SplitStrategy::Random;
    int K = 5;
    int neighbor_width = 1; // NLO only
    std::vector<int> fold_of; // per row

    std::vector<int> fold_rows(int k) const {
        check_fold(k);
        std::vector<int> out;
        for (int r = 0; r < static_cast<int>(fold_of.size()); ++r)
            if (fold_of[r] == k) out.push_back(r);
        return out;
    }

    /// Rows used to train fold k's nuisance models: everything outside fold k,
    /// and for NLO additionally outside the folds within neighbor_width of k
    /// (non-circular, so boundary folds simply have one-sided neighborhoods).
    std::vector<int> training_rows(int k) const {
        check_fold(k);
        std::vector<int> out;
        for (int r = 0; r < static_cast<int>(fold_of.size()); ++r) {
            const int f = fold_of[r];
            if (f == k) continue;
            if (strategy == SplitStrategy::NeighborsLeftOut && std::abs(f - k) <= neighbor_width) continue;
            out.push_back(r);
        }
        return out;
    }

private:
    void check_fold(int k) const {
        if (k < 1 || k > K) throw ConfigError("fold id " + std::to_string(k) + " out of range 1.." + std::to_string(K));
    }
};

namespace detail {

/// Near-equal contiguous chunks with boundaries floor(f*n/K); sizes differ by
/// at most one. Returns the chunk of item `index`.
inline int chunk_of(int index, int n, int K) {
    return static_cast<int>((static_cast<long long>(index + 1) * K + n - 1) / n) - 1;
}

/// Contiguous period blocks, earlier folds taking the extra periods:
/// first (T mod K) blocks have ceil(T/K) periods, the rest floor(T/K).
inline int time_block_of(int period, int T, int K) {
    const int q = T / K, rem = T % K;
    const int big = q + 1;
    if (period < rem * big) return period / big;
    return rem + (period - rem * big) / q;
}

} // namespace detail

/// Builds the fold plan for one of the five strategies of the splitting table.
inline FoldPlan make_folds(const PanelDataset& data, SplitStrategy strategy, int K, std::uint64_t seed,
                           int neighbor_width = 1) {
    const int N = data.n_units, T = data.n_periods, NT = data.rows();
    if (K < 2) throw ConfigError("make_folds: K must be >= 2 (got " + std::to_string(K) + ")");

    FoldPlan plan;
    plan.strategy = strategy;
    plan.K = K;
    plan.neighbor_width = neighbor_width;
    plan.fold_of.assign(NT, 0);

    RandomStream rs(derive_key(seed, 0x666f6c64706c616eull)); // tag: fold plan

    switch (strategy) {
        case SplitStrategy::Random: {
            if (NT < K) throw ConfigError("make_folds: random split needs N*T >= K");
            std::vector<int> rows(NT);
            std::iota(rows.begin(), rows.end(), 0);
            shuffle(rows, rs);
            for (int idx = 0; idx < NT; ++idx) plan.fold_of[rows[idx]] = detail::chunk_of(idx, NT, K) + 1;
            break;
        }
        case SplitStrategy::ByUnit: {
            if (N < K) throw ConfigError("make_folds: by-unit split needs N >= K (N=" + std::to_string(N) +
                                         ", K=" + std::to_string(K) + ")");
            std::vector<int> units(N);
            std::iota(units.begin(), units.end(), 0);
            shuffle(units, rs);
            for (int idx = 0; idx < N; ++idx) {
                const int fold = detail::chunk_of(idx, N, K) + 1;
                for (int t = 0; t < T; ++t) plan.fold_of[panel_row(units[idx], t, T)] = fold;
            }
            break;
        }
        case SplitStrategy::ByPeriod: {
            if (T < K) throw ConfigError("make_folds: by-period split needs T >= K (T=" + std::to_string(T) +
                                         ", K=" + std::to_string(K) + ")");
            std::vector<int> periods(T);
            std::iota(periods.begin(), periods.end(), 0);
            shuffle(periods, rs);
            for (int idx = 0; idx < T; ++idx) {
                const int fold = detail::chunk_of(idx, T, K) + 1;
                for (int i = 0; i < N; ++i) plan.fold_of[panel_row(i, periods[idx], T)] = fold;
            }
            break;
        }
        case SplitStrategy::TimeFolds:
        case SplitStrategy::NeighborsLeftOut: {
            if (T < K) throw ConfigError("make_folds: time-blocked split needs T >= K (T=" + std::to_string(T) +
                                         ", K=" + std::to_string(K) + ")");
            if (strategy == SplitStrategy::NeighborsLeftOut) {
                if (neighbor_width < 1) throw ConfigError("make_folds: nlo requires neighbor_width >= 1");
                if (K < 2 * neighbor_width + 2)
                    throw ConfigError("make_folds: nlo requires K >= 2*neighbor_width + 2 (K=" + std::to_string(K) +
                                      ", width=" + std::to_string(neighbor_width) + ")");
            }
            for (int t = 0; t < T; ++t) {
                const int fold = detail::time_block_of(t, T, K) + 1;
                for (int i = 0; i < N; ++i) plan.fold_of[panel_row(i, t, T)] = fold;
            }
            break;
        }
    }
    return plan;
}

} // namespace paneldml
