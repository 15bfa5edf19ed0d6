#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "paneldml/errors.hpp"
#include "paneldml/rng.hpp"

namespace paneldml {

// ---------------------------------------------------------------------------
// Least-squares gradient boosted regression trees. Exact greedy CART splits
// (candidate thresholds are midpoints between consecutive distinct values),
// leaf values are mean residuals, round counts tuned by K-fold CV with early
// stopping on the mean validation RMSE.
// ---------------------------------------------------------------------------

struct BoostConfig {
    double learning_rate = 0.3;
    int max_depth = 6;
    int early_stopping_rounds = 10;
    int max_rounds = 200;
    int cv_folds = 5;
    int min_samples_leaf = 1;
    std::uint64_t seed = 0; // CV shuffling

    void validate() const {
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must be in (0,1]");
        if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
        if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
        if (early_stopping_rounds < 1) throw ConfigError("early_stopping_rounds must be >= 1");
        if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
        if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    }
};

/// Dense column-major feature storage.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(int rows) : rows_(rows) {}

    FeatureMatrix& add_column(std::span<const double> values) {
        if (static_cast<int>(values.size()) != rows_) throw DimensionError("feature column length mismatch");
        data_.insert(data_.end(), values.begin(), values.end());
        ++cols_;
        return *this;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double at(int row, int col) const { return data_[static_cast<std::size_t>(col) * rows_ + row]; }
    const double* col_data(int col) const { return data_.data() + static_cast<std::size_t>(col) * rows_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double predict_row(const FeatureMatrix& X, int row) const {
        int n = 0;
        while (nodes[n].feature >= 0)
            n = X.at(row, nodes[n].feature) <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
        return nodes[n].value;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& nd : nodes)
            arr.push_back({{"feature", nd.feature},
                           {"threshold", nd.threshold},
                           {"left", nd.left},
                           {"right", nd.right},
                           {"value", nd.value}});
        return arr;
    }
};

struct BoostedModel {
    double base_score = 0.0;
    double learning_rate = 0.3;
    int n_features = 0;
    std::vector<RegressionTree> trees;

    int rounds_used() const { return static_cast<int>(trees.size()); }

    double predict_row(const FeatureMatrix& X, int row) const {
        double p = base_score;
        for (const auto& t : trees) p += learning_rate * t.predict_row(X, row);
        return p;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["base_score"] = base_score;
        j["learning_rate"] = learning_rate;
        j["n_features"] = n_features;
        j["trees"] = nlohmann::json::array();
        for (const auto& t : trees) j["trees"].push_back(t.to_json());
        return j;
    }
};

namespace detail {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool valid = false;
};

/// Greedy CART fitter bound to a fixed training-row set, reusable across
/// boosting rounds (the target span may mutate between fits). Columns whose
/// training values are all 0/1 take a single-pass two-bucket path; every
/// other column is sorted per node.
class TreeFitter {
public:
    TreeFitter(const FeatureMatrix& X, std::span<const double> y, const BoostConfig& cfg, std::vector<int> rows)
        : X_(X), y_(y), cfg_(cfg), rows_(std::move(rows)) {
        if (rows_.empty()) throw ConfigError("fit_tree: empty training set");
        classify_columns();
    }

    /// Fits one tree to the current targets. When leaf_of_rows is given, it
    /// receives (row, leaf value) pairs for every training row.
    RegressionTree fit(std::vector<std::pair<int, double>>* leaf_of_rows = nullptr) {
        RegressionTree tree;
        leaf_assign_ = leaf_of_rows;
        if (leaf_assign_) leaf_assign_->clear();
        build(tree, rows_, 0);
        return tree;
    }

private:
    void classify_columns() {
        binary_.assign(X_.cols(), true);
        for (int f = 0; f < X_.cols(); ++f) {
            const double* col = X_.col_data(f);
            for (int r : rows_) {
                const double v = col[r];
                if (v != 0.0 && v != 1.0) {
                    binary_[f] = false;
                    break;
                }
            }
        }
    }

    int build(RegressionTree& tree, const std::vector<int>& rows, int depth) {
        const int node = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const int n = static_cast<int>(rows.size());
        double sum = 0.0;
        double lo = y_[rows[0]], hi = y_[rows[0]];
        for (int r : rows) {
            sum += y_[r];
            lo = std::min(lo, y_[r]);
            hi = std::max(hi, y_[r]);
        }
        const double mean = sum / n;

        SplitCandidate best;
        const bool can_split = depth < cfg_.max_depth && n >= 2 * cfg_.min_samples_leaf && lo < hi;
        if (can_split) best = find_best_split(rows, sum);

        if (!best.valid) {
            tree.nodes[node].value = mean;
            if (leaf_assign_)
                for (int r : rows) leaf_assign_->emplace_back(r, mean);
            return node;
        }

        std::vector<int> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        const double* col = X_.col_data(best.feature);
        for (int r : rows) (col[r] <= best.threshold ? left : right).push_back(r);

        tree.nodes[node].feature = best.feature;
        tree.nodes[node].threshold = best.threshold;
        const int l = build(tree, left, depth + 1);
        const int r = build(tree, right, depth + 1);
        tree.nodes[node].left = l;
        tree.nodes[node].right = r;
        return node;
    }

    // Maximizes the sse reduction S_L^2/n_L + S_R^2/n_R - S^2/n. Features are
    // scanned in index order and thresholds ascending; only strictly larger
    // gains replace the incumbent, so ties resolve to the lowest feature
    // index and lowest threshold.
    SplitCandidate find_best_split(const std::vector<int>& rows, double total_sum) {
        const int n = static_cast<int>(rows.size());
        const double parent = total_sum * total_sum / n;
        const int msl = cfg_.min_samples_leaf;
        SplitCandidate best;

        std::vector<std::pair<double, double>> vals; // (feature value, target)
        for (int f = 0; f < X_.cols(); ++f) {
            const double* col = X_.col_data(f);
            if (binary_[f]) {
                double s1 = 0.0;
                int n1 = 0;
                for (int r : rows) {
                    if (col[r] > 0.5) {
                        s1 += y_[r];
                        ++n1;
                    }
                }
                if (n1 == 0 || n1 == n || n1 < msl || n - n1 < msl) continue;
                const double s0 = total_sum - s1;
                const int n0 = n - n1;
                const double gain = s0 * s0 / n0 + s1 * s1 / n1 - parent;
                if (gain > best.gain) best = {gain, f, 0.5, true};
                continue;
            }

            vals.clear();
            vals.reserve(rows.size());
            for (int r : rows) vals.emplace_back(col[r], y_[r]);
            std::sort(vals.begin(), vals.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            double s_left = 0.0;
            for (int k = 0; k + 1 < n; ++k) {
                s_left += vals[k].second;
                if (vals[k].first == vals[k + 1].first) continue;
                const int n_left = k + 1;
                if (n_left < msl || n - n_left < msl) continue;
                const double s_right = total_sum - s_left;
                const double gain = s_left * s_left / n_left + s_right * s_right / (n - n_left) - parent;
                if (gain > best.gain) best = {gain, f, (vals[k].first + vals[k + 1].first) / 2.0, true};
            }
        }
        return best;
    }

    const FeatureMatrix& X_;
    std::span<const double> y_;
    const BoostConfig& cfg_;
    std::vector<int> rows_;
    std::vector<bool> binary_;
    std::vector<std::pair<int, double>>* leaf_assign_ = nullptr;
};

inline double rmse_over(std::span<const double> diff, const std::vector<int>& rows) {
    double s = 0.0;
    for (int r : rows) s += diff[r] * diff[r];
    return std::sqrt(s / rows.size());
}

} // namespace detail

/// Single CART regression tree on the given rows (all rows when omitted).
inline RegressionTree fit_tree(const FeatureMatrix& X, std::span<const double> y, const BoostConfig& cfg,
                               const std::vector<int>& rows) {
    cfg.validate();
    if (static_cast<int>(y.size()) != X.rows()) throw DimensionError("fit_tree: length(y) != rows(X)");
    detail::TreeFitter fitter(X, y, cfg, rows);
    return fitter.fit();
}

inline RegressionTree fit_tree(const FeatureMatrix& X, std::span<const double> y, const BoostConfig& cfg) {
    std::vector<int> rows(X.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(X, y, cfg, rows);
}

/// Stagewise least-squares boosting. With a validation set, stops once the
/// validation RMSE has not improved for early_stopping_rounds consecutive
/// rounds and keeps the best-validation-round prefix (possibly zero trees).
/// Without one, runs exactly cfg.max_rounds rounds.
inline BoostedModel fit_boosted(const FeatureMatrix& X, std::span<const double> y, const BoostConfig& cfg,
                                const std::vector<int>& train_rows, const std::vector<int>& valid_rows = {}) {
    cfg.validate();
    if (static_cast<int>(y.size()) != X.rows()) throw DimensionError("fit_boosted: length(y) != rows(X)");
    if (train_rows.empty()) throw ConfigError("fit_boosted: empty training set");
    if (!valid_rows.empty()) {
        std::vector<char> in_train(X.rows(), 0);
        for (int r : train_rows) in_train[r] = 1;
        for (int r : valid_rows)
            if (in_train[r]) throw ConfigError("fit_boosted: training and validation sets overlap");
    }

    BoostedModel model;
    model.learning_rate = cfg.learning_rate;
    model.n_features = X.cols();
    double base = 0.0;
    for (int r : train_rows) base += y[r];
    base /= static_cast<double>(train_rows.size());
    model.base_score = base;

    std::vector<double> resid(X.rows(), 0.0);
    for (int r : train_rows) resid[r] = y[r] - base;
    std::vector<double> val_err(X.rows(), 0.0);
    for (int r : valid_rows) val_err[r] = y[r] - base;

    const bool track_valid = !valid_rows.empty();
    double best_rmse = track_valid ? detail::rmse_over(val_err, valid_rows) : 0.0;
    int best_round = 0;
    int since_improve = 0;

    detail::TreeFitter fitter(X, resid, cfg, train_rows);
    std::vector<std::pair<int, double>> leaf_updates;
    for (int round = 1; round <= cfg.max_rounds; ++round) {
        RegressionTree tree = fitter.fit(&leaf_updates);
        for (const auto& [r, v] : leaf_updates) resid[r] -= cfg.learning_rate * v;
        model.trees.push_back(std::move(tree));
        if (track_valid) {
            const auto& t = model.trees.back();
            for (int r : valid_rows) val_err[r] -= cfg.learning_rate * t.predict_row(X, r);
            const double rmse = detail::rmse_over(val_err, valid_rows);
            if (rmse < best_rmse) {
                best_rmse = rmse;
                best_round = round;
                since_improve = 0;
            } else if (++since_improve >= cfg.early_stopping_rounds) {
                break;
            }
        }
    }
    if (track_valid) model.trees.resize(best_round);
    return model;
}

inline BoostedModel fit_boosted(const FeatureMatrix& X, std::span<const double> y, const BoostConfig& cfg) {
    std::vector<int> rows(X.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_boosted(X, y, cfg, rows);
}

inline std::vector<double> predict(const BoostedModel& model, const FeatureMatrix& X) {
    if (X.cols() != model.n_features) throw DimensionError("predict: feature width != training width");
    std::vector<double> out(X.rows());
    for (int r = 0; r < X.rows(); ++r) out[r] = model.predict_row(X, r);
    return out;
}

/// Round count minimizing the mean held-out RMSE across cv_folds random folds.
/// Folds advance in lockstep; early stopping acts on the mean curve. Round 0
/// (base score only) is a legal winner on structureless targets.
inline int cv_tune_rounds(const FeatureMatrix& X, std::span<const double> y, const BoostConfig& cfg,
                          const std::vector<int>& rows) {
    cfg.validate();
    const int n = static_cast<int>(rows.size());
    if (n < cfg.cv_folds) throw ConfigError("cv_tune_rounds: fewer rows than cv_folds");

    std::vector<int> shuffled = rows;
    RandomStream rs(derive_key(cfg.seed, 0x6376666f6c647aull)); // tag: cv fold shuffle
    shuffle(shuffled, rs);

    const int K = cfg.cv_folds;
    struct FoldState {
        std::vector<int> valid;
        std::vector<double> resid;   // training residuals, indexed by row
        std::vector<double> val_err; // validation errors, indexed by row
        std::unique_ptr<detail::TreeFitter> fitter;
    };
    std::vector<FoldState> folds(K);
    for (int f = 0; f < K; ++f) {
        const int lo = static_cast<int>(static_cast<long long>(f) * n / K);
        const int hi = static_cast<int>(static_cast<long long>(f + 1) * n / K);
        auto& st = folds[f];
        st.valid.assign(shuffled.begin() + lo, shuffled.begin() + hi);
        std::vector<int> train;
        train.reserve(n - (hi - lo));
        train.insert(train.end(), shuffled.begin(), shuffled.begin() + lo);
        train.insert(train.end(), shuffled.begin() + hi, shuffled.end());
        st.resid.assign(X.rows(), 0.0);
        st.val_err.assign(X.rows(), 0.0);
        double base = 0.0;
        for (int r : train) base += y[r];
        base /= static_cast<double>(train.size());
        for (int r : train) st.resid[r] = y[r] - base;
        for (int r : st.valid) st.val_err[r] = y[r] - base;
        st.fitter = std::make_unique<detail::TreeFitter>(X, st.resid, cfg, std::move(train));
    }

    auto mean_rmse = [&] {
        double s = 0.0;
        for (const auto& st : folds) s += detail::rmse_over(st.val_err, st.valid);
        return s / K;
    };

    double best = mean_rmse();
    int best_round = 0;
    int since_improve = 0;
    std::vector<std::pair<int, double>> leaf_updates;
    for (int round = 1; round <= cfg.max_rounds; ++round) {
        for (auto& st : folds) {
            RegressionTree tree = st.fitter->fit(&leaf_updates);
            for (const auto& [r, v] : leaf_updates) st.resid[r] -= cfg.learning_rate * v;
            for (int r : st.valid) st.val_err[r] -= cfg.learning_rate * tree.predict_row(X, r);
        }
        const double rmse = mean_rmse();
        if (rmse < best) {
            best = rmse;
            best_round = round;
            since_improve = 0;
        } else if (++since_improve >= cfg.early_stopping_rounds) {
            break;
        }
    }
    return best_round;
}

inline int cv_tune_rounds(const FeatureMatrix& X, std::span<const double> y, const BoostConfig& cfg) {
    std::vector<int> rows(X.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return cv_tune_rounds(X, y, cfg, rows);
}

} // namespace paneldml
