#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fraudseq/nets.hpp"
#include "fraudseq/rng.hpp"
#include "fraudseq/sequencing.hpp"

namespace fraudseq {

// ---------------------------------------------------------------------------
// Flat feature-vector dataset for the non-sequential baselines.
// ---------------------------------------------------------------------------

struct FlatDataset {
    std::size_t n = 0;
    int dim = 0;
    std::vector<float> x;  // row-major n x dim
    std::vector<int> y;

    const float* row(std::size_t i) const { return x.data() + i * static_cast<std::size_t>(dim); }
};

// Row-major concatenation of the l_s feature vectors of one sample.
inline std::vector<double> flatten_sequence(const SequenceSample& sample) {
    return std::vector<double>(sample.data.begin(), sample.data.end());
}

inline FlatDataset flatten_samples(const SampleSet& set) {
    FlatDataset d;
    d.n = set.samples.size();
    d.dim = set.dim * set.triplet.length();
    d.x.reserve(d.n * static_cast<std::size_t>(d.dim));
    d.y.reserve(d.n);
    for (const auto& s : set.samples) {
        d.x.insert(d.x.end(), s.data.begin(), s.data.end());
        d.y.push_back(s.label == Label::fraud ? 1 : 0);
    }
    return d;
}

// ---------------------------------------------------------------------------
// L2-regularized logistic regression fit with Adam. Regularization follows
// the C convention: penalty = |w|^2 / (2 C n); C = inf disables it.
// ---------------------------------------------------------------------------

struct LogisticConfig {
    double c = 100.0;
    int epochs = 60;
    double lr = 0.05;
    int batch_size = 512;
    std::uint64_t seed = 1;
};

struct LogisticModel {
    Eigen::VectorXd w;
    double bias = 0.0;

    double predict(const float* row) const {
        double z = bias;
        for (Eigen::Index i = 0; i < w.size(); ++i) z += w(i) * static_cast<double>(row[i]);
        return 1.0 / (1.0 + std::exp(-z));
    }
};

inline LogisticModel train_logistic(const FlatDataset& data, const LogisticConfig& cfg) {
    if (data.n == 0) throw std::invalid_argument("train_logistic: empty dataset");
    LogisticModel model;
    model.w = Eigen::VectorXd::Zero(data.dim);
    Eigen::VectorXd grad_w(data.dim);
    double grad_b = 0.0;

    std::vector<TensorView> params = {{model.w.data(), static_cast<std::size_t>(data.dim)},
                                      {&model.bias, 1}};
    AdamState adam;
    adam.init(params);
    const double reg = std::isfinite(cfg.c) && cfg.c > 0.0
                           ? 1.0 / (cfg.c * static_cast<double>(data.n))
                           : 0.0;

    Rng rng(derive_seed(cfg.seed, 0x6c6f6769));
    std::vector<std::uint32_t> order(data.n);
    std::iota(order.begin(), order.end(), 0u);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t pos = 0; pos < data.n; pos += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(data.n, pos + static_cast<std::size_t>(cfg.batch_size));
            grad_w.setZero();
            grad_b = 0.0;
            const double inv_b = 1.0 / static_cast<double>(end - pos);
            for (std::size_t k = pos; k < end; ++k) {
                const std::size_t i = order[k];
                const float* row = data.row(i);
                const double p = model.predict(row);
                const double err = (p - static_cast<double>(data.y[i])) * inv_b;
                for (int c = 0; c < data.dim; ++c)
                    grad_w(c) += err * static_cast<double>(row[static_cast<std::size_t>(c)]);
                grad_b += err;
            }
            grad_w += reg * model.w;
            if (!grad_w.allFinite() || !std::isfinite(grad_b))
                throw std::runtime_error("train_logistic: diverged (non-finite gradient); lower the learning rate");
            std::vector<TensorView> grads = {{grad_w.data(), static_cast<std::size_t>(data.dim)},
                                             {&grad_b, 1}};
            adam_step(params, grads, adam, cfg.lr);
        }
    }
    return model;
}

inline std::vector<double> predict_logistic(const LogisticModel& model, const FlatDataset& data) {
    std::vector<double> out(data.n);
    for (std::size_t i = 0; i < data.n; ++i) out[i] = model.predict(data.row(i));
    return out;
}

// ---------------------------------------------------------------------------
// CART with Gini impurity. Splits are greedy over midpoint thresholds
// between consecutive distinct sorted values; ties break toward the lowest
// feature index, then the lowest threshold. `x <= threshold` goes left.
// ---------------------------------------------------------------------------

struct TreeConfig {
    int max_depth = -1;        // -1 = unlimited
    int min_samples_leaf = 1;
    int max_features = 0;      // 0 = all, -1 = sqrt(n_features), k > 0 = k
    std::uint64_t seed = 1;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double prob = 0.0;  // positive-class fraction at the leaf
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict(const float* row) const {
        std::int32_t at = 0;
        while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
            const auto& n = nodes[static_cast<std::size_t>(at)];
            at = static_cast<double>(row[n.feature]) <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(at)].prob;
    }
};

namespace tree_detail {

inline double gini(double pos, double n) {
    if (n <= 0.0) return 0.0;
    const double p = pos / n;
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double weighted_gini = 0.0;
};

// Best (feature, midpoint) split by weighted Gini over the given candidate
// features. Exhaustively checked against a brute-force oracle in the tests.
inline SplitChoice best_split(const FlatDataset& data, const std::vector<std::uint32_t>& idx,
                              const std::vector<int>& features, int min_samples_leaf) {
    SplitChoice best;
    const double n = static_cast<double>(idx.size());
    std::vector<std::pair<float, int>> vals(idx.size());

    for (int f : features) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            vals[k] = {data.row(idx[k])[f], data.y[idx[k]]};
        }
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double left_pos = 0.0, total_pos = 0.0;
        for (const auto& [v, y] : vals) total_pos += y;
        double left_n = 0.0;
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            left_n += 1.0;
            left_pos += vals[k].second;
            if (vals[k].first == vals[k + 1].first) continue;
            if (left_n < min_samples_leaf || n - left_n < min_samples_leaf) continue;
            const double thr =
                (static_cast<double>(vals[k].first) + static_cast<double>(vals[k + 1].first)) / 2.0;
            const double wg = (left_n * gini(left_pos, left_n) +
                               (n - left_n) * gini(total_pos - left_pos, n - left_n)) /
                              n;
            const bool better =
                !best.found || wg < best.weighted_gini ||
                (wg == best.weighted_gini &&
                 (f < best.feature || (f == best.feature && thr < best.threshold)));
            if (better) {
                best.found = true;
                best.feature = f;
                best.threshold = thr;
                best.weighted_gini = wg;
            }
        }
    }
    return best;
}

}  // namespace tree_detail

inline DecisionTree train_tree(const FlatDataset& data, const std::vector<std::uint32_t>& sample_idx,
                               const TreeConfig& cfg, Rng* feature_rng = nullptr) {
    if (sample_idx.empty()) throw std::invalid_argument("train_tree: no samples");
    DecisionTree tree;

    int n_candidates = data.dim;
    if (cfg.max_features > 0) n_candidates = std::min(cfg.max_features, data.dim);
    else if (cfg.max_features < 0)
        n_candidates = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(data.dim))));
    Rng local_rng(derive_seed(cfg.seed, 0x74726565));
    Rng& rng = feature_rng ? *feature_rng : local_rng;

    std::vector<int> all_features(static_cast<std::size_t>(data.dim));
    std::iota(all_features.begin(), all_features.end(), 0);

    struct Work {
        std::vector<std::uint32_t> idx;
        std::int32_t node;
        int depth;
    };
    std::vector<Work> stack;
    tree.nodes.emplace_back();
    stack.push_back({sample_idx, 0, 0});

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        double pos = 0.0;
        for (auto i : w.idx) pos += data.y[i];
        const double n = static_cast<double>(w.idx.size());
        TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node)];
        node.prob = pos / n;

        const bool pure = pos == 0.0 || pos == n;
        const bool depth_done = cfg.max_depth >= 0 && w.depth >= cfg.max_depth;
        if (pure || depth_done ||
            w.idx.size() < 2 * static_cast<std::size_t>(cfg.min_samples_leaf)) {
            continue;
        }

        std::vector<int> features;
        if (n_candidates >= data.dim) {
            features = all_features;
        } else {
            // partial Fisher-Yates; sorted so the tie rule stays on feature index
            std::vector<int> pool = all_features;
            for (int k = 0; k < n_candidates; ++k) {
                const std::size_t j =
                    static_cast<std::size_t>(k) +
                    static_cast<std::size_t>(rng.uniform_int(pool.size() - static_cast<std::size_t>(k)));
                std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
            }
            features.assign(pool.begin(), pool.begin() + n_candidates);
            std::sort(features.begin(), features.end());
        }

        const auto split = tree_detail::best_split(data, w.idx, features, cfg.min_samples_leaf);
        if (!split.found) continue;
        const double parent = tree_detail::gini(pos, n);
        if (split.weighted_gini >= parent - 1e-12) continue;  // no impurity decrease

        std::vector<std::uint32_t> left_idx, right_idx;
        for (auto i : w.idx) {
            if (static_cast<double>(data.row(i)[split.feature]) <= split.threshold)
                left_idx.push_back(i);
            else
                right_idx.push_back(i);
        }

        const std::int32_t left_node = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::int32_t right_node = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        TreeNode& parent_node = tree.nodes[static_cast<std::size_t>(w.node)];
        parent_node.feature = split.feature;
        parent_node.threshold = split.threshold;
        parent_node.left = left_node;
        parent_node.right = right_node;
        stack.push_back({std::move(right_idx), right_node, w.depth + 1});
        stack.push_back({std::move(left_idx), left_node, w.depth + 1});
    }
    return tree;
}

inline DecisionTree train_tree(const FlatDataset& data, const TreeConfig& cfg) {
    std::vector<std::uint32_t> idx(data.n);
    std::iota(idx.begin(), idx.end(), 0u);
    return train_tree(data, idx, cfg);
}

inline std::vector<double> predict_tree(const DecisionTree& tree, const FlatDataset& data) {
    std::vector<double> out(data.n);
    for (std::size_t i = 0; i < data.n; ++i) out[i] = tree.predict(data.row(i));
    return out;
}

// ---------------------------------------------------------------------------
// Random forest: bagged CART trees with per-node feature subsampling.
// predict = arithmetic mean of member-tree probabilities. Each tree derives
// its own generator from (seed, tree index), so trees can train in parallel
// without affecting results.
// ---------------------------------------------------------------------------

struct ForestConfig {
    int n_estimators = 100;
    int max_depth = -1;
    int min_samples_leaf = 1;
    bool bootstrap = true;
    int max_features = -1;  // same encoding as TreeConfig; -1 = sqrt
    std::uint64_t seed = 1;
    int n_threads = 0;  // 0 = hardware concurrency
};

struct RandomForest {
    std::vector<DecisionTree> trees;

    double predict(const float* row) const {
        double total = 0.0;
        for (const auto& t : trees) total += t.predict(row);
        return trees.empty() ? 0.0 : total / static_cast<double>(trees.size());
    }
};

inline RandomForest train_forest(const FlatDataset& data, const ForestConfig& cfg) {
    if (data.n == 0) throw std::invalid_argument("train_forest: empty dataset");
    if (cfg.n_estimators <= 0) throw std::invalid_argument("train_forest: n_estimators must be positive");

    auto build_tree = [&](int t) {
        Rng rng(derive_seed(cfg.seed, 0x666f7265, static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> idx(data.n);
        if (cfg.bootstrap) {
            for (auto& i : idx) i = static_cast<std::uint32_t>(rng.uniform_int(data.n));
        } else {
            std::iota(idx.begin(), idx.end(), 0u);
        }
        TreeConfig tc;
        tc.max_depth = cfg.max_depth;
        tc.min_samples_leaf = cfg.min_samples_leaf;
        tc.max_features = cfg.max_features;
        return train_tree(data, idx, tc, &rng);
    };

    RandomForest forest;
    forest.trees.resize(static_cast<std::size_t>(cfg.n_estimators));
    unsigned threads = cfg.n_threads > 0 ? static_cast<unsigned>(cfg.n_threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.n_estimators));
    if (threads <= 1) {
        for (int t = 0; t < cfg.n_estimators; ++t)
            forest.trees[static_cast<std::size_t>(t)] = build_tree(t);
        return forest;
    }
    std::vector<std::future<void>> futures;
    std::atomic<int> next{0};
    for (unsigned w = 0; w < threads; ++w) {
        futures.push_back(std::async(std::launch::async, [&]() {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= cfg.n_estimators) break;
                forest.trees[static_cast<std::size_t>(t)] = build_tree(t);
            }
        }));
    }
    for (auto& f : futures) f.get();
    return forest;
}

inline std::vector<double> predict_forest(const RandomForest& forest, const FlatDataset& data) {
    std::vector<double> out(data.n);
    for (std::size_t i = 0; i < data.n; ++i) out[i] = forest.predict(data.row(i));
    return out;
}

}  // namespace fraudseq
