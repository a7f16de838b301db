// Regression tree: greedy variance-reduction growth, then reduced-error
// pruning against a deterministic holdout of the training rows.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "appnet/learners.hpp"
#include "common.hpp"

namespace appnet {

namespace {

struct Split {
    bool found = false;
    double gain = 0.0;
    std::size_t column = 0;
    bool categorical = false;
    double threshold = 0.0;
    int category = -1;
};

class Grower {
public:
    Grower(const TrainingMatrix& data, const TreeParams& params)
        : data_(data), params_(params), predictors_(detail::predictor_columns(data)) {}

    std::vector<TreeNode> grow(const std::vector<std::size_t>& rows) {
        nodes_.clear();
        build(rows, 0);
        return std::move(nodes_);
    }

private:
    double y(std::size_t r) const { return data_.at(r, data_.target); }

    int build(const std::vector<std::size_t>& rows, std::size_t depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        double mean = 0.0;
        for (auto r : rows) mean += y(r);
        mean /= static_cast<double>(rows.size());
        double sse = 0.0;
        for (auto r : rows) sse += (y(r) - mean) * (y(r) - mean);
        nodes_[static_cast<std::size_t>(id)].value = mean;

        if (depth >= params_.max_depth || rows.size() < 2 * params_.min_leaf || sse <= 0.0) return id;
        const Split best = best_split(rows, mean, sse);
        if (!best.found) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) {
            const double x = data_.at(r, best.column);
            const bool go_left = best.categorical ? x == static_cast<double>(best.category) : x < best.threshold;
            (go_left ? left : right).push_back(r);
        }
        const int l = build(left, depth + 1);
        const int rr = build(right, depth + 1);
        TreeNode& n = nodes_[static_cast<std::size_t>(id)];
        n.feature = static_cast<int>(best.column);
        n.categorical_split = best.categorical;
        n.threshold = best.threshold;
        n.category = best.category;
        n.left = l;
        n.right = rr;
        return id;
    }

    // Sum of squared errors of a partition from centred sums.
    static double partition_sse(double sum, double sumsq, double n) { return sumsq - sum * sum / n; }

    Split best_split(const std::vector<std::size_t>& rows, double mean, double parent_sse) const {
        Split best;
        const std::size_t n = rows.size();
        const double tolerance = 1e-12 * std::max(1.0, parent_sse);
        auto consider = [&](double gain, std::size_t col, bool categorical, double threshold, int category) {
            if (gain > tolerance && (!best.found || gain > best.gain)) {
                best = {true, gain, col, categorical, threshold, category};
            }
        };

        std::vector<std::pair<double, double>> xs(n);  // (predictor, centred target)
        for (std::size_t col : predictors_) {
            for (std::size_t i = 0; i < n; ++i) xs[i] = {data_.at(rows[i], col), y(rows[i]) - mean};
            double total = 0.0, total_sq = 0.0;
            for (const auto& [x, t] : xs) {
                total += t;
                total_sq += t * t;
            }

            if (data_.columns[col].kind == FeatureKind::categorical) {
                std::map<int, std::pair<double, double>> by_code;
                std::map<int, std::size_t> counts;
                for (const auto& [x, t] : xs) {
                    auto& acc = by_code[static_cast<int>(x)];
                    acc.first += t;
                    acc.second += t * t;
                    ++counts[static_cast<int>(x)];
                }
                for (const auto& [code, acc] : by_code) {
                    const std::size_t nl = counts[code];
                    const std::size_t nr = n - nl;
                    if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
                    const double sse = partition_sse(acc.first, acc.second, double(nl)) +
                                       partition_sse(total - acc.first, total_sq - acc.second, double(nr));
                    consider(parent_sse - sse, col, true, 0.0, code);
                }
                continue;
            }

            std::sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                left_sum += xs[i - 1].second;
                left_sq += xs[i - 1].second * xs[i - 1].second;
                if (xs[i].first == xs[i - 1].first) continue;
                if (i < params_.min_leaf || n - i < params_.min_leaf) continue;
                const double sse = partition_sse(left_sum, left_sq, double(i)) +
                                   partition_sse(total - left_sum, total_sq - left_sq, double(n - i));
                consider(parent_sse - sse, col, false, detail::split_point(xs[i - 1].first, xs[i].first), -1);
            }
        }
        return best;
    }

    const TrainingMatrix& data_;
    const TreeParams& params_;
    std::vector<std::size_t> predictors_;
    std::vector<TreeNode> nodes_;
};

// Holdout squared error of the subtree at `at`; collapses it to a leaf when
// that error is not lower than the error of predicting the node's own mean.
double prune(std::vector<TreeNode>& nodes, int at, const TrainingMatrix& data,
             const std::vector<std::size_t>& holdout) {
    TreeNode& n = nodes[static_cast<std::size_t>(at)];
    double leaf_error = 0.0;
    for (auto r : holdout) {
        const double d = data.at(r, data.target) - n.value;
        leaf_error += d * d;
    }
    if (n.is_leaf()) return leaf_error;

    std::vector<std::size_t> left, right;
    for (auto r : holdout) {
        const double x = data.at(r, static_cast<std::size_t>(n.feature));
        const bool go_left = n.categorical_split ? x == static_cast<double>(n.category) : x < n.threshold;
        (go_left ? left : right).push_back(r);
    }
    const int l = n.left, rr = n.right;
    const double subtree_error = prune(nodes, l, data, left) + prune(nodes, rr, data, right);
    TreeNode& self = nodes[static_cast<std::size_t>(at)];
    if (subtree_error < leaf_error) return subtree_error;
    self.feature = -1;
    self.categorical_split = false;
    self.threshold = 0.0;
    self.category = -1;
    self.left = self.right = -1;
    return leaf_error;
}

}  // namespace

TreeModel train_regression_tree(const TrainingMatrix& data, const TreeParams& params) {
    validate_matrix(data);
    if (data.columns[data.target].kind != FeatureKind::numeric)
        throw std::invalid_argument("regression tree needs a numeric target");
    if (params.min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
    if (!(params.prune_fraction >= 0.0 && params.prune_fraction < 1.0))
        throw std::invalid_argument("prune_fraction must lie in [0, 1)");
    const std::size_t n = data.rows();
    if (n < 2) throw std::invalid_argument("regression tree needs at least 2 rows");

    auto holdout_count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * params.prune_fraction));
    if (n - holdout_count < 2) holdout_count = 0;
    const auto holdout = detail::hashed_holdout(n, holdout_count, params.prune_seed);

    std::vector<std::size_t> growing;
    for (std::size_t r = 0, h = 0; r < n; ++r) {
        if (h < holdout.size() && holdout[h] == r) {
            ++h;
            continue;
        }
        growing.push_back(r);
    }

    Grower grower(data, params);
    auto nodes = grower.grow(growing);
    if (!holdout.empty()) prune(nodes, 0, data, holdout);

    TreeModel model;
    model.arity = data.cols();
    model.target = data.target;
    model.target_kind = FeatureKind::numeric;
    model.nodes = detail::compact(nodes);
    return model;
}

}  // namespace appnet
