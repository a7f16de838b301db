// Classification tree in the C4.5 style: binary gain-ratio splits (numeric
// thresholds, one-vs-rest on categorical values) with pessimistic-error
// subtree replacement. No subtree raising.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "appnet/learners.hpp"
#include "common.hpp"

namespace appnet {

namespace {

constexpr double kConfidenceZ = 0.6925;  // one-sided z for a 25% confidence factor

double entropy(const std::vector<double>& counts, double total) {
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (double c : counts)
        if (c > 0.0) h -= c / total * std::log2(c / total);
    return h;
}

// Upper confidence bound on the error count of a leaf with `errors` out of `n`.
double pessimistic_errors(double n, double errors) {
    if (n <= 0.0) return 0.0;
    const double f = errors / n;
    const double z2 = kConfidenceZ * kConfidenceZ;
    const double upper =
        (f + z2 / (2 * n) + kConfidenceZ * std::sqrt(f / n - f * f / n + z2 / (4 * n * n))) / (1 + z2 / n);
    return n * upper;
}

struct Candidate {
    double gain = 0.0;
    double ratio = 0.0;
    std::size_t column = 0;
    bool categorical = false;
    double threshold = 0.0;
    int category = -1;
};

class Grower {
public:
    Grower(const TrainingMatrix& data, const TreeParams& params)
        : data_(data), params_(params), predictors_(detail::predictor_columns(data)),
          classes_(data.columns[data.target].categories) {}

    std::vector<TreeNode> grow() {
        std::vector<std::size_t> rows(data_.rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        build(rows, 0);
        return std::move(nodes_);
    }

    // Majority class with ties broken by the lexicographically smallest token.
    int majority(const std::vector<double>& counts) const {
        int best = 0;
        for (int c = 1; c < static_cast<int>(counts.size()); ++c) {
            const auto cu = static_cast<std::size_t>(c), bu = static_cast<std::size_t>(best);
            if (counts[cu] > counts[bu] || (counts[cu] == counts[bu] && classes_[cu] < classes_[bu])) best = c;
        }
        return best;
    }

private:
    int label(std::size_t r) const { return static_cast<int>(data_.at(r, data_.target)); }

    std::vector<double> count(const std::vector<std::size_t>& rows) const {
        std::vector<double> counts(classes_.size(), 0.0);
        for (auto r : rows) counts.at(static_cast<std::size_t>(label(r))) += 1.0;
        return counts;
    }

    int build(const std::vector<std::size_t>& rows, std::size_t depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        auto counts = count(rows);
        const int majority_class = majority(counts);
        {
            TreeNode& n = nodes_[static_cast<std::size_t>(id)];
            n.value = majority_class;
            n.class_counts = counts;
        }
        const bool pure = counts[static_cast<std::size_t>(majority_class)] == static_cast<double>(rows.size());
        if (pure || depth >= params_.max_depth || rows.size() < 2 * params_.min_leaf) return id;

        auto best = best_split(rows, counts);
        if (!best) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) {
            const double x = data_.at(r, best->column);
            const bool go_left = best->categorical ? x == static_cast<double>(best->category) : x < best->threshold;
            (go_left ? left : right).push_back(r);
        }
        const int l = build(left, depth + 1);
        const int rr = build(right, depth + 1);
        TreeNode& n = nodes_[static_cast<std::size_t>(id)];
        n.feature = static_cast<int>(best->column);
        n.categorical_split = best->categorical;
        n.threshold = best->threshold;
        n.category = best->category;
        n.left = l;
        n.right = rr;
        return id;
    }

    std::optional<Candidate> best_split(const std::vector<std::size_t>& rows,
                                        const std::vector<double>& counts) const {
        const double n = static_cast<double>(rows.size());
        const double parent_h = entropy(counts, n);
        std::vector<Candidate> candidates;

        auto evaluate = [&](const std::vector<double>& left, double nl, std::size_t col, bool categorical,
                            double threshold, int category) {
            const double nr = n - nl;
            if (nl < double(params_.min_leaf) || nr < double(params_.min_leaf)) return;
            std::vector<double> right(counts.size());
            for (std::size_t c = 0; c < counts.size(); ++c) right[c] = counts[c] - left[c];
            const double gain = parent_h - (nl / n) * entropy(left, nl) - (nr / n) * entropy(right, nr);
            if (gain <= 1e-12) return;
            const double split_info = entropy({nl, nr}, n);
            candidates.push_back({gain, gain / split_info, col, categorical, threshold, category});
        };

        for (std::size_t col : predictors_) {
            if (data_.columns[col].kind == FeatureKind::categorical) {
                std::map<int, std::vector<double>> by_code;
                for (auto r : rows) {
                    auto& v = by_code[static_cast<int>(data_.at(r, col))];
                    if (v.empty()) v.assign(counts.size(), 0.0);
                    v[static_cast<std::size_t>(label(r))] += 1.0;
                }
                for (const auto& [code, left] : by_code) {
                    double nl = 0.0;
                    for (double c : left) nl += c;
                    evaluate(left, nl, col, true, 0.0, code);
                }
                continue;
            }
            std::vector<std::pair<double, int>> xs;
            xs.reserve(rows.size());
            for (auto r : rows) xs.emplace_back(data_.at(r, col), label(r));
            std::sort(xs.begin(), xs.end());
            std::vector<double> left(counts.size(), 0.0);
            for (std::size_t i = 1; i < xs.size(); ++i) {
                left[static_cast<std::size_t>(xs[i - 1].second)] += 1.0;
                if (xs[i].first == xs[i - 1].first) continue;
                evaluate(left, double(i), col, false, detail::split_point(xs[i - 1].first, xs[i].first), -1);
            }
        }
        if (candidates.empty()) return std::nullopt;

        // Gain ratio restricted to candidates with at least average gain.
        double avg_gain = 0.0;
        for (const auto& c : candidates) avg_gain += c.gain;
        avg_gain /= static_cast<double>(candidates.size());
        std::optional<Candidate> best;
        for (const auto& c : candidates) {
            if (c.gain + 1e-12 < avg_gain) continue;
            if (!best || c.ratio > best->ratio) best = c;
        }
        return best;
    }

    const TrainingMatrix& data_;
    const TreeParams& params_;
    std::vector<std::size_t> predictors_;
    const std::vector<std::string>& classes_;
    std::vector<TreeNode> nodes_;
};

double leaf_errors(const TreeNode& n) {
    double total = 0.0;
    for (double c : n.class_counts) total += c;
    return total - n.class_counts[static_cast<std::size_t>(n.value)];
}

double node_total(const TreeNode& n) {
    double total = 0.0;
    for (double c : n.class_counts) total += c;
    return total;
}

double prune(std::vector<TreeNode>& nodes, int at) {
    TreeNode& n = nodes[static_cast<std::size_t>(at)];
    const double as_leaf = pessimistic_errors(node_total(n), leaf_errors(n));
    if (n.is_leaf()) return as_leaf;
    const int l = n.left, r = n.right;
    const double subtree = prune(nodes, l) + prune(nodes, r);
    if (as_leaf > subtree) return subtree;
    TreeNode& self = nodes[static_cast<std::size_t>(at)];
    self.feature = -1;
    self.categorical_split = false;
    self.threshold = 0.0;
    self.category = -1;
    self.left = self.right = -1;
    return as_leaf;
}

}  // namespace

TreeModel train_classification_tree(const TrainingMatrix& data, const TreeParams& params) {
    validate_matrix(data);
    const auto& target = data.columns[data.target];
    if (target.kind != FeatureKind::categorical)
        throw std::invalid_argument("classification tree needs a categorical target");
    if (target.categories.empty()) throw std::invalid_argument("categorical target has no category tokens");
    if (params.min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
    if (data.rows() < 1) throw std::invalid_argument("classification tree needs at least 1 row");
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const double code = data.at(r, data.target);
        if (code < 0 || code >= static_cast<double>(target.categories.size()) || code != std::floor(code))
            throw std::invalid_argument("target value is not a valid category code");
    }

    Grower grower(data, params);
    auto nodes = grower.grow();
    prune(nodes, 0);

    TreeModel model;
    model.arity = data.cols();
    model.target = data.target;
    model.target_kind = FeatureKind::categorical;
    model.classes = target.categories;
    model.nodes = detail::compact(nodes);
    for (auto& n : model.nodes)
        if (!n.is_leaf()) n.class_counts.clear();
    return model;
}

}  // namespace appnet
