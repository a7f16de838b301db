// Decision table for numeric targets: numeric predictors discretised into
// equal-frequency bins, feature subset chosen by best-first forward search
// scored with leave-one-out squared error of the cell means.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "appnet/learners.hpp"
#include "common.hpp"

namespace appnet {

namespace {

std::vector<double> equal_frequency_edges(std::vector<double> values, std::size_t bins) {
    std::sort(values.begin(), values.end());
    std::vector<double> edges;
    const std::size_t n = values.size();
    for (std::size_t b = 1; b < bins; ++b) {
        const double edge = values[b * n / bins];
        if (edge > values.front() && (edges.empty() || edge > edges.back())) edges.push_back(edge);
    }
    return edges;
}

struct Scored {
    double error;
    std::vector<std::size_t> subset;  // indices into the predictor list, ascending

    bool operator<(const Scored& o) const {
        if (error != o.error) return error < o.error;
        if (subset.size() != o.subset.size()) return subset.size() < o.subset.size();
        return subset < o.subset;
    }
};

class SubsetScorer {
public:
    SubsetScorer(const std::vector<std::vector<int>>& keys, const std::vector<double>& y)
        : keys_(keys), y_(y) {
        for (double v : y_) total_ += v;
    }

    // Leave-one-out squared error of predicting each row by its cell mean.
    double score(const std::vector<std::size_t>& subset) const {
        const std::size_t n = y_.size();
        std::map<std::vector<int>, std::pair<double, std::size_t>> cells;
        std::vector<std::vector<int>> row_keys(n);
        for (std::size_t r = 0; r < n; ++r) {
            auto& key = row_keys[r];
            key.reserve(subset.size());
            for (auto p : subset) key.push_back(keys_[p][r]);
            auto& cell = cells[key];
            cell.first += y_[r];
            ++cell.second;
        }
        double error = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const auto& [sum, count] = cells[row_keys[r]];
            const double pred = count > 1 ? (sum - y_[r]) / double(count - 1) : (total_ - y_[r]) / double(n - 1);
            error += (y_[r] - pred) * (y_[r] - pred);
        }
        return error;
    }

private:
    const std::vector<std::vector<int>>& keys_;
    const std::vector<double>& y_;
    double total_ = 0.0;
};

}  // namespace

DecisionTableModel train_decision_table(const TrainingMatrix& data, const DecisionTableParams& params) {
    validate_matrix(data);
    if (data.columns[data.target].kind != FeatureKind::numeric)
        throw std::invalid_argument("decision table needs a numeric target");
    if (params.bins < 2) throw std::invalid_argument("decision table needs bins >= 2");
    const std::size_t n = data.rows();
    if (n < 2) throw std::invalid_argument("decision table needs at least 2 rows");

    const auto predictors = detail::predictor_columns(data);
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) y[r] = data.at(r, data.target);

    std::vector<std::vector<double>> edges(predictors.size());
    std::vector<std::vector<int>> keys(predictors.size(), std::vector<int>(n));
    for (std::size_t p = 0; p < predictors.size(); ++p) {
        const std::size_t col = predictors[p];
        if (data.columns[col].kind == FeatureKind::numeric) {
            std::vector<double> column(n);
            for (std::size_t r = 0; r < n; ++r) column[r] = data.at(r, col);
            edges[p] = equal_frequency_edges(column, params.bins);
            for (std::size_t r = 0; r < n; ++r) keys[p][r] = bin_of(edges[p], column[r]);
        } else {
            for (std::size_t r = 0; r < n; ++r) keys[p][r] = static_cast<int>(data.at(r, col));
        }
    }

    const SubsetScorer scorer(keys, y);
    std::set<Scored> open;
    std::set<std::vector<std::size_t>> visited;
    Scored best{scorer.score({}), {}};
    open.insert(best);
    visited.insert({});
    const double tolerance = 1e-12;
    std::size_t stale = 0;

    while (!open.empty() && stale < params.stale_limit) {
        const Scored node = *open.begin();
        open.erase(open.begin());
        bool improved = false;
        if (node.subset.size() < params.max_subset_size) {
            for (std::size_t p = 0; p < predictors.size(); ++p) {
                if (std::binary_search(node.subset.begin(), node.subset.end(), p)) continue;
                auto child = node.subset;
                child.insert(std::upper_bound(child.begin(), child.end(), p), p);
                if (!visited.insert(child).second) continue;
                Scored scored{scorer.score(child), child};
                if (scored.error < best.error - tolerance * std::max(1.0, best.error)) {
                    best = scored;
                    improved = true;
                }
                open.insert(std::move(scored));
            }
        }
        stale = improved ? 0 : stale + 1;
    }

    DecisionTableModel model;
    model.arity = data.cols();
    model.target = data.target;
    double total = 0.0;
    for (double v : y) total += v;
    model.fallback = total / static_cast<double>(n);
    for (auto p : best.subset) {
        model.selected.push_back(predictors[p]);
        model.kinds.push_back(data.columns[predictors[p]].kind);
        model.bin_edges.push_back(edges[p]);
    }
    std::map<std::vector<int>, std::pair<double, std::size_t>> sums;
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<int> key;
        for (auto p : best.subset) key.push_back(keys[p][r]);
        auto& s = sums[key];
        s.first += y[r];
        ++s.second;
    }
    for (const auto& [key, s] : sums) model.cells[key] = s.first / static_cast<double>(s.second);
    return model;
}

}  // namespace appnet
