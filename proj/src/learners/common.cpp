#include "common.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace appnet {

void TrainingMatrix::add_row(std::span<const double> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("row width does not match matrix columns");
    values.insert(values.end(), row.begin(), row.end());
}

void validate_matrix(const TrainingMatrix& data) {
    if (data.columns.empty()) throw std::invalid_argument("training matrix has no columns");
    if (data.values.size() % data.columns.size() != 0) throw std::invalid_argument("training matrix is ragged");
    if (data.target >= data.columns.size()) throw std::invalid_argument("target column out of range");
}

std::size_t TreeModel::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int bin_of(std::span<const double> edges, double value) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

namespace {

// Reads column `col` of a model-aligned row that may omit the target cell.
double cell(std::span<const double> row, std::size_t arity, std::size_t target, std::size_t col) {
    if (row.size() == arity) return row[col];
    return row[col < target ? col : col - 1];
}

void check_arity(std::span<const double> row, std::size_t arity) {
    if (row.size() != arity && row.size() + 1 != arity)
        throw std::invalid_argument("row has " + std::to_string(row.size()) + " values, model expects " +
                                    std::to_string(arity) + " (or " + std::to_string(arity - 1) +
                                    " without the target)");
}

}  // namespace

double predict(const TreeModel& model, std::span<const double> row) {
    check_arity(row, model.arity);
    std::size_t at = 0;
    while (!model.nodes[at].is_leaf()) {
        const TreeNode& n = model.nodes[at];
        const double x = cell(row, model.arity, model.target, static_cast<std::size_t>(n.feature));
        const bool left = n.categorical_split ? x == static_cast<double>(n.category) : x < n.threshold;
        at = static_cast<std::size_t>(left ? n.left : n.right);
    }
    return model.nodes[at].value;
}

double predict(const DecisionTableModel& model, std::span<const double> row) {
    check_arity(row, model.arity);
    std::vector<int> key;
    key.reserve(model.selected.size());
    for (std::size_t i = 0; i < model.selected.size(); ++i) {
        const double x = cell(row, model.arity, model.target, model.selected[i]);
        key.push_back(model.kinds[i] == FeatureKind::categorical ? static_cast<int>(x)
                                                                 : bin_of(model.bin_edges[i], x));
    }
    auto it = model.cells.find(key);
    return it == model.cells.end() ? model.fallback : it->second;
}

double predict(const Model& model, std::span<const double> row) {
    return std::visit([&](const auto& m) { return predict(m, row); }, model);
}

namespace detail {

std::vector<std::size_t> predictor_columns(const TrainingMatrix& data) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < data.cols(); ++c)
        if (c != data.target) cols.push_back(c);
    return cols;
}

std::vector<std::size_t> hashed_holdout(std::size_t rows, std::size_t count, std::uint64_t seed) {
    auto hash = [seed](std::uint64_t i) {
        std::uint64_t x = i + seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ha = hash(a), hb = hash(b);
        return ha != hb ? ha < hb : a < b;
    });
    order.resize(std::min(count, rows));
    std::sort(order.begin(), order.end());
    return order;
}

double split_point(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid > lo ? mid : hi;
}

std::vector<TreeNode> compact(const std::vector<TreeNode>& nodes) {
    std::vector<TreeNode> out;
    auto visit = [&](auto&& self, int at) -> int {
        const int id = static_cast<int>(out.size());
        out.push_back(nodes[static_cast<std::size_t>(at)]);
        if (!out[static_cast<std::size_t>(id)].is_leaf()) {
            const int l = self(self, nodes[static_cast<std::size_t>(at)].left);
            const int r = self(self, nodes[static_cast<std::size_t>(at)].right);
            out[static_cast<std::size_t>(id)].left = l;
            out[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    };
    if (!nodes.empty()) visit(visit, 0);
    return out;
}

}  // namespace detail
}  // namespace appnet
