#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "appnet/features.hpp"

namespace appnet {

struct ColumnInfo {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> categories;  // categorical: code -> token
};

/// Row-major matrix of feature values. Categorical cells hold category codes.
struct TrainingMatrix {
    std::vector<ColumnInfo> columns;
    std::vector<double> values;
    std::size_t target = 0;

    std::size_t cols() const { return columns.size(); }
    std::size_t rows() const { return columns.empty() ? 0 : values.size() / columns.size(); }
    double at(std::size_t row, std::size_t col) const { return values[row * columns.size() + col]; }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * columns.size(), columns.size()};
    }
    void add_row(std::span<const double> row);
};

/// Throws std::invalid_argument if the matrix is ragged or the target is out of range.
void validate_matrix(const TrainingMatrix& data);

struct TreeParams {
    std::size_t min_leaf = 2;
    std::size_t max_depth = 20;
    double prune_fraction = 0.25;  // regression tree only; 0 disables pruning
    std::uint64_t prune_seed = 1;
};

struct DecisionTableParams {
    std::size_t max_subset_size = 5;
    std::size_t bins = 10;
    std::size_t stale_limit = 5;  // best-first expansions without improvement before stopping
};

struct TreeNode {
    // Split nodes: feature >= 0. Numeric predictors go left when value < threshold;
    // categorical predictors go left when value == category.
    int feature = -1;
    bool categorical_split = false;
    double threshold = 0.0;
    int category = -1;
    int left = -1;
    int right = -1;
    // Leaves: numeric mean, or majority class code plus class counts.
    double value = 0.0;
    std::vector<double> class_counts;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct TreeModel {
    std::size_t arity = 0;
    std::size_t target = 0;
    FeatureKind target_kind = FeatureKind::numeric;
    std::vector<std::string> classes;
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    std::size_t leaf_count() const;
    bool operator==(const TreeModel&) const = default;
};

struct DecisionTableModel {
    std::size_t arity = 0;
    std::size_t target = 0;
    std::vector<std::size_t> selected;                // column indices
    std::vector<FeatureKind> kinds;                   // per selected column
    std::vector<std::vector<double>> bin_edges;       // per selected column; empty for categorical
    std::map<std::vector<int>, double> cells;         // key -> mean target
    double fallback = 0.0;

    bool operator==(const DecisionTableModel&) const = default;
};

using Model = std::variant<TreeModel, DecisionTableModel>;

/// Variance-reduction tree with reduced-error pruning on a deterministic holdout.
TreeModel train_regression_tree(const TrainingMatrix& data, const TreeParams& params = {});

/// Gain-ratio tree for a categorical target.
TreeModel train_classification_tree(const TrainingMatrix& data, const TreeParams& params = {});

/// Best-first subset search scored by leave-one-out squared error of cell means.
DecisionTableModel train_decision_table(const TrainingMatrix& data, const DecisionTableParams& params = {});

/// `row` is either full width (target cell ignored) or has the target column
/// removed. Categorical trees return the class code.
double predict(const TreeModel& model, std::span<const double> row);
double predict(const DecisionTableModel& model, std::span<const double> row);
double predict(const Model& model, std::span<const double> row);

/// Bin index of `value` given ascending edges.
int bin_of(std::span<const double> edges, double value);

// Text model format; see docs/model_format.md.
inline constexpr int kModelFormatVersion = 1;
void write_model(std::ostream& out, const Model& model);
/// Reads one model block. `line` tracks the current line number for errors.
Model read_model(std::istream& in, std::size_t& line);

}  // namespace appnet
