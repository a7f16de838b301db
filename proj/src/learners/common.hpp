#pragma once

// Helpers shared by the learner implementations.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "appnet/learners.hpp"

namespace appnet::detail {

std::vector<std::size_t> predictor_columns(const TrainingMatrix& data);

/// Deterministic holdout: rows ordered by a seeded hash of their index, the
/// first `count` of that order are returned (ascending).
std::vector<std::size_t> hashed_holdout(std::size_t rows, std::size_t count, std::uint64_t seed);

/// Midpoint of two adjacent sorted values that still separates them under `x < t`.
double split_point(double lo, double hi);

/// Removes nodes unreachable from the root and renumbers in pre-order.
std::vector<TreeNode> compact(const std::vector<TreeNode>& nodes);

}  // namespace appnet::detail
