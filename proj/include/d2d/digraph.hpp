#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace d2d::graph {

/// Adjacency list over vertices 0..n-1. Parallel edges are tolerated.
using Adjacency = std::vector<std::vector<int>>;

/// Every elementary circuit exactly once, each rotated to start at its smallest
/// vertex (Johnson's algorithm). Self-loops are circuits of length one.
/// Throws Error(CycleLimitExceeded) once more than `limit` circuits exist.
std::vector<std::vector<int>> simple_cycles(const Adjacency &adj, std::size_t limit = 10'000);

/// Tarjan's strongly connected components; components come out in reverse
/// topological order of the condensation.
std::vector<std::vector<int>> strongly_connected_components(const Adjacency &adj);

/// Kahn's algorithm with smallest-index-first tie breaking; nullopt when cyclic.
std::optional<std::vector<int>> topological_order(const Adjacency &adj);

} // namespace d2d::graph
