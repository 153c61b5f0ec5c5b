#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skm/gradcheck.hpp"
#include "skm/skeleton_graph.hpp"

namespace skm {

struct GradcheckCase {
  std::string suite;  // "ops", "blocks" or "losses"
  std::string name;
  GradcheckResult result;
};

// Random tree with the given number of edges (topological order).
SkeletonTopology random_topology(int edges, std::mt19937_64& rng);

// Finite-difference checks of every differentiable operator ("ops"), network
// block ("blocks") and loss ("losses") on small random instances (3-7 edges,
// T = 8). `module` is one of all, ops, blocks, losses.
std::vector<GradcheckCase> run_gradcheck_suites(const std::string& module, std::uint64_t seed = 7);

}  // namespace skm
