#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace skm {

// Skeleton as an edge graph. Nodes are 0..J with node 0 the root; edge i
// always ends at node i + 1. Edges are stored in topological order: the
// parent edge of i (the edge ending at i's parent node) has a smaller index,
// or is -1 when i hangs directly off the root.
class SkeletonTopology {
 public:
  SkeletonTopology() = default;
  explicit SkeletonTopology(std::vector<int> parent_of_edge);

  int num_edges() const { return static_cast<int>(parent_.size()); }
  int num_nodes() const { return num_edges() + 1; }
  int root_node() const { return 0; }

  int parent_of_edge(int e) const { return parent_[e]; }
  const std::vector<int>& parents() const { return parent_; }
  int child_node(int e) const { return e + 1; }
  int parent_node(int e) const { return parent_[e] < 0 ? 0 : parent_[e] + 1; }
  // Edge ending at `node`; -1 for the root.
  int edge_of_node(int node) const { return node - 1; }

  const std::vector<int>& children_of_edge(int e) const { return children_[e]; }
  const std::vector<int>& root_edges() const { return root_children_; }
  // Edges leaving `node`.
  const std::vector<int>& edges_below(int node) const {
    return node == 0 ? root_children_ : children_[node - 1];
  }
  int node_degree(int node) const;

  const std::vector<int>& end_effector_edges() const { return end_effectors_; }
  bool is_end_effector(int e) const { return children_[e].empty(); }

  // Edge path root → e, inclusive, ordered from the root.
  std::vector<int> chain_to(int e) const;

  bool operator==(const SkeletonTopology& o) const { return parent_ == o.parent_; }

 private:
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> root_children_;
  std::vector<int> end_effectors_;
};

// Per-edge neighbourhoods N_i^d (edge ids, sorted ascending).
struct AdjacencyLists {
  int d = 0;
  std::vector<std::vector<int>> lists;
};

// Line-graph distances from edge `source` to every edge.
std::vector<int> edge_distances(const SkeletonTopology& topology, int source);

AdjacencyLists build_adjacency(const SkeletonTopology& topology, int d);

// Edges within distance d of the root node together with every end-effector.
// Root-incident edges sit at distance 1.
std::vector<int> root_support(const SkeletonTopology& topology, int d);

struct PoolingLevel {
  std::vector<std::vector<int>> regions;  // edge ids of the input topology
  SkeletonTopology pooled;                 // region r becomes pooled edge r
};

struct PoolingPlan {
  int p = 2;
  SkeletonTopology input;
  std::vector<PoolingLevel> levels;

  const SkeletonTopology& primal() const {
    return levels.empty() ? input : levels.back().pooled;
  }
  // Topology seen at level l (0 = input, levels.size() = primal).
  const SkeletonTopology& topology_at(std::size_t l) const {
    return l == 0 ? input : levels[l - 1].pooled;
  }
  // For every input edge, the primal edge it ends up in.
  std::vector<int> primal_assignment() const;
};

// Maximal runs of edges joined by degree-2 nodes, each ordered root-first.
std::vector<std::vector<int>> degree2_chains(const SkeletonTopology& topology);

// One pooling level; regions are cut from the far end of each chain so a
// short remainder lands closest to the root.
PoolingLevel pool_once(const SkeletonTopology& topology, int p);

PoolingPlan build_pooling_plan(const SkeletonTopology& topology, int p = 2);

struct Homeomorphism {
  bool homeomorphic = false;
  // primal edge of a → primal edge of b
  std::vector<int> primal_edge_map;
};

Homeomorphism check_homeomorphic(const SkeletonTopology& a, const SkeletonTopology& b);

// Map every end-effector edge of a to the corresponding end-effector edge of b.
// Empty when the skeletons are not homeomorphic.
std::vector<std::pair<int, int>> end_effector_correspondence(const SkeletonTopology& a,
                                                             const SkeletonTopology& b);

// Split edge e into two edges. The upper half keeps index e; the lower half is
// inserted at e + 1 and every later index shifts by one.
SkeletonTopology subdivide_edge(const SkeletonTopology& topology, int e);

// Canonical rooted-tree signature; equal iff isomorphic.
std::string canonical_form(const SkeletonTopology& topology);

nlohmann::json to_json(const PoolingPlan& plan);
PoolingPlan pooling_plan_from_json(const nlohmann::json& j);

}  // namespace skm
