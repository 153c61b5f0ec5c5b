#include "skm/skeleton_graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <stdexcept>
#include <tuple>

namespace skm {

SkeletonTopology::SkeletonTopology(std::vector<int> parent_of_edge)
    : parent_(std::move(parent_of_edge)) {
  const int n = num_edges();
  children_.assign(n, {});
  for (int e = 0; e < n; ++e) {
    const int p = parent_[e];
    if (p >= e || p < -1) {
      throw std::invalid_argument("skeleton topology: parent of edge " + std::to_string(e) +
                                  " is " + std::to_string(p) +
                                  "; edges must be in topological order");
    }
    if (p < 0) {
      root_children_.push_back(e);
    } else {
      children_[p].push_back(e);
    }
  }
  for (int e = 0; e < n; ++e) {
    if (children_[e].empty()) end_effectors_.push_back(e);
  }
}

int SkeletonTopology::node_degree(int node) const {
  if (node == 0) return static_cast<int>(root_children_.size());
  return 1 + static_cast<int>(children_[node - 1].size());
}

std::vector<int> SkeletonTopology::chain_to(int e) const {
  std::vector<int> chain;
  for (int cur = e; cur >= 0; cur = parent_[cur]) chain.push_back(cur);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<int> edge_distances(const SkeletonTopology& topology, int source) {
  const int n = topology.num_edges();
  std::vector<int> dist(n, -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  auto visit = [&](int from, int to) {
    if (dist[to] < 0) {
      dist[to] = dist[from] + 1;
      queue.push_back(to);
    }
  };
  while (!queue.empty()) {
    const int e = queue.front();
    queue.pop_front();
    // Edges sharing the parent node: the parent edge and all siblings.
    const int pn = topology.parent_node(e);
    if (pn != 0) visit(e, topology.edge_of_node(pn));
    for (int s : topology.edges_below(pn)) visit(e, s);
    // Edges sharing the child node.
    for (int c : topology.children_of_edge(e)) visit(e, c);
  }
  return dist;
}

AdjacencyLists build_adjacency(const SkeletonTopology& topology, int d) {
  if (d < 0) throw std::invalid_argument("adjacency radius must be non-negative");
  AdjacencyLists adj;
  adj.d = d;
  adj.lists.resize(topology.num_edges());
  for (int i = 0; i < topology.num_edges(); ++i) {
    const auto dist = edge_distances(topology, i);
    for (int j = 0; j < topology.num_edges(); ++j) {
      if (dist[j] >= 0 && dist[j] <= d) adj.lists[i].push_back(j);
    }
  }
  return adj;
}

std::vector<int> root_support(const SkeletonTopology& topology, int d) {
  const int n = topology.num_edges();
  std::vector<int> dist(n, -1);
  std::deque<int> queue;
  for (int e : topology.root_edges()) {
    dist[e] = 1;
    queue.push_back(e);
  }
  while (!queue.empty()) {
    const int e = queue.front();
    queue.pop_front();
    auto visit = [&](int to) {
      if (dist[to] < 0) {
        dist[to] = dist[e] + 1;
        queue.push_back(to);
      }
    };
    const int pn = topology.parent_node(e);
    if (pn != 0) visit(topology.edge_of_node(pn));
    for (int s : topology.edges_below(pn)) visit(s);
    for (int c : topology.children_of_edge(e)) visit(c);
  }
  std::vector<int> support;
  for (int e = 0; e < n; ++e) {
    if ((dist[e] >= 0 && dist[e] <= d) || topology.is_end_effector(e)) support.push_back(e);
  }
  return support;
}

std::vector<std::vector<int>> degree2_chains(const SkeletonTopology& topology) {
  std::vector<std::vector<int>> chains;
  for (int e = 0; e < topology.num_edges(); ++e) {
    const int pn = topology.parent_node(e);
    // A chain starts wherever the parent node is not an interior degree-2 node.
    if (pn != 0 && topology.node_degree(pn) == 2) continue;
    std::vector<int> chain{e};
    int cur = e;
    while (topology.children_of_edge(cur).size() == 1) {
      cur = topology.children_of_edge(cur).front();
      chain.push_back(cur);
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

PoolingLevel pool_once(const SkeletonTopology& topology, int p) {
  if (p < 2) throw std::invalid_argument("pooling region size p must be at least 2");
  PoolingLevel level;
  for (const auto& chain : degree2_chains(topology)) {
    const int n = static_cast<int>(chain.size());
    const int remainder = n % p;
    if (remainder > 0) {
      level.regions.emplace_back(chain.begin(), chain.begin() + remainder);
    }
    for (int start = remainder; start < n; start += p) {
      level.regions.emplace_back(chain.begin() + start, chain.begin() + start + p);
    }
  }
  std::sort(level.regions.begin(), level.regions.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  std::vector<int> region_of(topology.num_edges(), -1);
  for (int r = 0; r < static_cast<int>(level.regions.size()); ++r) {
    for (int e : level.regions[r]) region_of[e] = r;
  }
  std::vector<int> pooled_parent(level.regions.size());
  for (int r = 0; r < static_cast<int>(level.regions.size()); ++r) {
    const int top_parent = topology.parent_of_edge(level.regions[r].front());
    pooled_parent[r] = top_parent < 0 ? -1 : region_of[top_parent];
  }
  level.pooled = SkeletonTopology(std::move(pooled_parent));
  return level;
}

PoolingPlan build_pooling_plan(const SkeletonTopology& topology, int p) {
  if (p < 2) throw std::invalid_argument("pooling region size p must be at least 2");
  PoolingPlan plan;
  plan.p = p;
  plan.input = topology;
  while (true) {
    const SkeletonTopology& current = plan.primal();
    auto level = pool_once(current, p);
    if (level.pooled.num_edges() == current.num_edges()) break;
    plan.levels.push_back(std::move(level));
  }
  return plan;
}

std::vector<int> PoolingPlan::primal_assignment() const {
  std::vector<int> assignment(input.num_edges());
  for (int e = 0; e < input.num_edges(); ++e) assignment[e] = e;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& level = levels[l];
    std::vector<int> region_of(topology_at(l).num_edges(), -1);
    for (int r = 0; r < static_cast<int>(level.regions.size()); ++r) {
      for (int e : level.regions[r]) region_of[e] = r;
    }
    for (int& a : assignment) a = region_of[a];
  }
  return assignment;
}

namespace {

struct SubtreeKey {
  int leaves = 0;
  int depth = 0;
  std::string form;

  bool operator<(const SubtreeKey& o) const {
    return std::tie(leaves, depth, form) < std::tie(o.leaves, o.depth, o.form);
  }
};

// Canonical keys for every node and the canonical order of each node's child edges.
struct CanonicalTree {
  std::vector<SubtreeKey> keys;                 // per node
  std::vector<std::vector<int>> ordered_edges;  // per node, child edges sorted
};

CanonicalTree canonicalize(const SkeletonTopology& t) {
  CanonicalTree tree;
  tree.keys.resize(t.num_nodes());
  tree.ordered_edges.resize(t.num_nodes());
  // Children have larger node ids than their parents, so a reverse sweep is post-order.
  for (int node = t.num_nodes() - 1; node >= 0; --node) {
    auto edges = t.edges_below(node);
    std::stable_sort(edges.begin(), edges.end(), [&](int a, int b) {
      return tree.keys[t.child_node(a)] < tree.keys[t.child_node(b)];
    });
    SubtreeKey key;
    key.form = "(";
    for (int e : edges) {
      const auto& ck = tree.keys[t.child_node(e)];
      key.leaves += ck.leaves;
      key.depth = std::max(key.depth, ck.depth + 1);
      key.form += ck.form;
    }
    key.form += ")";
    if (edges.empty()) key.leaves = 1;
    tree.keys[node] = std::move(key);
    tree.ordered_edges[node] = std::move(edges);
  }
  return tree;
}

}  // namespace

std::string canonical_form(const SkeletonTopology& topology) {
  return canonicalize(topology).keys[0].form;
}

Homeomorphism check_homeomorphic(const SkeletonTopology& a, const SkeletonTopology& b) {
  const auto pa = build_pooling_plan(a);
  const auto pb = build_pooling_plan(b);
  const auto& ta = pa.primal();
  const auto& tb = pb.primal();
  Homeomorphism result;
  if (ta.num_edges() != tb.num_edges()) return result;
  const auto ca = canonicalize(ta);
  const auto cb = canonicalize(tb);
  if (ca.keys[0].form != cb.keys[0].form) return result;

  result.homeomorphic = true;
  result.primal_edge_map.assign(ta.num_edges(), -1);
  std::function<void(int, int)> walk = [&](int na, int nb) {
    const auto& ea = ca.ordered_edges[na];
    const auto& eb = cb.ordered_edges[nb];
    for (std::size_t k = 0; k < ea.size(); ++k) {
      result.primal_edge_map[ea[k]] = eb[k];
      walk(ta.child_node(ea[k]), tb.child_node(eb[k]));
    }
  };
  walk(0, 0);
  return result;
}

std::vector<std::pair<int, int>> end_effector_correspondence(const SkeletonTopology& a,
                                                             const SkeletonTopology& b) {
  const auto h = check_homeomorphic(a, b);
  if (!h.homeomorphic) return {};
  const auto assign_a = build_pooling_plan(a).primal_assignment();
  const auto assign_b = build_pooling_plan(b).primal_assignment();
  std::vector<std::pair<int, int>> pairs;
  for (int ea : a.end_effector_edges()) {
    const int target_primal = h.primal_edge_map[assign_a[ea]];
    for (int eb : b.end_effector_edges()) {
      if (assign_b[eb] == target_primal) {
        pairs.emplace_back(ea, eb);
        break;
      }
    }
  }
  return pairs;
}

SkeletonTopology subdivide_edge(const SkeletonTopology& topology, int e) {
  const int n = topology.num_edges();
  if (e < 0 || e >= n) throw std::out_of_range("subdivide_edge: edge index out of range");
  std::vector<int> parents;
  parents.reserve(n + 1);
  auto remap = [e](int old) { return old <= e ? old : old + 1; };
  for (int i = 0; i < n; ++i) {
    int p = topology.parent_of_edge(i);
    if (p == e) {
      p = e + 1;  // former children of e now hang off the lower half
    } else if (p >= 0) {
      p = remap(p);
    }
    parents.push_back(p);
    if (i == e) parents.push_back(e);
  }
  return SkeletonTopology(std::move(parents));
}

nlohmann::json to_json(const PoolingPlan& plan) {
  nlohmann::json j;
  j["p"] = plan.p;
  j["input_parents"] = plan.input.parents();
  j["levels"] = nlohmann::json::array();
  for (const auto& level : plan.levels) {
    j["levels"].push_back({{"regions", level.regions}, {"pooled_parents", level.pooled.parents()}});
  }
  return j;
}

PoolingPlan pooling_plan_from_json(const nlohmann::json& j) {
  PoolingPlan plan;
  plan.p = j.at("p").get<int>();
  plan.input = SkeletonTopology(j.at("input_parents").get<std::vector<int>>());
  for (const auto& lj : j.at("levels")) {
    PoolingLevel level;
    level.regions = lj.at("regions").get<std::vector<std::vector<int>>>();
    level.pooled = SkeletonTopology(lj.at("pooled_parents").get<std::vector<int>>());
    plan.levels.push_back(std::move(level));
  }
  return plan;
}

}  // namespace skm
