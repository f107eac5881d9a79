#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <vequil/interaction.hpp>
#include <vequil/interval.hpp>

namespace vequil {

/// Directed multigraph; parallel edges are allowed, self-loops are not.
/// Edges double as the component indices of graph-induced vector problems:
/// component e of the measure tuple lives on the set attached to edge e.
struct DirectedMultigraph {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;  // (tail, head), 0-based

  DirectedMultigraph(int n, std::vector<std::pair<int, int>> e)
      : vertex_count(n), edges(std::move(e)) {
    if (n <= 0) throw std::invalid_argument("DirectedMultigraph: need at least one vertex");
    for (const auto& [u, v] : edges) {
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw std::invalid_argument("DirectedMultigraph: edge endpoint out of range");
      if (u == v) throw std::invalid_argument("DirectedMultigraph: self-loops not supported");
    }
  }

  int edge_count() const { return static_cast<int>(edges.size()); }
};

/// Vertex-by-edge incidence matrix: column e has -1 at the tail and +1 at
/// the head of edge e.
inline Eigen::MatrixXd incidence_matrix(const DirectedMultigraph& g) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.vertex_count, g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    A(g.edges[static_cast<std::size_t>(e)].first, e) = -1.0;
    A(g.edges[static_cast<std::size_t>(e)].second, e) = 1.0;
  }
  return A;
}

/// Interaction matrix C = A'A of the graph: C_ee = 2; for e != f, C_ef
/// counts shared endpoints with sign +1 per same-role endpoint (both tails
/// or both heads) and -1 per opposite-role endpoint.
inline InteractionMatrix interaction_from_graph(const DirectedMultigraph& g) {
  Eigen::MatrixXd A = incidence_matrix(g);
  return InteractionMatrix::factorize(A.transpose() * A);
}

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      parent_[static_cast<std::size_t>(x)] =
          parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
      x = parent_[static_cast<std::size_t>(x)];
    }
    return x;
  }
  /// Returns false when x and y were already connected.
  bool unite(int x, int y) {
    int rx = find(x), ry = find(y);
    if (rx == ry) return false;
    parent_[static_cast<std::size_t>(rx)] = ry;
    return true;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace detail

/// True iff the underlying undirected multigraph contains a cycle (a pair of
/// parallel edges counts). Equivalent to rank deficiency of the edge columns
/// of the incidence matrix.
inline bool has_undirected_cycle(const DirectedMultigraph& g) {
  detail::UnionFind uf(g.vertex_count);
  for (const auto& [u, v] : g.edges)
    if (!uf.unite(u, v)) return true;
  return false;
}

/// True iff the subgraph on the given edge subset (all edges when empty
/// subset pointer semantics are avoided by passing every index) contains a
/// directed cycle; iterative three-color DFS.
inline bool has_directed_cycle(const DirectedMultigraph& g, const std::vector<int>& edge_subset) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.vertex_count));
  for (int e : edge_subset) {
    const auto& [u, v] = g.edges[static_cast<std::size_t>(e)];
    adj[static_cast<std::size_t>(u)].push_back(v);
  }
  std::vector<int> color(static_cast<std::size_t>(g.vertex_count), 0);  // 0 new, 1 open, 2 done
  std::vector<std::pair<int, std::size_t>> stack;
  for (int s = 0; s < g.vertex_count; ++s) {
    if (color[static_cast<std::size_t>(s)] != 0) continue;
    stack.push_back({s, 0});
    color[static_cast<std::size_t>(s)] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < adj[static_cast<std::size_t>(v)].size()) {
        int w = adj[static_cast<std::size_t>(v)][next++];
        if (color[static_cast<std::size_t>(w)] == 1) return true;
        if (color[static_cast<std::size_t>(w)] == 0) {
          color[static_cast<std::size_t>(w)] = 1;
          stack.push_back({w, 0});
        }
      } else {
        color[static_cast<std::size_t>(v)] = 2;
        stack.pop_back();
      }
    }
  }
  return false;
}

inline bool has_directed_cycle(const DirectedMultigraph& g) {
  std::vector<int> all(static_cast<std::size_t>(g.edge_count()));
  std::iota(all.begin(), all.end(), 0);
  return has_directed_cycle(g, all);
}

/// All simple undirected cycles, each reported as a sorted list of edge
/// indices. Cycles are generated as GF(2) combinations of the fundamental
/// cycles of a spanning forest, keeping exactly the combinations whose edge
/// set is connected with every incident vertex of degree 2. overflow is set
/// when more than `limit` cycles exist (or the basis is too large to scan),
/// in which case `cycles` holds the ones found so far.
struct CycleEnumeration {
  std::vector<std::vector<int>> cycles;
  bool overflow = false;
};

inline CycleEnumeration enumerate_undirected_cycles(const DirectedMultigraph& g,
                                                    std::size_t limit = 1024) {
  const int m = g.edge_count();
  const int n = g.vertex_count;
  CycleEnumeration out;

  // Spanning forest; non-tree edges index the fundamental cycles.
  detail::UnionFind uf(n);
  std::vector<int> tree_edges, extra_edges;
  for (int e = 0; e < m; ++e) {
    const auto& [u, v] = g.edges[static_cast<std::size_t>(e)];
    if (uf.unite(u, v))
      tree_edges.push_back(e);
    else
      extra_edges.push_back(e);
  }
  const std::size_t k = extra_edges.size();
  if (k == 0) return out;
  if (k > 20) {  // 2^k combinations would be hopeless
    out.overflow = true;
    return out;
  }

  // Forest adjacency for tree paths.
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));  // (nbr, edge)
  for (int e : tree_edges) {
    const auto& [u, v] = g.edges[static_cast<std::size_t>(e)];
    adj[static_cast<std::size_t>(u)].push_back({v, e});
    adj[static_cast<std::size_t>(v)].push_back({u, e});
  }
  auto tree_path = [&](int s, int t) {
    std::vector<int> parent_v(static_cast<std::size_t>(n), -1);
    std::vector<int> parent_e(static_cast<std::size_t>(n), -1);
    std::vector<int> queue{s};
    parent_v[static_cast<std::size_t>(s)] = s;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      int v = queue[q];
      if (v == t) break;
      for (const auto& [w, e] : adj[static_cast<std::size_t>(v)]) {
        if (parent_v[static_cast<std::size_t>(w)] < 0) {
          parent_v[static_cast<std::size_t>(w)] = v;
          parent_e[static_cast<std::size_t>(w)] = e;
          queue.push_back(w);
        }
      }
    }
    std::vector<int> path;
    for (int v = t; v != s; v = parent_v[static_cast<std::size_t>(v)])
      path.push_back(parent_e[static_cast<std::size_t>(v)]);
    return path;
  };

  // Fundamental cycles as edge bitmasks (m <= 64 * words).
  const std::size_t words = static_cast<std::size_t>(m + 63) / 64;
  std::vector<std::vector<std::uint64_t>> fundamental;
  for (int e : extra_edges) {
    std::vector<std::uint64_t> mask(words, 0);
    auto set_bit = [&](int idx) {
      mask[static_cast<std::size_t>(idx) / 64] |= (std::uint64_t{1} << (idx % 64));
    };
    set_bit(e);
    const auto& [u, v] = g.edges[static_cast<std::size_t>(e)];
    for (int te : tree_path(u, v)) set_bit(te);
    fundamental.push_back(std::move(mask));
  }

  auto is_simple_cycle = [&](const std::vector<std::uint64_t>& mask, std::vector<int>& edges_out) {
    edges_out.clear();
    std::vector<int> degree(static_cast<std::size_t>(n), 0);
    for (int e = 0; e < m; ++e) {
      if (mask[static_cast<std::size_t>(e) / 64] >> (e % 64) & 1) {
        edges_out.push_back(e);
        degree[static_cast<std::size_t>(g.edges[static_cast<std::size_t>(e)].first)]++;
        degree[static_cast<std::size_t>(g.edges[static_cast<std::size_t>(e)].second)]++;
      }
    }
    for (int v = 0; v < n; ++v)
      if (degree[static_cast<std::size_t>(v)] != 0 && degree[static_cast<std::size_t>(v)] != 2)
        return false;
    detail::UnionFind sub(n);
    int merges = 0, involved = 0;
    for (int e : edges_out)
      if (sub.unite(g.edges[static_cast<std::size_t>(e)].first,
                    g.edges[static_cast<std::size_t>(e)].second))
        ++merges;
    for (int v = 0; v < n; ++v)
      if (degree[static_cast<std::size_t>(v)] > 0) ++involved;
    // A connected spanning structure on `involved` vertices needs exactly
    // involved - 1 merging edges.
    return merges == involved - 1;
  };

  std::vector<std::uint64_t> acc(words);
  std::vector<int> edges_out;
  for (std::uint64_t combo = 1; combo < (std::uint64_t{1} << k); ++combo) {
    std::fill(acc.begin(), acc.end(), 0);
    for (std::size_t b = 0; b < k; ++b) {
      if (combo >> b & 1) {
        for (std::size_t w = 0; w < words; ++w) acc[w] ^= fundamental[b][w];
      }
    }
    if (is_simple_cycle(acc, edges_out)) {
      if (out.cycles.size() >= limit) {
        out.overflow = true;
        return out;
      }
      out.cycles.push_back(edges_out);
    }
  }
  std::sort(out.cycles.begin(), out.cycles.end());
  return out;
}

/// Undirected intersection graph on component indices: an edge {i, j} for
/// every pair of support sets at distance zero.
inline std::vector<std::pair<int, int>> intersection_graph_edges(
    const std::vector<IntervalUnion>& sets) {
  std::vector<std::pair<int, int>> edges;
  const int d = static_cast<int>(sets.size());
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (set_distance(sets[static_cast<std::size_t>(i)], sets[static_cast<std::size_t>(j)]) ==
          0.0)
        edges.push_back({i, j});
  return edges;
}

/// Connected components of an undirected graph on n nodes, each component a
/// sorted list of node indices; components are ordered by smallest member.
inline std::vector<std::vector<int>> connected_components(
    int n, const std::vector<std::pair<int, int>>& edges) {
  detail::UnionFind uf(n);
  for (const auto& [u, v] : edges) uf.unite(u, v);
  std::vector<std::vector<int>> by_root(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) by_root[static_cast<std::size_t>(uf.find(v))].push_back(v);
  std::vector<std::vector<int>> comps;
  for (auto& c : by_root)
    if (!c.empty()) comps.push_back(std::move(c));
  return comps;
}

}  // namespace vequil
