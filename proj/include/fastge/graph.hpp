#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fastge/error.hpp"

namespace fastge {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Coalesced weights below this are treated as zero and rejected.
inline constexpr double kMinEdgeWeight = 1e-12;

struct Edge {
  Index u = 0;
  Index v = 0;
  double w = 1.0;
};

namespace detail {

inline void check_size(Index expected, Index got, const char* what) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace detail

/// Undirected graph with strictly positive weights, stored as CSR with both
/// directions materialized. Immutable; copies share storage.
class WeightedGraph {
 public:
  WeightedGraph() : WeightedGraph(0) {}

  explicit WeightedGraph(Index n) {
    auto s = std::make_shared<Storage>();
    s->n = n;
    s->offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    data_ = std::move(s);
  }

  /// Builds the graph from an undirected edge list. (u,v) and (v,u) denote
  /// the same edge; duplicates are coalesced by summing weights.
  WeightedGraph(Index n, std::vector<Edge> edges) {
    if (n < 0) throw InputError("graph: negative vertex count");
    for (auto& e : edges) {
      if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
        throw InputError("graph: edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                         ") out of vertex range [0," + std::to_string(n) + ")");
      }
      if (e.u == e.v) throw InputError("graph: self-loop at vertex " + std::to_string(e.u));
      if (!std::isfinite(e.w) || e.w <= 0.0) {
        throw InputError("graph: edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                         ") has non-positive weight; signed graphs are not supported");
      }
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    // Sorting on the weight too makes coalesced sums independent of input order.
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      if (a.u != b.u) return a.u < b.u;
      if (a.v != b.v) return a.v < b.v;
      return a.w < b.w;
    });
    std::vector<Edge> merged;
    merged.reserve(edges.size());
    for (const auto& e : edges) {
      if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v) {
        merged.back().w += e.w;
      } else {
        merged.push_back(e);
      }
    }
    for (const auto& e : merged) {
      if (e.w < kMinEdgeWeight) {
        throw InputError("graph: edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                         ") has weight below " + std::to_string(kMinEdgeWeight));
      }
    }

    auto s = std::make_shared<Storage>();
    s->n = n;
    s->num_edges = static_cast<Index>(merged.size());
    s->offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& e : merged) {
      ++s->offsets[e.u + 1];
      ++s->offsets[e.v + 1];
    }
    std::partial_sum(s->offsets.begin(), s->offsets.end(), s->offsets.begin());
    s->targets.resize(2 * merged.size());
    s->weights.resize(2 * merged.size());
    std::vector<Index> cursor(s->offsets.begin(), s->offsets.end() - 1);
    // merged is sorted by (u,v), so every adjacency row comes out sorted by target.
    for (const auto& e : merged) {
      s->targets[cursor[e.u]] = e.v;
      s->weights[cursor[e.u]++] = e.w;
    }
    for (const auto& e : merged) {
      s->targets[cursor[e.v]] = e.u;
      s->weights[cursor[e.v]++] = e.w;
    }
    for (Index v = 0; v < n; ++v) sort_row(*s, v);
    data_ = std::move(s);
  }

  Index num_vertices() const noexcept { return data_->n; }
  Index num_edges() const noexcept { return data_->num_edges; }

  std::span<const Index> neighbors(Index v) const {
    const auto b = data_->offsets[v];
    const auto e = data_->offsets[v + 1];
    return {data_->targets.data() + b, static_cast<std::size_t>(e - b)};
  }
  std::span<const double> weights(Index v) const {
    const auto b = data_->offsets[v];
    const auto e = data_->offsets[v + 1];
    return {data_->weights.data() + b, static_cast<std::size_t>(e - b)};
  }

  /// Calls f(u, v, w) once per undirected edge with u < v, in sorted order.
  template <class F>
  void for_each_edge(F&& f) const {
    for (Index u = 0; u < data_->n; ++u) {
      for (auto k = data_->offsets[u]; k < data_->offsets[u + 1]; ++k) {
        const Index v = data_->targets[k];
        if (u < v) f(u, v, data_->weights[k]);
      }
    }
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(static_cast<std::size_t>(num_edges()));
    for_each_edge([&](Index u, Index v, double w) { out.push_back({u, v, w}); });
    return out;
  }

  /// Weight of edge (u,v), or 0 when absent.
  double weight(Index u, Index v) const {
    auto nb = neighbors(u);
    auto it = std::lower_bound(nb.begin(), nb.end(), v);
    if (it == nb.end() || *it != v) return 0.0;
    return weights(u)[static_cast<std::size_t>(it - nb.begin())];
  }

  /// Sum of undirected edge weights.
  double total_weight() const {
    double s = 0.0;
    for_each_edge([&](Index, Index, double w) { s += w; });
    return s;
  }

 private:
  struct Storage {
    Index n = 0;
    Index num_edges = 0;
    std::vector<Index> offsets;
    std::vector<Index> targets;
    std::vector<double> weights;
  };

  static void sort_row(Storage& s, Index v) {
    const auto b = s.offsets[v];
    const auto e = s.offsets[v + 1];
    if (std::is_sorted(s.targets.begin() + b, s.targets.begin() + e)) return;
    std::vector<std::pair<Index, double>> row;
    for (auto k = b; k < e; ++k) row.emplace_back(s.targets[k], s.weights[k]);
    std::sort(row.begin(), row.end());
    for (auto k = b; k < e; ++k) {
      s.targets[k] = row[k - b].first;
      s.weights[k] = row[k - b].second;
    }
  }

  std::shared_ptr<const Storage> data_;
};

struct DegreeVector {
  Vector d;
  double vol = 0.0;

  Index size() const noexcept { return d.size(); }
};

inline DegreeVector degrees(const WeightedGraph& g) {
  DegreeVector out;
  out.d = Vector::Zero(g.num_vertices());
  for (Index v = 0; v < g.num_vertices(); ++v) {
    double s = 0.0;
    for (double w : g.weights(v)) s += w;
    out.d[v] = s;
  }
  out.vol = out.d.sum();
  return out;
}

/// Subset of [0, n) stored as an indicator.
class VertexSet {
 public:
  explicit VertexSet(Index n = 0) : member_(static_cast<std::size_t>(n), 0) {}

  static VertexSet from_members(Index n, std::span<const Index> members) {
    VertexSet s(n);
    for (Index v : members) s.insert(v);
    return s;
  }

  Index universe_size() const noexcept { return static_cast<Index>(member_.size()); }

  void insert(Index v) {
    if (v < 0 || v >= universe_size()) {
      throw InputError("vertex set: id " + std::to_string(v) + " out of range");
    }
    member_[static_cast<std::size_t>(v)] = 1;
  }
  void erase(Index v) { member_.at(static_cast<std::size_t>(v)) = 0; }
  bool contains(Index v) const { return member_[static_cast<std::size_t>(v)] != 0; }

  Index count() const {
    return static_cast<Index>(std::count(member_.begin(), member_.end(), std::uint8_t{1}));
  }

  std::vector<Index> members() const {
    std::vector<Index> out;
    for (Index v = 0; v < universe_size(); ++v) {
      if (contains(v)) out.push_back(v);
    }
    return out;
  }

  VertexSet complement() const {
    VertexSet c(universe_size());
    for (std::size_t i = 0; i < member_.size(); ++i) c.member_[i] = member_[i] ? 0 : 1;
    return c;
  }

  Vector indicator() const {
    Vector x(universe_size());
    for (Index v = 0; v < universe_size(); ++v) x[v] = contains(v) ? 1.0 : 0.0;
    return x;
  }

  friend bool operator==(const VertexSet&, const VertexSet&) = default;

 private:
  std::vector<std::uint8_t> member_;
};

/// Sum over edges of w_uv (x_u - x_v)^2.
inline double laplacian_quadratic(const WeightedGraph& g, const Vector& x) {
  detail::check_size(g.num_vertices(), x.size(), "laplacian_quadratic");
  double s = 0.0;
  g.for_each_edge([&](Index u, Index v, double w) {
    const double diff = x[u] - x[v];
    s += w * diff * diff;
  });
  return s;
}

/// y = L_G x, one pass over the adjacency.
inline void laplacian_apply(const WeightedGraph& g, const Vector& x, Vector& y) {
  detail::check_size(g.num_vertices(), x.size(), "laplacian_apply");
  y.resize(x.size());
  for (Index u = 0; u < g.num_vertices(); ++u) {
    const auto nb = g.neighbors(u);
    const auto ws = g.weights(u);
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) acc += ws[k] * (x[u] - x[nb[k]]);
    y[u] = acc;
  }
}

/// Total weight of edges with exactly one endpoint in s.
inline double cut(const WeightedGraph& g, const VertexSet& s) {
  detail::check_size(g.num_vertices(), s.universe_size(), "cut");
  double c = 0.0;
  g.for_each_edge([&](Index u, Index v, double w) {
    if (s.contains(u) != s.contains(v)) c += w;
  });
  return c;
}

inline double volume(const DegreeVector& d, const VertexSet& s) {
  detail::check_size(d.size(), s.universe_size(), "volume");
  double vol = 0.0;
  for (Index v = 0; v < d.size(); ++v) {
    if (s.contains(v)) vol += d.d[v];
  }
  return vol;
}

/// Cut of s in the demand graph K_ij = d_i d_j / vol(V), via vol(S) vol(S^c) / vol(V).
inline double demand_cut(const DegreeVector& d, const VertexSet& s) {
  if (!(d.vol > 0.0)) throw InputError("demand_cut: graph has zero volume");
  const double in = volume(d, s);
  return in * (d.vol - in) / d.vol;
}

/// x^T L_K x = sum_i d_i x_i^2 - (d.x)^2 / vol, the demand-graph quadratic form.
inline double demand_quadratic(const DegreeVector& d, const Vector& x) {
  detail::check_size(d.size(), x.size(), "demand_quadratic");
  if (!(d.vol > 0.0)) throw InputError("demand_quadratic: graph has zero volume");
  const double dx = d.d.dot(x);
  return d.d.dot(x.cwiseProduct(x)) - dx * dx / d.vol;
}

/// Component id per vertex, numbered by smallest member.
inline std::vector<Index> connected_components(const WeightedGraph& g, Index* count = nullptr) {
  const Index n = g.num_vertices();
  std::vector<Index> comp(static_cast<std::size_t>(n), -1);
  std::vector<Index> stack;
  Index next = 0;
  for (Index s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v : g.neighbors(u)) {
        if (comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return comp;
}

inline bool is_connected(const WeightedGraph& g) {
  if (g.num_vertices() <= 1) return true;
  Index count = 0;
  connected_components(g, &count);
  return count == 1;
}

/// Edge-wise sum of two graphs on the same vertex set.
inline WeightedGraph graph_sum(const WeightedGraph& a, const WeightedGraph& b) {
  detail::check_size(a.num_vertices(), b.num_vertices(), "graph_sum");
  auto edges = a.edges();
  auto more = b.edges();
  edges.insert(edges.end(), more.begin(), more.end());
  return WeightedGraph(a.num_vertices(), std::move(edges));
}

inline WeightedGraph scaled(const WeightedGraph& g, double factor) {
  auto edges = g.edges();
  for (auto& e : edges) e.w *= factor;
  return WeightedGraph(g.num_vertices(), std::move(edges));
}

/// Subgraph induced by `vertices`; vertex i of the result is vertices[i].
inline WeightedGraph induced_subgraph(const WeightedGraph& g, std::span<const Index> vertices) {
  std::vector<Index> local(static_cast<std::size_t>(g.num_vertices()), -1);
  for (std::size_t i = 0; i < vertices.size(); ++i) local[vertices[i]] = static_cast<Index>(i);
  std::vector<Edge> edges;
  g.for_each_edge([&](Index u, Index v, double w) {
    if (local[u] >= 0 && local[v] >= 0) edges.push_back({local[u], local[v], w});
  });
  return WeightedGraph(static_cast<Index>(vertices.size()), std::move(edges));
}

}  // namespace fastge
