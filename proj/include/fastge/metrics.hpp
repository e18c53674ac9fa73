#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/operators.hpp"

namespace fastge {

using Labels = std::vector<Index>;

/// Fraction of vertex pairs on which two labelings agree (together in both or
/// apart in both). Computed from the contingency table in O(n log n).
inline double rand_index(std::span<const Index> a, std::span<const Index> b) {
  if (a.size() != b.size()) {
    throw DimensionError("rand_index: label vectors differ in length (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  const auto n = static_cast<std::int64_t>(a.size());
  if (n < 2) return 1.0;
  auto pairs = [](std::int64_t c) { return c * (c - 1) / 2; };
  std::map<Index, std::int64_t> ca, cb;
  std::map<std::pair<Index, Index>, std::int64_t> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  std::int64_t same_both = 0, same_a = 0, same_b = 0;
  for (const auto& [key, c] : joint) same_both += pairs(c);
  for (const auto& [key, c] : ca) same_a += pairs(c);
  for (const auto& [key, c] : cb) same_b += pairs(c);
  const std::int64_t total = pairs(n);
  const std::int64_t agree = total + 2 * same_both - same_a - same_b;
  return static_cast<double>(agree) / static_cast<double>(total);
}

struct QualityReport {
  std::optional<double> rand_index;
  /// cut_G(C_i) / cut_H(C_i); +inf where cut_H(C_i) = 0.
  std::vector<double> per_cluster_badness;
  double max_badness = 0.0;
  std::optional<double> sweep_certificate;

  bool has_infinite_badness() const { return std::isinf(max_badness); }
};

/// Number of clusters in a contiguous labeling, validating it on the way.
inline Index cluster_count(std::span<const Index> labels) {
  Index k = 0;
  for (Index c : labels) {
    if (c < 0) throw InputError("labels: negative cluster id");
    k = std::max(k, c + 1);
  }
  return k;
}

/// Badness phi_i = cut_G(C_i)/cut_H(C_i) of every cluster, and their maximum.
inline QualityReport badness(const WeightedGraph& g, const LaplacianOperator& h,
                             std::span<const Index> labels) {
  const Index n = g.num_vertices();
  detail::check_size(n, static_cast<Index>(labels.size()), "badness");
  detail::check_size(n, h.size(), "badness operator");
  const Index k = cluster_count(labels);
  std::vector<double> cut_g(static_cast<std::size_t>(k), 0.0);
  std::vector<double> cut_h(static_cast<std::size_t>(k), 0.0);
  auto crossing = [&](const WeightedGraph& graph, std::vector<double>& acc, double factor) {
    graph.for_each_edge([&](Index u, Index v, double w) {
      if (labels[u] != labels[v]) {
        acc[labels[u]] += factor * w;
        acc[labels[v]] += factor * w;
      }
    });
  };
  crossing(g, cut_g, 1.0);
  if (h.sparse_part()) crossing(*h.sparse_part(), cut_h, 1.0);
  if (h.has_demand_part()) {
    std::vector<double> vol(static_cast<std::size_t>(k), 0.0);
    for (Index v = 0; v < n; ++v) vol[labels[v]] += h.demand().d[v];
    const double total = h.demand().vol;
    for (Index c = 0; c < k; ++c) {
      cut_h[c] += h.demand_scale() * vol[c] * (total - vol[c]) / total;
    }
  }
  QualityReport report;
  report.per_cluster_badness.resize(static_cast<std::size_t>(k));
  report.max_badness = k > 0 ? 0.0 : std::numeric_limits<double>::infinity();
  for (Index c = 0; c < k; ++c) {
    const double phi =
        cut_h[c] > 0.0 ? cut_g[c] / cut_h[c] : std::numeric_limits<double>::infinity();
    report.per_cluster_badness[c] = phi;
    report.max_badness = std::max(report.max_badness, phi);
  }
  return report;
}

struct PhiResult {
  double value = std::numeric_limits<double>::infinity();
  VertexSet set;
};

inline constexpr Index kBruteForceMaxVertices = 20;

/// Exact phi(G,H) = min over proper bipartitions of cut_G / cut_H, by
/// enumerating all 2^(n-1) - 1 of them. Bipartitions with cut_H = 0 are
/// skipped. Test oracle; n <= 20.
inline PhiResult brute_force_phi(const WeightedGraph& g, const LaplacianOperator& h) {
  const Index n = g.num_vertices();
  detail::check_size(n, h.size(), "brute_force_phi");
  if (n > kBruteForceMaxVertices) {
    throw InputError("brute_force_phi: n = " + std::to_string(n) + " exceeds " +
                     std::to_string(kBruteForceMaxVertices));
  }
  if (n < 2) throw InputError("brute_force_phi: need at least two vertices");
  const auto g_edges = g.edges();
  const auto h_edges = h.sparse_part() ? h.sparse_part()->edges() : std::vector<Edge>{};
  PhiResult best;
  best.set = VertexSet(n);
  // Vertex n-1 stays outside S, so each bipartition is visited once.
  const std::uint32_t limit = 1u << (n - 1);
  for (std::uint32_t mask = 1; mask < limit; ++mask) {
    auto in = [mask](Index v) { return ((mask >> v) & 1u) != 0; };
    double cg = 0.0, ch = 0.0;
    for (const auto& e : g_edges) {
      if (in(e.u) != in(e.v)) cg += e.w;
    }
    for (const auto& e : h_edges) {
      if (in(e.u) != in(e.v)) ch += e.w;
    }
    if (h.has_demand_part()) {
      double vol = 0.0;
      for (Index v = 0; v < n; ++v) {
        if (in(v)) vol += h.demand().d[v];
      }
      ch += h.demand_scale() * vol * (h.demand().vol - vol) / h.demand().vol;
    }
    if (!(ch > 0.0)) continue;
    const double ratio = cg / ch;
    if (ratio < best.value) {
      best.value = ratio;
      best.set = VertexSet(n);
      for (Index v = 0; v < n; ++v) {
        if (in(v)) best.set.insert(v);
      }
    }
  }
  return best;
}

}  // namespace fastge
