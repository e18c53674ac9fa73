#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/operators.hpp"

namespace fastge {

/// A must-link or cannot-link pair. Without an explicit weight the merge step
/// derives one from the data-graph degrees.
struct Constraint {
  Index u = 0;
  Index v = 0;
  std::optional<double> weight;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct ConstraintSet {
  std::vector<Constraint> ml;
  std::vector<Constraint> cl;

  bool empty() const noexcept { return ml.empty() && cl.empty(); }
  std::size_t size() const noexcept { return ml.size() + cl.size(); }

  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

/// Checks ids, self pairs, weights and ML/CL conflicts against a graph of n vertices.
inline void validate(const ConstraintSet& c, Index n) {
  auto check = [n](const Constraint& k, const char* kind) {
    if (k.u < 0 || k.u >= n || k.v < 0 || k.v >= n) {
      throw InputError(std::string(kind) + " constraint (" + std::to_string(k.u) + "," +
                       std::to_string(k.v) + ") out of vertex range [0," + std::to_string(n) + ")");
    }
    if (k.u == k.v) {
      throw InputError(std::string(kind) + " constraint joins vertex " + std::to_string(k.u) +
                       " to itself");
    }
    if (k.weight && !(*k.weight > 0.0 && std::isfinite(*k.weight))) {
      throw InputError(std::string(kind) + " constraint (" + std::to_string(k.u) + "," +
                       std::to_string(k.v) + ") has a non-positive weight");
    }
  };
  std::set<std::pair<Index, Index>> ml_pairs;
  for (const auto& k : c.ml) {
    check(k, "ML");
    ml_pairs.emplace(std::min(k.u, k.v), std::max(k.u, k.v));
  }
  for (const auto& k : c.cl) {
    check(k, "CL");
    if (ml_pairs.count({std::min(k.u, k.v), std::max(k.u, k.v)})) {
      throw InputError("pair (" + std::to_string(k.u) + "," + std::to_string(k.v) +
                       ") is both must-link and cannot-link");
    }
  }
}

/// How the demand graph K is normalized before the 1/n damping inside H.
enum class DemandNormalization {
  /// K is divided by its smallest edge weight min_{i!=j} d_i d_j / vol.
  minimum_demand_edge,
  /// The data graph is rescaled to unit minimum edge weight and K is built from it.
  data_graph_minimum_edge,
};

struct MergeOptions {
  DemandNormalization normalization = DemandNormalization::minimum_demand_edge;
};

/// The pair (G, H): G = G_D + G_ML, H = scale * K + G_CL.
struct MergedProblem {
  WeightedGraph g;
  WeightedGraph h_sparse;
  double h_demand_scale = 0.0;
  /// Degrees of the (possibly rescaled) data graph; these define K.
  DegreeVector d;

  Index size() const noexcept { return g.num_vertices(); }
  LaplacianOperator g_operator() const { return LaplacianOperator(g); }
  LaplacianOperator h_operator() const { return LaplacianOperator(h_sparse, h_demand_scale, d); }
};

/// Degree-based constraint weight d_u d_v / (d_min d_max).
inline double auto_weight(const DegreeVector& d, Index u, Index v) {
  if (u < 0 || u >= d.size() || v < 0 || v >= d.size()) {
    throw InputError("auto_weight: vertex out of range");
  }
  for (Index x : {u, v}) {
    if (!(d.d[x] > 0.0)) {
      throw InputError("auto_weight: vertex " + std::to_string(x) + " is isolated in the data graph");
    }
  }
  Index argmin = 0;
  for (Index i = 1; i < d.size(); ++i) {
    if (d.d[i] < d.d[argmin]) argmin = i;
  }
  if (!(d.d[argmin] > 0.0)) {
    throw InputError("auto_weight: vertex " + std::to_string(argmin) +
                     " is isolated in the data graph");
  }
  return d.d[u] * d.d[v] / (d.d[argmin] * d.d.maxCoeff());
}

namespace detail {

inline double smallest_demand_edge(const DegreeVector& d) {
  double first = std::numeric_limits<double>::infinity();
  double second = first;
  for (Index i = 0; i < d.size(); ++i) {
    const double x = d.d[i];
    if (x < first) {
      second = first;
      first = x;
    } else if (x < second) {
      second = x;
    }
  }
  return first * second / d.vol;
}

}  // namespace detail

/// Merges the data graph with explicit constraints into (G, H).
///
/// Unweighted constraints get auto_weight(); explicit weights are used as given.
/// H always carries a damped copy of the demand graph, so the pencil stays
/// well defined when there are few or no cannot-link constraints.
inline MergedProblem merge(const WeightedGraph& data, const ConstraintSet& constraints,
                           const MergeOptions& options = {}) {
  const Index n = data.num_vertices();
  if (n < 2) throw InputError("merge: data graph needs at least two vertices");
  validate(constraints, n);
  if (!is_connected(data)) {
    throw DisconnectedGraphError(
        "merge: data graph is disconnected; extract the largest connected component first");
  }

  MergedProblem out;
  WeightedGraph base = data;
  if (options.normalization == DemandNormalization::data_graph_minimum_edge) {
    double wmin = std::numeric_limits<double>::infinity();
    data.for_each_edge([&](Index, Index, double w) { wmin = std::min(wmin, w); });
    base = scaled(data, 1.0 / wmin);
  }
  out.d = degrees(base);

  auto weighted = [&](const std::vector<Constraint>& list) {
    std::vector<Edge> edges;
    edges.reserve(list.size());
    for (const auto& k : list) {
      edges.push_back({k.u, k.v, k.weight ? *k.weight : auto_weight(out.d, k.u, k.v)});
    }
    return edges;
  };

  auto g_edges = base.edges();
  auto ml = weighted(constraints.ml);
  g_edges.insert(g_edges.end(), ml.begin(), ml.end());
  out.g = WeightedGraph(n, std::move(g_edges));
  out.h_sparse = WeightedGraph(n, weighted(constraints.cl));

  const double dn = static_cast<double>(n);
  switch (options.normalization) {
    case DemandNormalization::minimum_demand_edge:
      out.h_demand_scale = 1.0 / (dn * detail::smallest_demand_edge(out.d));
      break;
    case DemandNormalization::data_graph_minimum_edge:
      out.h_demand_scale = 1.0 / dn;
      break;
  }
  return out;
}

inline std::string to_string(DemandNormalization n) {
  return n == DemandNormalization::minimum_demand_edge ? "minimum_demand_edge"
                                                       : "data_graph_minimum_edge";
}

inline DemandNormalization parse_demand_normalization(const std::string& s) {
  if (s == "minimum_demand_edge") return DemandNormalization::minimum_demand_edge;
  if (s == "data_graph_minimum_edge") return DemandNormalization::data_graph_minimum_edge;
  throw InputError("unknown demand normalization '" + s + "'");
}

}  // namespace fastge
