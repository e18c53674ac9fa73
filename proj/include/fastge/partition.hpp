#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/metrics.hpp"
#include "fastge/operators.hpp"

namespace fastge {

/// Cluster id per vertex, ids contiguous in [0, k) and every cluster nonempty.
struct Partition {
  Labels labels;
  Index k = 0;

  Index size() const noexcept { return static_cast<Index>(labels.size()); }
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Renumbers labels by order of first appearance.
inline Partition canonical_partition(std::span<const Index> labels) {
  Partition p;
  p.labels.resize(labels.size());
  std::vector<Index> remap;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Index c = labels[i];
    if (c < 0) throw InputError("partition: negative label");
    if (static_cast<std::size_t>(c) >= remap.size()) remap.resize(static_cast<std::size_t>(c) + 1, -1);
    if (remap[c] < 0) remap[c] = p.k++;
    p.labels[i] = remap[c];
  }
  return p;
}

/// Checks the contiguity and nonemptiness invariants.
inline void validate(const Partition& p) {
  std::vector<char> seen(static_cast<std::size_t>(p.k), 0);
  for (Index c : p.labels) {
    if (c < 0 || c >= p.k) throw InputError("partition: label out of range");
    seen[c] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw InputError("partition: empty cluster");
  }
}

// ---------------------------------------------------------------------------
// Cheeger sweep
// ---------------------------------------------------------------------------

struct SweepResult {
  VertexSet cut_set;
  /// cut_G / cut_H of cut_set, the smallest over all sweep prefixes.
  double ratio_gh = std::numeric_limits<double>::infinity();
  /// Smallest cut_G / cut_K over the sweep prefixes, K the demand graph of G.
  double ratio_gk = std::numeric_limits<double>::infinity();
  /// ratio_gh * ratio_gk / 4; never exceeds the Rayleigh quotient of the
  /// d-orthogonal representative of the swept vector.
  double certificate = 0.0;
  double rayleigh = 0.0;
  Index prefix_size = 0;
};

/// Sorts vertices by x and evaluates all n-1 prefix cuts incrementally in
/// O(m + n log n), including the rank-one demand part of H through running
/// volumes. Returns the prefix minimizing cut_G / cut_H; ties go to the
/// smaller cut_G, then the shorter prefix. Prefixes with cut_H = 0 are skipped.
inline SweepResult cheeger_sweep(const WeightedGraph& g, const LaplacianOperator& h,
                                 const Vector& x_in) {
  const Index n = g.num_vertices();
  detail::check_size(n, x_in.size(), "cheeger_sweep");
  detail::check_size(n, h.size(), "cheeger_sweep operator");
  if (n < 2) throw InputError("cheeger_sweep: need at least two vertices");
  if (x_in.maxCoeff() == x_in.minCoeff()) throw InputError("cheeger_sweep: vector is constant");

  const DegreeVector dg = degrees(g);
  Vector x = x_in;
  if (dg.vol > 0.0) x.array() -= x.dot(dg.d) / dg.vol;

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return x[a] < x[b] || (x[a] == x[b] && a < b);
  });

  std::vector<char> in(static_cast<std::size_t>(n), 0);
  const WeightedGraph* hs = h.sparse_part() ? &*h.sparse_part() : nullptr;
  const double hvol = h.has_demand_part() ? h.demand().vol : 0.0;
  double cut_g = 0.0, cut_hs = 0.0, vol_g = 0.0, vol_h = 0.0;

  SweepResult best;
  double best_cut_g = 0.0;
  Index best_prefix = -1;
  for (Index i = 0; i + 1 < n; ++i) {
    const Index v = order[i];
    in[v] = 1;
    {
      const auto nb = g.neighbors(v);
      const auto ws = g.weights(v);
      for (std::size_t e = 0; e < nb.size(); ++e) cut_g += in[nb[e]] ? -ws[e] : ws[e];
    }
    if (hs) {
      const auto nb = hs->neighbors(v);
      const auto ws = hs->weights(v);
      for (std::size_t e = 0; e < nb.size(); ++e) cut_hs += in[nb[e]] ? -ws[e] : ws[e];
    }
    vol_g += dg.d[v];
    double cut_h = cut_hs;
    if (h.has_demand_part()) {
      vol_h += h.demand().d[v];
      cut_h += h.demand_scale() * vol_h * (hvol - vol_h) / hvol;
    }
    const double cg = std::max(cut_g, 0.0);
    if (dg.vol > 0.0) {
      const double cut_k = vol_g * (dg.vol - vol_g) / dg.vol;
      if (cut_k > 0.0) best.ratio_gk = std::min(best.ratio_gk, cg / cut_k);
    }
    if (!(cut_h > 0.0)) continue;
    const double ratio = cg / cut_h;
    if (best_prefix < 0 || ratio < best.ratio_gh || (ratio == best.ratio_gh && cg < best_cut_g)) {
      best.ratio_gh = ratio;
      best_cut_g = cg;
      best_prefix = i + 1;
    }
  }
  if (best_prefix < 0) {
    throw IllPosedError("cheeger_sweep: every prefix has zero cut in H");
  }
  best.prefix_size = best_prefix;
  best.cut_set = VertexSet(n);
  for (Index i = 0; i < best_prefix; ++i) best.cut_set.insert(order[i]);
  best.certificate = best.ratio_gh * best.ratio_gk / 4.0;
  best.rayleigh = laplacian_quadratic(g, x) / h.quadratic(x);
  return best;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansOptions {
  Index k = 2;
  int restarts = 20;
  int max_iter = 300;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct KMeansResult {
  Partition partition;
  Matrix centroids;
  double objective = 0.0;
  int best_restart = 0;
  /// Objective after each Lloyd iteration of the winning restart.
  std::vector<double> history;
};

namespace detail {

struct KMeansRun {
  std::vector<Index> assign;
  Matrix centers;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

inline Index nearest_center(const Matrix& pts, Index row, const Matrix& centers, double* dist) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centers.rows(); ++c) {
    const double dd = (pts.row(row) - centers.row(c)).squaredNorm();
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

inline KMeansRun kmeans_once(const Matrix& pts, const std::vector<Index>& rows, Index k,
                             int max_iter, std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  const auto m = static_cast<Index>(rows.size());
  const Index dim = pts.cols();
  KMeansRun run;
  run.centers.resize(k, dim);

  // Distance-weighted seeding.
  std::vector<double> d2(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<Index> first(0, m - 1);
  run.centers.row(0) = pts.row(rows[first(rng)]);
  for (Index c = 1; c < k; ++c) {
    double total = 0.0;
    for (Index i = 0; i < m; ++i) {
      d2[i] = std::min(d2[i], (pts.row(rows[i]) - run.centers.row(c - 1)).squaredNorm());
      total += d2[i];
    }
    std::uniform_real_distribution<double> unif(0.0, total);
    double target = unif(rng);
    Index pick = m - 1;
    for (Index i = 0; i < m; ++i) {
      target -= d2[i];
      if (target < 0.0 && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    while (d2[pick] == 0.0 && pick > 0) --pick;
    run.centers.row(c) = pts.row(rows[pick]);
  }

  run.assign.assign(static_cast<std::size_t>(m), -1);
  std::vector<double> dist(static_cast<std::size_t>(m), 0.0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    double obj = 0.0;
    for (Index i = 0; i < m; ++i) {
      const Index c = nearest_center(pts, rows[i], run.centers, &dist[i]);
      if (c != run.assign[i]) {
        run.assign[i] = c;
        changed = true;
      }
      obj += dist[i];
    }
    run.objective = obj;
    run.history.push_back(obj);
    if (!changed && it > 0) break;

    Matrix sums = Matrix::Zero(k, dim);
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < m; ++i) {
      sums.row(run.assign[i]) += pts.row(rows[i]);
      ++counts[run.assign[i]];
    }
    for (Index c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        run.centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move its center onto the point worst served so far.
      Index far = 0;
      for (Index i = 1; i < m; ++i) {
        if (dist[i] > dist[far]) far = i;
      }
      run.centers.row(c) = pts.row(rows[far]);
      dist[far] = 0.0;
    }
  }
  // Final assignment and objective against the final centers.
  double obj = 0.0;
  for (Index i = 0; i < m; ++i) {
    run.assign[i] = nearest_center(pts, rows[i], run.centers, &dist[i]);
    obj += dist[i];
  }
  run.objective = obj;
  return run;
}

inline bool has_k_distinct_rows(const Matrix& pts, const std::vector<Index>& rows, Index k) {
  std::set<std::vector<double>> distinct;
  for (Index r : rows) {
    std::vector<double> row(pts.cols());
    for (Index c = 0; c < pts.cols(); ++c) row[c] = pts(r, c);
    distinct.insert(std::move(row));
    if (static_cast<Index>(distinct.size()) >= k) return true;
  }
  return false;
}

}  // namespace detail

/// Best-of-restarts Lloyd k-means with distance-weighted seeding.
///
/// Rows flagged in `excluded` do not influence the centroids and are assigned
/// to their nearest centroid at the end. Each restart draws from its own
/// seeded generator, so results do not depend on the thread count.
inline KMeansResult kmeans(const Matrix& points, const KMeansOptions& opts,
                           const std::vector<bool>& excluded = {}) {
  const Index n = points.rows();
  if (opts.k < 1) throw InputError("kmeans: k must be positive");
  if (opts.restarts < 1) throw InputError("kmeans: restarts must be at least 1");
  if (opts.max_iter < 1) throw InputError("kmeans: max_iter must be at least 1");
  if (!excluded.empty() && static_cast<Index>(excluded.size()) != n) {
    throw DimensionError("kmeans: exclusion mask has the wrong length");
  }
  std::vector<Index> rows;
  for (Index i = 0; i < n; ++i) {
    if (excluded.empty() || !excluded[i]) rows.push_back(i);
  }
  if (!detail::has_k_distinct_rows(points, rows, opts.k)) {
    throw InputError("kmeans: k = " + std::to_string(opts.k) +
                     " exceeds the number of distinct points");
  }

  std::vector<detail::KMeansRun> runs(static_cast<std::size_t>(opts.restarts));
  const int threads = std::max(1, std::min(opts.threads, opts.restarts));
  if (threads == 1) {
    for (int r = 0; r < opts.restarts; ++r) {
      runs[r] = detail::kmeans_once(points, rows, opts.k, opts.max_iter, opts.seed, r);
    }
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int r = t; r < opts.restarts; r += threads) {
          runs[r] = detail::kmeans_once(points, rows, opts.k, opts.max_iter, opts.seed, r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  int best = 0;
  for (int r = 1; r < opts.restarts; ++r) {
    if (runs[r].objective < runs[best].objective) best = r;
  }
  const auto& win = runs[best];
  std::vector<Index> labels(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) labels[rows[i]] = win.assign[i];
  for (Index i = 0; i < n; ++i) {
    if (labels[i] < 0) labels[i] = detail::nearest_center(points, i, win.centers, nullptr);
  }

  KMeansResult out;
  out.partition = canonical_partition(labels);
  out.objective = win.objective;
  out.best_restart = best;
  out.history = win.history;
  // Centroids reordered to match the canonical labels.
  out.centroids.resize(out.partition.k, points.cols());
  for (Index i = 0; i < n; ++i) out.centroids.row(out.partition.labels[i]) = win.centers.row(labels[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Per-cluster sweep refinement
// ---------------------------------------------------------------------------

/// Optionally splits clusters: inside each cluster the vertices are ordered by
/// their embedding row norm l and swept; the best split replaces the cluster
/// when it lowers the cluster's badness, i.e. when max(phi(A), phi(C \ A)) < phi(C).
/// New clusters get ids k, k+1, ...
inline Partition refine_per_component_sweep(const Partition& p, const Vector& l,
                                            const WeightedGraph& g, const LaplacianOperator& h) {
  const Index n = g.num_vertices();
  detail::check_size(n, p.size(), "refine_per_component_sweep");
  detail::check_size(n, l.size(), "refine_per_component_sweep row norms");
  validate(p);
  const QualityReport before = badness(g, h, p.labels);

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(p.k));
  for (Index v = 0; v < n; ++v) members[p.labels[v]].push_back(v);

  // Whole-cluster cuts in G and in the sparse part of H.
  auto cluster_cut = [&](const WeightedGraph& graph, Index c) {
    double s = 0.0;
    for (Index v : members[c]) {
      const auto nb = graph.neighbors(v);
      const auto ws = graph.weights(v);
      for (std::size_t e = 0; e < nb.size(); ++e) {
        if (p.labels[nb[e]] != c) s += ws[e];
      }
    }
    return s;
  };
  const WeightedGraph* hs = h.sparse_part() ? &*h.sparse_part() : nullptr;
  const double hvol = h.has_demand_part() ? h.demand().vol : 0.0;
  auto demand = [&](double vol_set) {
    return h.has_demand_part() ? h.demand_scale() * vol_set * (hvol - vol_set) / hvol : 0.0;
  };
  auto ratio = [](double num, double den) {
    return den > 0.0 ? std::max(num, 0.0) / den : std::numeric_limits<double>::infinity();
  };

  Partition out = p;
  std::vector<char> in_a(static_cast<std::size_t>(n), 0);
  for (Index c = 0; c < p.k; ++c) {
    auto& mem = members[c];
    if (mem.size() < 2) continue;
    std::sort(mem.begin(), mem.end(),
              [&](Index a, Index b) { return l[a] < l[b] || (l[a] == l[b] && a < b); });
    const double cut_c_g = cluster_cut(g, c);
    const double cut_c_hs = hs ? cluster_cut(*hs, c) : 0.0;
    double vol_c = 0.0;
    if (h.has_demand_part()) {
      for (Index v : mem) vol_c += h.demand().d[v];
    }

    struct Tracker {
      double between = 0.0;  // weight between A and C \ A
      double outside = 0.0;  // weight between A and V \ C
    };
    auto add_vertex = [&](const WeightedGraph& graph, Index v, Tracker& t) {
      const auto nb = graph.neighbors(v);
      const auto ws = graph.weights(v);
      for (std::size_t e = 0; e < nb.size(); ++e) {
        const Index u = nb[e];
        if (in_a[u]) {
          t.between -= ws[e];
        } else if (p.labels[u] == c) {
          t.between += ws[e];
        } else {
          t.outside += ws[e];
        }
      }
    };

    Tracker tg, th;
    double vol_a = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t best_prefix = 0;
    for (std::size_t i = 0; i + 1 < mem.size(); ++i) {
      const Index v = mem[i];
      add_vertex(g, v, tg);
      if (hs) add_vertex(*hs, v, th);
      in_a[v] = 1;
      if (h.has_demand_part()) vol_a += h.demand().d[v];
      const double cut_a_g = tg.between + tg.outside;
      const double cut_b_g = cut_c_g - tg.outside + tg.between;
      const double cut_a_h = th.between + th.outside + demand(vol_a);
      const double cut_b_h = cut_c_hs - th.outside + th.between + demand(vol_c - vol_a);
      const double score = std::max(ratio(cut_a_g, cut_a_h), ratio(cut_b_g, cut_b_h));
      if (score < best_score) {
        best_score = score;
        best_prefix = i + 1;
      }
    }
    for (Index v : mem) in_a[v] = 0;
    if (best_prefix > 0 && best_score < before.per_cluster_badness[c]) {
      const Index fresh = out.k++;
      for (std::size_t i = best_prefix; i < mem.size(); ++i) out.labels[mem[i]] = fresh;
    }
  }
  return out;
}

}  // namespace fastge
