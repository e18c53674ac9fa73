#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/merge.hpp"
#include "fastge/metrics.hpp"

namespace fastge {

struct LabeledPointCloud {
  /// n x 2 coordinates.
  Matrix points;
  Labels labels;

  Index size() const noexcept { return points.rows(); }
};

/// Four interleaved half-circles of radius 1. Moon j is centred at x = 1.5 j;
/// even moons open downward (upper arcs at y = 0), odd moons open upward
/// (lower arcs centred at y = 0.5). Points are split round-robin across moons,
/// so n = 1500 gives four clusters of 375.
inline LabeledPointCloud four_moons(Index n, double noise_sd, std::uint64_t seed) {
  if (n < 4) throw InputError("four_moons: need at least four points");
  if (!(noise_sd >= 0.0)) throw InputError("four_moons: noise must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);

  LabeledPointCloud out;
  out.points.resize(n, 2);
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index moon = i % 4;
    const double t = angle(rng);
    const bool upper = moon % 2 == 0;
    double x = 1.5 * static_cast<double>(moon) + std::cos(t);
    double y = upper ? std::sin(t) : 0.5 - std::sin(t);
    if (noise_sd > 0.0) {
      x += noise_sd * noise(rng);
      y += noise_sd * noise(rng);
    }
    out.points(i, 0) = x;
    out.points(i, 1) = y;
    out.labels[i] = moon;
  }
  return out;
}

/// Erdos-Renyi G(n, p) edge set as pairs (u < v), sampled by geometric skips
/// over the C(n,2) pairs in lexicographic order.
template <class Rng>
std::vector<std::pair<Index, Index>> erdos_renyi_pairs(Index n, double p, Rng& rng) {
  std::vector<std::pair<Index, Index>> out;
  if (!(p > 0.0) || n < 2) return out;
  if (p >= 1.0) {
    for (Index u = 0; u < n; ++u) {
      for (Index v = u + 1; v < n; ++v) out.emplace_back(u, v);
    }
    return out;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_q = std::log1p(-p);
  Index u = 0;
  Index v = 0;  // next candidate is (u, v + 1 + skip)
  while (u < n - 1) {
    const double r = unif(rng);
    const double raw = std::floor(std::log1p(-r) / log_q);
    const auto skip = static_cast<Index>(std::min(raw, static_cast<double>(n) * n));
    v += 1 + skip;
    while (u < n - 1 && v >= n) {
      v -= n;
      ++u;
      v += u + 1;
    }
    if (u < n - 1) out.emplace_back(u, v);
  }
  return out;
}

/// Indices of the kg nearest points to each point (ties by index).
inline std::vector<std::vector<Index>> nearest_neighbors(const Matrix& points, Index kg) {
  const Index n = points.rows();
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    Index c = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) dist[c++] = {(points.row(i) - points.row(j)).squaredNorm(), j};
    }
    std::partial_sort(dist.begin(), dist.begin() + kg, dist.end());
    out[i].reserve(static_cast<std::size_t>(kg));
    for (Index j = 0; j < kg; ++j) out[i].push_back(dist[j].second);
  }
  return out;
}

/// Union of the symmetrized kg-nearest-neighbour graph and G(n, lg/n) noise,
/// unit weight on every present edge.
inline WeightedGraph noisy_knn(const LabeledPointCloud& cloud, Index kg, double lg,
                               std::uint64_t seed) {
  const Index n = cloud.size();
  if (kg < 1 || kg >= n) {
    throw InputError("noisy_knn: k_g = " + std::to_string(kg) + " must lie in [1, n)");
  }
  if (!(lg >= 0.0)) throw InputError("noisy_knn: l_g must be nonnegative");
  std::vector<std::pair<Index, Index>> pairs;
  const auto knn = nearest_neighbors(cloud.points, kg);
  for (Index i = 0; i < n; ++i) {
    for (Index j : knn[i]) pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::mt19937_64 rng(seed);
  const auto noise = erdos_renyi_pairs(n, lg / static_cast<double>(n), rng);
  pairs.insert(pairs.end(), noise.begin(), noise.end());
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [u, v] : pairs) edges.push_back({u, v, 1.0});
  return WeightedGraph(n, std::move(edges));
}

/// Draws m vertices uniformly without replacement and links every pair of
/// them: must-link when the ground-truth labels agree, cannot-link otherwise.
/// Pairs are emitted in draw order, without explicit weights.
inline ConstraintSet sample_constraints(std::span<const Index> labels, Index m,
                                        std::uint64_t seed) {
  const auto n = static_cast<Index>(labels.size());
  if (m < 0 || m > n) {
    throw InputError("sample_constraints: m = " + std::to_string(m) + " outside [0, " +
                     std::to_string(n) + "]");
  }
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pool[i] = i;
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  ConstraintSet out;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const Index u = pool[i];
      const Index v = pool[j];
      (labels[u] == labels[v] ? out.ml : out.cl).push_back({u, v, std::nullopt});
    }
  }
  return out;
}

}  // namespace fastge
