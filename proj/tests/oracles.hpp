#pragma once

// Reference computations for tests. Everything here is deliberately naive:
// dense matrices, explicit pair sums, from-scratch recomputation. None of it
// calls into the library except for plain data types.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "fastge/graph.hpp"

namespace oracle {

using fastge::Edge;
using fastge::Index;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Dense Laplacian from an edge list; repeated pairs add up.
inline Mat laplacian(Index n, const std::vector<Edge>& edges) {
  Mat l = Mat::Zero(n, n);
  for (const auto& e : edges) {
    l(e.u, e.v) -= e.w;
    l(e.v, e.u) -= e.w;
    l(e.u, e.u) += e.w;
    l(e.v, e.v) += e.w;
  }
  return l;
}

inline Vec degrees(Index n, const std::vector<Edge>& edges) {
  Vec d = Vec::Zero(n);
  for (const auto& e : edges) {
    d[e.u] += e.w;
    d[e.v] += e.w;
  }
  return d;
}

/// Laplacian of the complete demand graph, built entry by entry from
/// K_ij = d_i d_j / vol.
inline Mat demand_laplacian(const Vec& d) {
  const Index n = d.size();
  const double vol = d.sum();
  Mat l = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double k = d[i] * d[j] / vol;
      l(i, j) = -k;
      l(i, i) += k;
    }
  }
  return l;
}

/// sum over i in S, j not in S of d_i d_j / vol.
inline double demand_cut_pairwise(const Vec& d, const std::vector<bool>& in) {
  const double vol = d.sum();
  double s = 0.0;
  for (Index i = 0; i < d.size(); ++i) {
    for (Index j = 0; j < d.size(); ++j) {
      if (in[i] && !in[j]) s += d[i] * d[j] / vol;
    }
  }
  return s;
}

inline double cut(const std::vector<Edge>& edges, const std::vector<bool>& in) {
  double s = 0.0;
  for (const auto& e : edges) {
    if (in[e.u] != in[e.v]) s += e.w;
  }
  return s;
}

/// Orthonormal basis of the complement of the constant vector, taken from
/// the eigenvectors of the centring projector with eigenvalue 1.
inline Mat complement_basis(Index n) {
  const Mat p = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Mat> es(p);
  return es.eigenvectors().rightCols(n - 1);
}

/// Smallest k eigenvalues of A x = lambda B x on 1-perp, for A definite there.
/// Route: C = A_r^{-1/2} B_r A_r^{-1/2}; lambda = 1 / mu for the largest mu.
/// Also returns the matching eigenvectors in the original coordinates.
inline std::pair<Vec, Mat> pencil_eigs(const Mat& a, const Mat& b, Index k) {
  const Index n = a.rows();
  const Mat q = complement_basis(n);
  const Mat ar = q.transpose() * a * q;
  const Mat br = q.transpose() * b * q;
  Eigen::SelfAdjointEigenSolver<Mat> ea(ar);
  const Vec s = ea.eigenvalues().cwiseSqrt().cwiseInverse();
  const Mat ainv_half = ea.eigenvectors() * s.asDiagonal() * ea.eigenvectors().transpose();
  const Mat c = ainv_half * br * ainv_half;
  Eigen::SelfAdjointEigenSolver<Mat> ec(0.5 * (c + c.transpose()));
  Vec values(k);
  Mat vectors(n, k);
  for (Index j = 0; j < k; ++j) {
    const Index idx = n - 2 - j;
    values[j] = 1.0 / ec.eigenvalues()[idx];
    vectors.col(j) = q * (ainv_half * ec.eigenvectors().col(idx));
  }
  return {values, vectors};
}

/// All prefix ratios of the sweep order, each recomputed from scratch.
struct PrefixScan {
  std::vector<double> ratio_gh;  // +inf where cut_H = 0
  std::vector<double> ratio_gk;
  std::vector<double> cut_g;
};

inline PrefixScan prefix_scan(Index n, const std::vector<Edge>& g, const std::vector<Edge>& h_sparse,
                              double demand_scale, const Vec& h_demand, const Vec& dg,
                              const std::vector<Index>& order) {
  PrefixScan out;
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (Index i = 0; i + 1 < n; ++i) {
    in[order[i]] = true;
    const double cg = cut(g, in);
    double ch = cut(h_sparse, in);
    if (demand_scale > 0.0) ch += demand_scale * demand_cut_pairwise(h_demand, in);
    const double ck = demand_cut_pairwise(dg, in);
    out.cut_g.push_back(cg);
    out.ratio_gh.push_back(ch > 0.0 ? cg / ch : std::numeric_limits<double>::infinity());
    out.ratio_gk.push_back(ck > 0.0 ? cg / ck : std::numeric_limits<double>::infinity());
  }
  return out;
}

/// Rand index by enumerating every pair.
inline double rand_index_pairs(const std::vector<Index>& a, const std::vector<Index>& b) {
  const auto n = a.size();
  std::int64_t agree = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++total;
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
    }
  }
  return total ? static_cast<double>(agree) / static_cast<double>(total) : 1.0;
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// Random spanning tree plus `extra` random edges, weights in [wlo, whi].
inline std::vector<Edge> random_connected_edges(Index n, Index extra, std::mt19937_64& rng,
                                                double wlo = 0.1, double whi = 2.0) {
  std::uniform_real_distribution<double> w(wlo, whi);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Edge> edges;
  std::set<std::pair<Index, Index>> seen;
  auto add = [&](Index u, Index v) {
    if (u == v) return false;
    if (!seen.insert({std::min(u, v), std::max(u, v)}).second) return false;
    edges.push_back({u, v, w(rng)});
    return true;
  };
  for (Index i = 1; i < n; ++i) {
    std::uniform_int_distribution<Index> parent(0, i - 1);
    add(perm[i], perm[parent(rng)]);
  }
  std::uniform_int_distribution<Index> any(0, n - 1);
  Index added = 0, attempts = 0;
  while (added < extra && attempts < 100 * (extra + 1)) {
    ++attempts;
    if (add(any(rng), any(rng))) ++added;
  }
  return edges;
}

/// `m` distinct random pairs (no connectivity requirement).
inline std::vector<Edge> random_edges(Index n, Index m, std::mt19937_64& rng, double wlo = 0.1,
                                      double whi = 2.0) {
  std::uniform_real_distribution<double> w(wlo, whi);
  std::uniform_int_distribution<Index> any(0, n - 1);
  std::set<std::pair<Index, Index>> seen;
  std::vector<Edge> edges;
  const Index cap = n * (n - 1) / 2;
  while (static_cast<Index>(edges.size()) < std::min(m, cap)) {
    Index u = any(rng), v = any(rng);
    if (u == v) continue;
    if (!seen.insert({std::min(u, v), std::max(u, v)}).second) continue;
    edges.push_back({u, v, w(rng)});
  }
  return edges;
}

inline Vec random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec x(n);
  for (Index i = 0; i < n; ++i) x[i] = g(rng);
  return x;
}

/// Two unit triangles {0,1,2} and {3,4,5} joined by a 0.1 edge (2,3).
inline std::vector<Edge> two_triangles() {
  return {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}, {3, 5, 1.0}, {2, 3, 0.1}};
}

}  // namespace oracle
