#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/operators.hpp"

namespace fastge {

/// The k smallest eigenpairs of L_G x = lambda L_H x on the complement of the
/// constant vector. Columns of `vectors` have zero mean and unit L_H-norm.
struct EigenSolution {
  Vector values;
  Matrix vectors;
  Vector residual_norms;
  int iterations = 0;
  bool converged = false;
  std::string method;
};

struct EigenOptions {
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
};

/// Relative residual ||A x - lambda B x|| / (||A x|| + |lambda| ||B x||).
inline double pencil_residual(const LaplacianOperator& a, const LaplacianOperator& b,
                              const Vector& x, double lambda) {
  const Vector ax = a.apply(x);
  const Vector bx = b.apply(x);
  const double denom = ax.norm() + std::abs(lambda) * bx.norm();
  if (denom == 0.0) return 0.0;
  return (ax - lambda * bx).norm() / denom;
}

inline double rayleigh_quotient(const LaplacianOperator& a, const LaplacianOperator& b,
                                const Vector& x) {
  return a.quadratic(x) / b.quadratic(x);
}

namespace detail {

inline Index lobpcg_block_size(Index k) {
  return k + std::max<Index>(2, (k + 1) / 2);
}

/// A block together with its images under A and B.
struct Block {
  Matrix x, ax, bx;

  Index cols() const { return x.cols(); }
  bool empty() const { return x.cols() == 0; }

  void transform(const Matrix& z) {
    x = x * z;
    ax = ax * z;
    bx = bx * z;
  }
};

inline Block make_block(Matrix x, const LaplacianOperator& a, const LaplacianOperator& b) {
  Block blk;
  for (Index j = 0; j < x.cols(); ++j) x.col(j).array() -= x.col(j).mean();
  blk.ax = a.apply(x);
  blk.bx = b.apply(x);
  blk.x = std::move(x);
  return blk;
}

/// B'-inner products with B' = B + sigma A.
inline Matrix shifted_gram(const Block& u, const Block& v, double sigma) {
  return u.x.transpose() * (v.bx + sigma * v.ax);
}

/// Orthonormalizes blk in the B' inner product by scaled eigendecomposition of
/// its Gram matrix, dropping numerically dependent directions.
inline void svqb(Block& blk, double sigma, double drop_tol) {
  if (blk.empty()) return;
  Matrix gram = shifted_gram(blk, blk, sigma);
  gram = 0.5 * (gram + gram.transpose()).eval();
  const Index p = gram.rows();
  Vector scale(p);
  const double max_diag = gram.diagonal().maxCoeff();
  for (Index j = 0; j < p; ++j) {
    const double gjj = gram(j, j);
    scale[j] = (gjj > drop_tol * max_diag && gjj > 0.0) ? 1.0 / std::sqrt(gjj) : 0.0;
  }
  const Matrix scaled = scale.asDiagonal() * gram * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(scaled);
  const Vector& g = es.eigenvalues();
  const double gmax = g.maxCoeff();
  std::vector<Index> keep;
  for (Index j = 0; j < p; ++j) {
    if (g[j] > drop_tol * std::max(gmax, 1.0)) keep.push_back(j);
  }
  Matrix z(p, static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    z.col(static_cast<Index>(c)) = scale.asDiagonal() * es.eigenvectors().col(keep[c]) /
                                   std::sqrt(g[keep[c]]);
  }
  blk.transform(z);
}

/// Removes from `blk` its B'-components along the B'-orthonormal `basis`
/// (classical Gram-Schmidt, applied twice). Only blk.x is updated; the caller
/// reapplies the operators.
inline void orthogonalize_against(Matrix& x, const Block& basis, double sigma) {
  if (basis.empty() || x.cols() == 0) return;
  const Matrix bprime = basis.bx + sigma * basis.ax;
  for (int pass = 0; pass < 2; ++pass) x -= basis.x * (bprime.transpose() * x);
}

inline Block concat(const std::vector<const Block*>& parts) {
  Index cols = 0, rows = 0;
  for (const Block* b : parts) {
    cols += b->cols();
    if (b->cols() > 0) rows = b->x.rows();
  }
  Block out;
  out.x.resize(rows, cols);
  out.ax.resize(rows, cols);
  out.bx.resize(rows, cols);
  Index c = 0;
  for (const Block* b : parts) {
    if (b->cols() == 0) continue;
    out.x.middleCols(c, b->cols()) = b->x;
    out.ax.middleCols(c, b->cols()) = b->ax;
    out.bx.middleCols(c, b->cols()) = b->bx;
    c += b->cols();
  }
  return out;
}

inline void check_pencil(const LaplacianOperator& a, const LaplacianOperator& b, Index k) {
  detail::check_size(a.size(), b.size(), "generalized_eigs");
  if (k < 1) throw InputError("generalized_eigs: k must be at least 1");
  if (k > a.size() - 1) {
    throw InputError("generalized_eigs: k must be below the dimension n = " +
                     std::to_string(a.size()));
  }
  if (b.is_zero()) {
    throw IllPosedError(
        "generalized_eigs: L_H is identically zero; the problem needs cannot-link constraints "
        "or a demand-graph term");
  }
}

/// Finalizes columns: zero mean, unit B-norm, eigenvalues as Rayleigh quotients.
inline EigenSolution finalize(const LaplacianOperator& a, const LaplacianOperator& b,
                              const Matrix& x, Index k) {
  EigenSolution sol;
  const Index n = a.size();
  sol.values.resize(k);
  sol.vectors.resize(n, k);
  sol.residual_norms.resize(k);
  for (Index j = 0; j < k; ++j) {
    Vector col = project_out_constant(x.col(j));
    const Vector ax = a.apply(col);
    const Vector bx = b.apply(col);
    const double xbx = col.dot(bx);
    if (!(xbx > 0.0)) {
      throw NumericalError("generalized_eigs: eigenvector lies in the null space of L_H");
    }
    const double s = 1.0 / std::sqrt(xbx);
    col *= s;
    const double lambda = col.dot(ax) * s;
    sol.values[j] = lambda;
    sol.vectors.col(j) = col;
    const double denom = s * (ax.norm() + std::abs(lambda) * bx.norm());
    sol.residual_norms[j] = denom > 0.0 ? s * (ax - lambda * bx).norm() / denom : 0.0;
  }
  return sol;
}

}  // namespace detail

/// Block preconditioned conjugate gradient (LOBPCG) for the k smallest
/// eigenpairs of L_G x = lambda L_H x, with the constant vector deflated.
///
/// L_H may be singular beyond the constants. The iteration runs on the
/// equivalent definite pencil (L_G, L_H + sigma L_G), whose eigenvalues are
/// nu = lambda / (1 + sigma lambda), so the eigenvectors and their ordering
/// are unchanged and null(L_H) maps to the finite value 1/sigma.
/// `precond` should approximate L_G^{-1}. On non-convergence the partial
/// solution is returned with converged == false.
inline EigenSolution generalized_eigs(const LaplacianOperator& a, const LaplacianOperator& b,
                                      Index k, const Preconditioner& precond,
                                      const EigenOptions& opts = {}) {
  detail::check_pencil(a, b, k);
  const Index n = a.size();
  const Index m = std::min(detail::lobpcg_block_size(k), n - 1);
  constexpr double kDrop = 1e-10;
  constexpr int kRefreshEvery = 10;

  const double trace_a = a.diagonal().sum();
  const double trace_b = b.diagonal().sum();
  if (!(trace_a > 0.0)) throw IllPosedError("generalized_eigs: L_G is identically zero");
  const double sigma = trace_b / trace_a;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix x0(n, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) x0(i, j) = unif(rng);
  }
  detail::Block x = detail::make_block(std::move(x0), a, b);
  detail::svqb(x, sigma, kDrop);
  detail::Block p;

  auto rayleigh_ritz = [&](detail::Block& basis) -> bool {
    Matrix ga = basis.x.transpose() * basis.ax;
    Matrix gb = detail::shifted_gram(basis, basis, sigma);
    ga = 0.5 * (ga + ga.transpose()).eval();
    gb = 0.5 * (gb + gb.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(ga, gb);
    if (es.info() != Eigen::Success) return false;
    const Index keep = std::min<Index>(m, basis.cols());
    const Matrix c = es.eigenvectors().leftCols(keep);
    if (basis.cols() > x.cols()) {
      // Search directions: the part of the new iterate outside span(X).
      const Index extra = basis.cols() - x.cols();
      p.x = basis.x.rightCols(extra) * c.bottomRows(extra);
      p.ax.resize(0, 0);
      p.bx.resize(0, 0);
    }
    basis.transform(c);
    x = std::move(basis);
    return true;
  };

  {
    detail::Block init = x;
    if (!rayleigh_ritz(init)) throw NumericalError("generalized_eigs: initial Rayleigh-Ritz failed");
    p = detail::Block{};
  }

  EigenSolution out;
  out.method = "lobpcg";
  int it = 0;
  bool converged = false;
  for (it = 1; it <= opts.max_iter; ++it) {
    if (it % kRefreshEvery == 0) x = detail::make_block(x.x, a, b);

    Matrix resid;
    std::vector<Index> active;
    auto measure = [&]() {
      resid.resize(n, x.cols());
      active.clear();
      bool done_all = true;
      for (Index j = 0; j < x.cols(); ++j) {
        const double xbx = x.x.col(j).dot(x.bx.col(j));
        const double lambda = xbx > 0.0 ? x.x.col(j).dot(x.ax.col(j)) / xbx : 0.0;
        resid.col(j) = x.ax.col(j) - lambda * x.bx.col(j);
        const double denom = x.ax.col(j).norm() + std::abs(lambda) * x.bx.col(j).norm();
        const double r = denom > 0.0 ? resid.col(j).norm() / denom : 0.0;
        const bool done = r <= opts.tol;
        if (j < k && !done) done_all = false;
        if (!done) active.push_back(j);
      }
      return done_all;
    };
    if (measure()) {
      // Confirm with freshly applied operators before declaring convergence.
      x = detail::make_block(x.x, a, b);
      if (measure()) {
        converged = true;
        break;
      }
    }

    Matrix w(n, static_cast<Index>(active.size()));
    Vector r, z;
    for (std::size_t c = 0; c < active.size(); ++c) {
      r = resid.col(active[c]);
      precond.apply(r, z);
      w.col(static_cast<Index>(c)) = z;
    }
    detail::orthogonalize_against(w, x, sigma);
    detail::Block wb = detail::make_block(std::move(w), a, b);
    detail::svqb(wb, sigma, kDrop);

    if (p.x.cols() > 0) {
      Matrix px = p.x;
      detail::orthogonalize_against(px, x, sigma);
      detail::orthogonalize_against(px, wb, sigma);
      p = detail::make_block(std::move(px), a, b);
      detail::svqb(p, sigma, kDrop);
    }
    if (wb.empty() && p.empty()) break;

    detail::Block basis = detail::concat({&x, &wb, &p});
    const detail::Block backup = x;
    if (!rayleigh_ritz(basis)) {
      // Retry without search directions; drop them if the Gram matrix is bad.
      x = backup;
      p = detail::Block{};
      detail::Block reduced = detail::concat({&x, &wb});
      if (!rayleigh_ritz(reduced)) break;
    }
  }

  out.iterations = std::min(it, opts.max_iter);
  x = detail::make_block(x.x, a, b);
  EigenSolution fin = detail::finalize(a, b, x.x, k);
  fin.iterations = out.iterations;
  fin.method = out.method;
  fin.converged = converged;
  return fin;
}

/// Dense reference path: reduces both Laplacians to an orthonormal basis of
/// 1-perp and solves L_H y = mu L_G y, taking lambda = 1/mu for the largest mu.
/// Requires L_G connected. Intended for n up to a few hundred.
inline EigenSolution dense_generalized_eigs(const LaplacianOperator& a, const LaplacianOperator& b,
                                            Index k) {
  detail::check_pencil(a, b, k);
  const Index n = a.size();
  const Vector ones = Vector::Ones(n);
  Eigen::HouseholderQR<Matrix> qr(ones);
  const Matrix q = Matrix(qr.householderQ()).rightCols(n - 1);
  const Matrix ar = q.transpose() * a.to_dense() * q;
  const Matrix br = q.transpose() * b.to_dense() * q;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(br, ar);
  if (es.info() != Eigen::Success) {
    throw DisconnectedGraphError("dense_generalized_eigs: L_G is singular on 1-perp (disconnected?)");
  }
  const Vector& mu = es.eigenvalues();
  const double mu_max = mu.maxCoeff();
  if (!(mu_max > 0.0)) throw IllPosedError("dense_generalized_eigs: L_H vanishes on 1-perp");
  Matrix x(n, k);
  for (Index j = 0; j < k; ++j) {
    const Index idx = n - 2 - j;
    if (!(mu[idx] > 1e-13 * mu_max)) {
      throw IllPosedError("dense_generalized_eigs: pencil has fewer than k finite eigenvalues");
    }
    x.col(j) = q * es.eigenvectors().col(idx);
  }
  EigenSolution sol = detail::finalize(a, b, x, k);
  sol.method = "dense";
  sol.iterations = 0;
  sol.converged = true;
  return sol;
}

/// Chooses the dense path for n <= dense_threshold and LOBPCG otherwise.
inline EigenSolution solve_pencil(const LaplacianOperator& a, const LaplacianOperator& b, Index k,
                                  const Preconditioner& precond, const EigenOptions& opts,
                                  Index dense_threshold) {
  if (a.size() <= dense_threshold) return dense_generalized_eigs(a, b, k);
  return generalized_eigs(a, b, k, precond, opts);
}

}  // namespace fastge
