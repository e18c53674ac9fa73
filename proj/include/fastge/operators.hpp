#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fastge/error.hpp"
#include "fastge/graph.hpp"

namespace fastge {

/// Matrix-free Laplacian L = L(sparse) + c (D - d d^T / vol).
///
/// The rank-one part is the Laplacian of the demand graph K_ij = d_i d_j / vol
/// scaled by c; it is applied in O(n) and never materialized.
class LaplacianOperator {
 public:
  LaplacianOperator() = default;

  explicit LaplacianOperator(WeightedGraph sparse)
      : n_(sparse.num_vertices()), sparse_(std::move(sparse)) {}

  LaplacianOperator(std::optional<WeightedGraph> sparse, double demand_scale, DegreeVector demand)
      : sparse_(std::move(sparse)), scale_(demand_scale), demand_(std::move(demand)) {
    if (scale_ < 0.0 || !std::isfinite(scale_)) {
      throw InputError("laplacian operator: demand scale must be finite and nonnegative");
    }
    if (scale_ > 0.0 && !(demand_.vol > 0.0)) {
      throw InputError("laplacian operator: demand part needs positive volume");
    }
    if (sparse_ && scale_ > 0.0) {
      detail::check_size(sparse_->num_vertices(), demand_.size(), "laplacian operator");
    }
    n_ = sparse_ ? sparse_->num_vertices() : demand_.size();
  }

  static LaplacianOperator demand_only(double scale, DegreeVector demand) {
    return LaplacianOperator(std::nullopt, scale, std::move(demand));
  }

  Index size() const noexcept { return n_; }
  const std::optional<WeightedGraph>& sparse_part() const noexcept { return sparse_; }
  double demand_scale() const noexcept { return scale_; }
  const DegreeVector& demand() const noexcept { return demand_; }
  bool has_demand_part() const noexcept { return scale_ > 0.0; }

  /// True when the operator is identically zero (no edges, no demand part).
  bool is_zero() const noexcept {
    return !has_demand_part() && (!sparse_ || sparse_->num_edges() == 0);
  }

  void apply(const Vector& x, Vector& y) const {
    detail::check_size(n_, x.size(), "laplacian operator apply");
    if (sparse_) {
      laplacian_apply(*sparse_, x, y);
    } else {
      y = Vector::Zero(n_);
    }
    if (has_demand_part()) {
      const double dx = demand_.d.dot(x);
      y.array() += scale_ * demand_.d.array() * (x.array() - dx / demand_.vol);
    }
  }

  Vector apply(const Vector& x) const {
    Vector y;
    apply(x, y);
    return y;
  }

  /// Column-wise application to a block.
  Matrix apply(const Matrix& x) const {
    Matrix y(x.rows(), x.cols());
    Vector col, out;
    for (Index j = 0; j < x.cols(); ++j) {
      col = x.col(j);
      apply(col, out);
      y.col(j) = out;
    }
    return y;
  }

  double quadratic(const Vector& x) const {
    detail::check_size(n_, x.size(), "laplacian operator quadratic");
    double q = sparse_ ? laplacian_quadratic(*sparse_, x) : 0.0;
    if (has_demand_part()) q += scale_ * demand_quadratic(demand_, x);
    return q;
  }

  /// Cut weight of s in the graph this operator is the Laplacian of.
  double cut(const VertexSet& s) const {
    double c = sparse_ ? fastge::cut(*sparse_, s) : 0.0;
    if (has_demand_part()) c += scale_ * demand_cut(demand_, s);
    return c;
  }

  Vector diagonal() const {
    Vector diag = sparse_ ? degrees(*sparse_).d : Vector::Zero(n_);
    if (has_demand_part()) {
      diag.array() +=
          scale_ * (demand_.d.array() - demand_.d.array().square() / demand_.vol);
    }
    return diag;
  }

  /// Dense assembly; intended for small problems only.
  Matrix to_dense() const {
    Matrix m = Matrix::Zero(n_, n_);
    if (sparse_) {
      sparse_->for_each_edge([&](Index u, Index v, double w) {
        m(u, v) -= w;
        m(v, u) -= w;
        m(u, u) += w;
        m(v, v) += w;
      });
    }
    if (has_demand_part()) {
      m.diagonal() += scale_ * demand_.d;
      m.noalias() -= (scale_ / demand_.vol) * demand_.d * demand_.d.transpose();
    }
    return m;
  }

 private:
  Index n_ = 0;
  std::optional<WeightedGraph> sparse_;
  double scale_ = 0.0;
  DegreeVector demand_;
};

inline Vector project_out_constant(Vector x) {
  if (x.size() > 0) x.array() -= x.mean();
  return x;
}

// ---------------------------------------------------------------------------
// Preconditioners
// ---------------------------------------------------------------------------

enum class PreconditionerKind { identity, jacobi, multilevel };

inline std::string to_string(PreconditionerKind kind) {
  switch (kind) {
    case PreconditionerKind::identity: return "identity";
    case PreconditionerKind::jacobi: return "jacobi";
    case PreconditionerKind::multilevel: return "multilevel";
  }
  return "unknown";
}

inline PreconditionerKind parse_preconditioner_kind(const std::string& s) {
  if (s == "identity" || s == "none") return PreconditionerKind::identity;
  if (s == "jacobi") return PreconditionerKind::jacobi;
  if (s == "multilevel") return PreconditionerKind::multilevel;
  throw InputError("unknown preconditioner '" + s + "' (expected identity|jacobi|multilevel)");
}

/// Approximate inverse of a Laplacian plus a tiny diagonal shift. Immutable
/// handle; apply() is thread-safe.
class Preconditioner {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    virtual void apply(const Vector& r, Vector& z) const = 0;
    virtual Index size() const = 0;
    virtual PreconditionerKind kind() const = 0;
  };

  Preconditioner() = default;
  explicit Preconditioner(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  /// Identity when default-constructed.
  void apply(const Vector& r, Vector& z) const {
    if (impl_) {
      detail::check_size(impl_->size(), r.size(), "preconditioner apply");
      impl_->apply(r, z);
    } else {
      z = r;
    }
  }

  Vector apply(const Vector& r) const {
    Vector z;
    apply(r, z);
    return z;
  }

  PreconditionerKind kind() const {
    return impl_ ? impl_->kind() : PreconditionerKind::identity;
  }

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Relative diagonal shift that keeps the preconditioned operator definite.
inline constexpr double kPreconditionerShift = 1e-10;

namespace detail {

class JacobiImpl final : public Preconditioner::Impl {
 public:
  explicit JacobiImpl(Vector inv_diag) : inv_diag_(std::move(inv_diag)) {}

  void apply(const Vector& r, Vector& z) const override { z = inv_diag_.cwiseProduct(r); }
  Index size() const override { return inv_diag_.size(); }
  PreconditionerKind kind() const override { return PreconditionerKind::jacobi; }

 private:
  Vector inv_diag_;
};

/// Symmetric V-cycle over heavy-edge aggregation levels. Coarse Laplacians
/// are Galerkin products with piecewise-constant prolongation, so every level
/// is again a graph Laplacian (plus the diagonal shift).
class MultilevelImpl final : public Preconditioner::Impl {
 public:
  MultilevelImpl(const WeightedGraph& g, double shift) {
    WeightedGraph current = g;
    Vector shift_diag = Vector::Constant(g.num_vertices(), shift);
    while (true) {
      Level level;
      level.graph = current;
      level.shift = shift_diag;
      level.diag = degrees(current).d + shift_diag;
      const Index n = current.num_vertices();
      if (n <= kDirectSize) {
        levels_.push_back(std::move(level));
        break;
      }
      Index coarse_n = 0;
      level.aggregate = aggregate(current, coarse_n);
      if (coarse_n > static_cast<Index>(0.85 * static_cast<double>(n)) ||
          levels_.size() + 1 >= kMaxLevels) {
        levels_.push_back(std::move(level));
        break;
      }
      std::vector<Edge> coarse_edges;
      current.for_each_edge([&](Index u, Index v, double w) {
        const Index a = level.aggregate[u];
        const Index b = level.aggregate[v];
        if (a != b) coarse_edges.push_back({a, b, w});
      });
      Vector coarse_shift = Vector::Zero(coarse_n);
      for (Index v = 0; v < n; ++v) coarse_shift[level.aggregate[v]] += shift_diag[v];
      level.coarse_n = coarse_n;
      levels_.push_back(std::move(level));
      current = WeightedGraph(coarse_n, std::move(coarse_edges));
      shift_diag = std::move(coarse_shift);
    }
    const Level& last = levels_.back();
    if (last.graph.num_vertices() <= kDirectSize) {
      Matrix dense = LaplacianOperator(last.graph).to_dense();
      dense.diagonal() = last.diag;
      coarse_solver_.compute(dense);
      direct_ = coarse_solver_.info() == Eigen::Success;
    }
  }

  void apply(const Vector& r, Vector& z) const override {
    Vector rc = project_out_constant(r);
    z = cycle(0, rc);
    z = project_out_constant(std::move(z));
  }

  Index size() const override { return levels_.front().graph.num_vertices(); }
  PreconditionerKind kind() const override { return PreconditionerKind::multilevel; }

  std::size_t num_levels() const { return levels_.size(); }

 private:
  static constexpr Index kDirectSize = 400;
  static constexpr std::size_t kMaxLevels = 30;

  struct Level {
    WeightedGraph graph;
    Vector shift;
    Vector diag;
    std::vector<Index> aggregate;
    Index coarse_n = 0;
  };

  // Pairwise heavy-edge matching; leftover vertices join their strongest
  // neighbour's aggregate.
  static std::vector<Index> aggregate(const WeightedGraph& g, Index& coarse_n) {
    const Index n = g.num_vertices();
    std::vector<Index> agg(static_cast<std::size_t>(n), -1);
    coarse_n = 0;
    for (Index v = 0; v < n; ++v) {
      if (agg[v] >= 0) continue;
      const auto nb = g.neighbors(v);
      const auto ws = g.weights(v);
      Index best = -1;
      double best_w = 0.0;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        if (agg[nb[k]] < 0 && ws[k] > best_w) {
          best = nb[k];
          best_w = ws[k];
        }
      }
      if (best >= 0) {
        agg[v] = agg[best] = coarse_n++;
      }
    }
    for (Index v = 0; v < n; ++v) {
      if (agg[v] >= 0) continue;
      const auto nb = g.neighbors(v);
      const auto ws = g.weights(v);
      Index best = -1;
      double best_w = 0.0;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        if (agg[nb[k]] >= 0 && ws[k] > best_w) {
          best = nb[k];
          best_w = ws[k];
        }
      }
      agg[v] = best >= 0 ? agg[best] : coarse_n++;
    }
    return agg;
  }

  // One Gauss-Seidel sweep on (L + shift) z = r.
  static void gauss_seidel(const Level& level, const Vector& r, Vector& z, bool forward) {
    const Index n = level.graph.num_vertices();
    for (Index step = 0; step < n; ++step) {
      const Index i = forward ? step : n - 1 - step;
      const auto nb = level.graph.neighbors(i);
      const auto ws = level.graph.weights(i);
      double acc = r[i];
      for (std::size_t k = 0; k < nb.size(); ++k) acc += ws[k] * z[nb[k]];
      z[i] = acc / level.diag[i];
    }
  }

  Vector cycle(std::size_t l, const Vector& r) const {
    const Level& level = levels_[l];
    const Index n = level.graph.num_vertices();
    if (l + 1 == levels_.size()) {
      if (direct_) return coarse_solver_.solve(r);
      Vector z = Vector::Zero(n);
      for (int sweep = 0; sweep < kCoarseSweeps; ++sweep) {
        gauss_seidel(level, r, z, true);
        gauss_seidel(level, r, z, false);
      }
      return z;
    }
    Vector z = Vector::Zero(n);
    gauss_seidel(level, r, z, true);
    Vector lz;
    laplacian_apply(level.graph, z, lz);
    const Vector residual = r - lz - level.shift.cwiseProduct(z);
    Vector coarse_r = Vector::Zero(level.coarse_n);
    for (Index v = 0; v < n; ++v) coarse_r[level.aggregate[v]] += residual[v];
    const Vector coarse_z = cycle(l + 1, coarse_r);
    for (Index v = 0; v < n; ++v) z[v] += coarse_z[level.aggregate[v]];
    gauss_seidel(level, r, z, false);
    return z;
  }

  static constexpr int kCoarseSweeps = 4;

  std::vector<Level> levels_;
  Eigen::LLT<Matrix> coarse_solver_;
  bool direct_ = false;
};

inline double mean_or_one(const Vector& d) {
  const double m = d.size() > 0 ? d.mean() : 1.0;
  return m > 0.0 ? m : 1.0;
}

}  // namespace detail

/// Preconditioner for L_G + shift, shift = 1e-10 * mean degree.
/// Throws DisconnectedGraphError when g is disconnected.
inline Preconditioner build_preconditioner(const WeightedGraph& g,
                                           PreconditionerKind kind = PreconditionerKind::jacobi) {
  if (!is_connected(g)) {
    throw DisconnectedGraphError(
        "preconditioner: graph is disconnected; add the demand-graph regularizer or "
        "cluster each connected component separately");
  }
  const DegreeVector deg = degrees(g);
  const double shift = kPreconditionerShift * detail::mean_or_one(deg.d);
  switch (kind) {
    case PreconditionerKind::identity:
      return Preconditioner();
    case PreconditionerKind::jacobi: {
      Vector inv = (deg.d.array() + shift).inverse();
      return Preconditioner(std::make_shared<detail::JacobiImpl>(std::move(inv)));
    }
    case PreconditionerKind::multilevel:
      return Preconditioner(std::make_shared<detail::MultilevelImpl>(g, shift));
  }
  return Preconditioner();
}

/// Jacobi preconditioner from an operator's diagonal (covers demand parts).
inline Preconditioner jacobi_preconditioner(const LaplacianOperator& op) {
  const Vector diag = op.diagonal();
  const double shift = kPreconditionerShift * detail::mean_or_one(diag);
  Vector inv = (diag.array() + shift).inverse();
  return Preconditioner(std::make_shared<detail::JacobiImpl>(std::move(inv)));
}

// ---------------------------------------------------------------------------
// Linear solver
// ---------------------------------------------------------------------------

struct SolveResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

inline int default_max_iterations(Index n) {
  return static_cast<int>(10.0 * std::sqrt(static_cast<double>(n))) + 200;
}

inline constexpr double kDefaultSolveTol = 1e-8;

/// Preconditioned conjugate gradient for L x = b on the mean-zero subspace.
/// b is projected onto 1-perp first; the returned x has zero mean and
/// satisfies ||L x - b|| <= tol ||b||. Throws ConvergenceError otherwise.
inline SolveResult pcg(const LaplacianOperator& op, const Vector& rhs, const Preconditioner& precond,
                       double tol = kDefaultSolveTol, int max_iter = -1) {
  const Index n = op.size();
  detail::check_size(n, rhs.size(), "solve");
  if (max_iter < 0) max_iter = default_max_iterations(n);
  if (!op.has_demand_part()) {
    if (!op.sparse_part() || !is_connected(*op.sparse_part())) {
      throw DisconnectedGraphError("solve: Laplacian is disconnected");
    }
  }
  const Vector b = project_out_constant(rhs);
  const double bnorm = b.norm();
  SolveResult out;
  out.x = Vector::Zero(n);
  if (bnorm == 0.0) return out;

  Vector r = b;
  Vector z, p, q;
  precond.apply(r, z);
  p = z;
  double rz = r.dot(z);
  double rnorm = bnorm;
  for (int it = 1; it <= max_iter; ++it) {
    op.apply(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    out.x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    rnorm = r.norm();
    out.iterations = it;
    if (rnorm <= tol * bnorm) {
      // Confirm against the true residual; recurrences drift on long runs.
      out.x = project_out_constant(std::move(out.x));
      const double true_res = (op.apply(out.x) - b).norm();
      if (true_res <= tol * bnorm) {
        out.relative_residual = true_res / bnorm;
        return out;
      }
      r = b - op.apply(out.x);
      rnorm = true_res;
    }
    precond.apply(r, z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  out.x = project_out_constant(std::move(out.x));
  const double final_res = (op.apply(out.x) - b).norm() / bnorm;
  throw ConvergenceError("solve: PCG did not converge in " + std::to_string(max_iter) +
                             " iterations (relative residual " + std::to_string(final_res) + ")",
                         final_res, out.iterations);
}

inline Vector solve(const LaplacianOperator& op, const Vector& b, const Preconditioner& precond,
                    double tol = kDefaultSolveTol, int max_iter = -1) {
  return pcg(op, b, precond, tol, max_iter).x;
}

/// Jacobi-preconditioned solve.
inline Vector solve(const LaplacianOperator& op, const Vector& b, double tol = kDefaultSolveTol,
                    int max_iter = -1) {
  return pcg(op, b, jacobi_preconditioner(op), tol, max_iter).x;
}

}  // namespace fastge
