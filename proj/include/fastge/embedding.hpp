#pragma once

#include <cmath>
#include <string>

#include "fastge/error.hpp"
#include "fastge/graph.hpp"
#include "fastge/operators.hpp"

namespace fastge {

/// Relative threshold for degenerate columns and rows.
inline constexpr double kEmbeddingEpsilon = 1e-10;

struct EmbeddingResult {
  /// n x k, rows of unit Euclidean norm (zero rows stay zero).
  Matrix u;
  /// Row norms before normalization.
  Vector l;
  /// Columns after d-centering and L_H-normalization, before row normalization.
  Matrix raw;

  bool is_zero_row(Index j) const { return l[j] == 0.0; }
};

/// Builds the spectral embedding from generalized eigenvectors.
///
/// Each column is shifted along the constant vector so that x.d = 0, then
/// scaled to unit L_H-norm; finally every row is projected onto the unit
/// sphere. Shifting by a constant does not change a generalized eigenvector,
/// and the d-orthogonal representative is the one the 2-way guarantee uses.
inline EmbeddingResult compute_embedding(const Matrix& x, const LaplacianOperator& h,
                                         const DegreeVector& d) {
  const Index n = x.rows();
  const Index k = x.cols();
  detail::check_size(h.size(), n, "compute_embedding");
  detail::check_size(d.size(), n, "compute_embedding degrees");
  const double dsum = d.d.sum();
  if (!(dsum > 0.0)) throw InputError("compute_embedding: degree vector sums to zero");
  const double hscale = h.diagonal().cwiseAbs().maxCoeff();

  EmbeddingResult out;
  out.raw.resize(n, k);
  for (Index i = 0; i < k; ++i) {
    Vector col = x.col(i);
    col.array() -= col.dot(d.d) / dsum;
    const double q = h.quadratic(col);
    if (!(q > kEmbeddingEpsilon * col.squaredNorm() * hscale)) {
      throw NumericalError("compute_embedding: column " + std::to_string(i) +
                           " lies in the null space of L_H");
    }
    out.raw.col(i) = col / std::sqrt(q);
  }

  out.u = out.raw;
  out.l.resize(n);
  for (Index j = 0; j < n; ++j) out.l[j] = out.raw.row(j).norm();
  const double cutoff = kEmbeddingEpsilon * (n > 0 ? out.l.maxCoeff() : 0.0);
  for (Index j = 0; j < n; ++j) {
    if (out.l[j] <= cutoff) {
      out.l[j] = 0.0;
      out.u.row(j).setZero();
    } else {
      out.u.row(j) /= out.l[j];
    }
  }
  return out;
}

}  // namespace fastge
