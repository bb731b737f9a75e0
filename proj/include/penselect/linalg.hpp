// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_LINALG_HPP
#define PENSELECT_LINALG_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

namespace penselect {

using VectorN = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct AllZeroInput : std::invalid_argument {
  AllZeroInput() : std::invalid_argument("all input vectors are numerically zero") {}
};

struct DimensionMismatch : std::invalid_argument {
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// Max allowed deviation of B'B from the identity for a constructed basis.
inline constexpr double kOrthoTol = 1e-10;
// Rank cut in orthonormalize, relative to the largest input column norm.
inline constexpr double kRankTol = 1e-9;

struct OrthonormalBasis {
  Matrix columns;  // n x D, D >= 1, B'B = I

  int n() const { return static_cast<int>(columns.rows()); }
  int dim() const { return static_cast<int>(columns.cols()); }
};

// A linear subspace of n-space held as an orthonormal basis, with the
// geometric constants L2 = max_i |P e_i|_2 and Linf = max_i |P e_i|_1
// cached at construction.
struct Subspace {
  OrthonormalBasis basis;
  double lambda2 = 0.0;    // in (0, 1]
  double lambda_inf = 0.0; // in [1, n]

  int n() const { return basis.n(); }
  int dim() const { return basis.dim(); }
};

inline double lambda2(const OrthonormalBasis& b) {
  // |P e_i|_2 = |B' e_i|_2 = norm of row i of B.
  return b.columns.rowwise().norm().maxCoeff();
}

inline double lambda_inf(const OrthonormalBasis& b) {
  const Matrix& B = b.columns;
  const Eigen::Index n = B.rows();
  if (n <= 2048) {
    return (B * B.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
  }
  // One projector column at a time for large n.
  double best = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorN col = B * B.row(i).transpose();
    best = std::max(best, col.lpNorm<1>());
  }
  return best;
}

inline Subspace make_subspace(OrthonormalBasis basis) {
  if (basis.dim() < 1) throw AllZeroInput();
  if (basis.n() < 2) throw DimensionMismatch("subspaces require ambient dimension n >= 2");
  const Matrix gram = basis.columns.transpose() * basis.columns;
  const double err = (gram - Matrix::Identity(basis.dim(), basis.dim())).cwiseAbs().maxCoeff();
  if (err > kOrthoTol) {
    throw std::invalid_argument("basis fails the orthonormality check");
  }
  Subspace s;
  s.basis = std::move(basis);
  s.lambda2 = lambda2(s.basis);
  s.lambda_inf = lambda_inf(s.basis);
  return s;
}

// Modified Gram-Schmidt with one reorthogonalization pass.  Rank-deficient
// inputs are reduced: a column whose residual norm falls below
// kRankTol * (largest input norm) is dropped.
inline OrthonormalBasis orthonormalize(const std::vector<VectorN>& vectors) {
  if (vectors.empty()) throw AllZeroInput();
  const Eigen::Index n = vectors.front().size();
  double max_norm = 0.0;
  for (const VectorN& v : vectors) {
    if (v.size() != n) throw DimensionMismatch("input vectors have mixed lengths");
    max_norm = std::max(max_norm, v.norm());
  }
  if (max_norm < 1e-300) throw AllZeroInput();

  const double cut = kRankTol * max_norm;
  Matrix basis(n, static_cast<Eigen::Index>(vectors.size()));
  Eigen::Index d = 0;
  for (const VectorN& v : vectors) {
    VectorN r = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < d; ++j) {
        r -= basis.col(j).dot(r) * basis.col(j);
      }
    }
    const double nr = r.norm();
    if (nr > cut) {
      basis.col(d++) = r / nr;
    }
  }
  return OrthonormalBasis{basis.leftCols(d)};
}

inline Subspace subspace_from_span(const std::vector<VectorN>& vectors) {
  return make_subspace(orthonormalize(vectors));
}

inline VectorN project(const Subspace& s, const VectorN& y) {
  if (y.size() != s.n()) throw DimensionMismatch("vector length does not match ambient dimension");
  const Matrix& B = s.basis.columns;
  return B * (B.transpose() * y);
}

inline Matrix projector(const Subspace& s) {
  const Matrix& B = s.basis.columns;
  return B * B.transpose();
}

inline Subspace sum_spaces(const Subspace& a, const Subspace& b) {
  if (a.n() != b.n()) throw DimensionMismatch("sum of subspaces with different ambient dimensions");
  std::vector<VectorN> cols;
  cols.reserve(static_cast<size_t>(a.dim() + b.dim()));
  for (int j = 0; j < a.dim(); ++j) cols.push_back(a.basis.columns.col(j));
  for (int j = 0; j < b.dim(); ++j) cols.push_back(b.basis.columns.col(j));
  return make_subspace(orthonormalize(cols));
}

}  // namespace penselect

#endif  // PENSELECT_LINALG_HPP
