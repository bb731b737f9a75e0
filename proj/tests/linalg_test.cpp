// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#include "penselect/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "penselect/models.hpp"
#include "penselect/partition.hpp"
#include "penselect/rng.hpp"

namespace penselect {
namespace {

VectorN unit(int n, int i) {
  VectorN v = VectorN::Zero(n);
  v[i] = 1.0;
  return v;
}

VectorN random_vector(rng::Engine& eng, int n) {
  VectorN v(n);
  for (int i = 0; i < n; ++i) v[i] = rng::standard_normal(eng);
  return v;
}

Subspace random_subspace(rng::Engine& eng, int n, int d) {
  std::vector<VectorN> cols;
  for (int j = 0; j < d; ++j) cols.push_back(random_vector(eng, n));
  return subspace_from_span(cols);
}

TEST(Orthonormalize, AlreadyOrthonormalIsKept) {
  const auto basis = orthonormalize({unit(3, 0), unit(3, 1)});
  ASSERT_EQ(basis.dim(), 2);
  EXPECT_NEAR((basis.columns.col(0) - unit(3, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((basis.columns.col(1) - unit(3, 1)).norm(), 0.0, 1e-15);
}

TEST(Orthonormalize, SpanPreservedAndGramIdentity) {
  VectorN a(3), b(3);
  a << 1, 1, 0;
  b << 1, 0, 0;
  const Subspace s = subspace_from_span({a, b});
  ASSERT_EQ(s.dim(), 2);
  const Matrix gram = s.basis.columns.transpose() * s.basis.columns;
  EXPECT_LT((gram - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  // each input is its own projection
  EXPECT_LT((project(s, a) - a).norm(), 1e-12);
  EXPECT_LT((project(s, b) - b).norm(), 1e-12);
}

TEST(Orthonormalize, DependentVectorsCollapse) {
  VectorN a(2), b(2);
  a << 1, 0;
  b << 2, 0;
  EXPECT_EQ(orthonormalize({a, b}).dim(), 1);
}

TEST(Orthonormalize, Errors) {
  EXPECT_THROW(orthonormalize({VectorN::Zero(3)}), AllZeroInput);
  EXPECT_THROW(orthonormalize({}), AllZeroInput);
  VectorN a(3), b(2);
  a.setOnes();
  b.setOnes();
  EXPECT_THROW(orthonormalize({a, b}), DimensionMismatch);
}

TEST(Project, FixedPointAndKernel) {
  rng::Engine eng(42);
  const Subspace s = random_subspace(eng, 8, 3);
  const VectorN inside = s.basis.columns * VectorN::Random(3);
  EXPECT_LT((project(s, inside) - inside).cwiseAbs().maxCoeff(), 1e-10);
  // a vector orthogonal to the space projects to zero
  VectorN y = random_vector(eng, 8);
  y -= project(s, y);
  EXPECT_LT(project(s, y).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(project(s, VectorN::Zero(5)), DimensionMismatch);
}

TEST(Project, HistogramBlockMeans) {
  const Subspace s = histogram_space(Partition(3, {Block{1, 2}, Block{3, 3}}));
  VectorN y(3);
  y << 1, 3, 5;
  VectorN expected(3);
  expected << 2, 2, 5;
  EXPECT_LT((project(s, y) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lambda2, KnownValues) {
  // full space
  const Subspace full = subspace_from_span({unit(4, 0), unit(4, 1), unit(4, 2), unit(4, 3)});
  EXPECT_NEAR(full.lambda2, 1.0, 1e-12);
  // histogram with blocks of sizes (3,3)
  const Subspace h = histogram_space(Partition(6, {Block{1, 3}, Block{4, 6}}));
  EXPECT_NEAR(h.lambda2, 1.0 / std::sqrt(3.0), 1e-12);
  // span of the all-ones vector in R^4
  const Subspace ones = subspace_from_span({VectorN::Ones(4)});
  EXPECT_NEAR(ones.lambda2, 0.5, 1e-12);
}

TEST(LambdaInf, KnownValues) {
  const Subspace full = subspace_from_span({unit(3, 0), unit(3, 1), unit(3, 2)});
  EXPECT_NEAR(full.lambda_inf, 1.0, 1e-12);
  const Subspace h = histogram_space(Partition(7, {Block{1, 2}, Block{3, 6}, Block{7, 7}}));
  EXPECT_NEAR(h.lambda_inf, 1.0, 1e-12);
  const Subspace ones = subspace_from_span({VectorN::Ones(4)});
  EXPECT_NEAR(ones.lambda_inf, 1.0, 1e-12);
}

TEST(SumSpaces, Idempotent) {
  rng::Engine eng(7);
  const Subspace s = random_subspace(eng, 6, 2);
  const Subspace ss = sum_spaces(s, s);
  EXPECT_EQ(ss.dim(), s.dim());
  EXPECT_LT((projector(ss) - projector(s)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SumSpaces, CoordinatePlanes) {
  const Subspace e1 = subspace_from_span({unit(3, 0)});
  const Subspace e2 = subspace_from_span({unit(3, 1)});
  const Subspace sum = sum_spaces(e1, e2);
  EXPECT_EQ(sum.dim(), 2);
  VectorN y(3);
  y << 2, -3, 5;
  VectorN expected(3);
  expected << 2, -3, 0;
  EXPECT_LT((project(sum, y) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SumSpaces, HistogramSumIsRefinement) {
  const Partition m(8, {Block{1, 4}, Block{5, 8}});
  const Partition mp(8, {Block{1, 2}, Block{3, 8}});
  const Subspace sum = sum_spaces(histogram_space(m), histogram_space(mp));
  const Subspace ref = histogram_space(refine(m, mp));
  EXPECT_EQ(sum.dim(), ref.dim());
  EXPECT_LT((projector(sum) - projector(ref)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Invariants, RandomSubspaces) {
  rng::Engine eng(2024);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 4 + static_cast<int>(eng.next_u64() % 60);
    const int d = 1 + static_cast<int>(eng.next_u64() % static_cast<unsigned>(n - 1));
    const Subspace s = random_subspace(eng, n, d);
    // orthonormality
    const Matrix gram = s.basis.columns.transpose() * s.basis.columns;
    EXPECT_LT((gram - Matrix::Identity(s.dim(), s.dim())).cwiseAbs().maxCoeff(), 1e-10);
    // projection idempotence and Pythagoras
    const VectorN y = random_vector(eng, n);
    const VectorN py = project(s, y);
    EXPECT_LT((project(s, py) - py).norm(), 1e-9 * y.norm());
    const double lhs = y.squaredNorm();
    const double rhs = py.squaredNorm() + (y - py).squaredNorm();
    EXPECT_NEAR(lhs, rhs, 1e-9 * lhs);
    // range constraints
    EXPECT_LE(s.lambda2, 1.0 + 1e-12);
    EXPECT_GE(s.lambda_inf, 1.0 - 1e-9);
    EXPECT_LE(s.lambda_inf, std::sqrt(double(n)) * s.lambda2 + 1e-9);
  }
}

TEST(LambdaInf, ColumnStreamingPathForLargeN) {
  // n above the dense-projector cutoff takes the one-column-at-a-time path
  const int n = 2100;
  const Subspace s = histogram_space(Partition(n, {Block{1, 1050}, Block{1051, n}}));
  EXPECT_NEAR(s.lambda_inf, 1.0, 1e-10);
  EXPECT_NEAR(s.lambda2, 1.0 / std::sqrt(1050.0), 1e-12);
}

TEST(Invariants, CachedConstantsMatchRecomputation) {
  rng::Engine eng(314);
  const Subspace s = random_subspace(eng, 20, 5);
  EXPECT_NEAR(s.lambda2, lambda2(s.basis), 1e-12);
  EXPECT_NEAR(s.lambda_inf, lambda_inf(s.basis), 1e-12);
}

TEST(Invariants, NormConnection) {
  // lambda2(S) = sup over t in S of |t|_inf / |t|_2
  rng::Engine eng(99);
  for (int rep = 0; rep < 5; ++rep) {
    const Subspace s = random_subspace(eng, 24, 4);
    for (int k = 0; k < 1000; ++k) {
      const VectorN t = s.basis.columns * random_vector(eng, s.dim());
      const double ratio = t.cwiseAbs().maxCoeff() / t.norm();
      EXPECT_LE(ratio, s.lambda2 + 1e-12);
    }
  }
  // for histogram spaces the supremum is attained at basis-aligned vectors
  const Subspace h = histogram_space(Partition(12, {Block{1, 2}, Block{3, 8}, Block{9, 12}}));
  double best = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const VectorN t = h.basis.columns * random_vector(eng, h.dim());
    best = std::max(best, t.cwiseAbs().maxCoeff() / t.norm());
  }
  for (int j = 0; j < h.dim(); ++j) {
    const VectorN t = h.basis.columns.col(j);
    best = std::max(best, t.cwiseAbs().maxCoeff() / t.norm());
  }
  EXPECT_GE(best, 0.95 * h.lambda2);
  EXPECT_LE(best, h.lambda2 + 1e-12);
}

}  // namespace
}  // namespace penselect
