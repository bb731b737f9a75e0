// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_MODELS_HPP
#define PENSELECT_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "penselect/linalg.hpp"
#include "penselect/partition.hpp"

namespace penselect {

struct BlockTooSmall : std::invalid_argument {
  explicit BlockTooSmall(const std::string& what) : std::invalid_argument(what) {}
};

struct EmptySubset : std::invalid_argument {
  EmptySubset() : std::invalid_argument("the empty model has no basis; handle it at selection level") {}
};

enum class ModelFamily { histogram, piecewise_poly, trig };

inline std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::histogram: return "histogram";
    case ModelFamily::piecewise_poly: return "piecewise_poly";
    case ModelFamily::trig: return "trig";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Basis builders
// ---------------------------------------------------------------------------

// Block indicators scaled by 1/sqrt(|I|).
inline Matrix histogram_basis(const Partition& m) {
  Matrix B = Matrix::Zero(m.n(), m.size());
  int col = 0;
  for (const Block& blk : m.blocks()) {
    const double val = 1.0 / std::sqrt(static_cast<double>(blk.size()));
    for (int i = blk.lo; i <= blk.hi; ++i) B(i - 1, col) = val;
    ++col;
  }
  return B;
}

// Per block I of size N, the exactly orthonormal system
//   phi_0(i)   = 1/sqrt(N)
//   phi_j(i)   = sqrt(2/N) cos(j (i - lo + 1/2) pi / N),  j = 1..d,
// supported on I.  Discrete Chebyshev orthogonality makes the Gram matrix the
// identity up to rounding.
inline Matrix piecewise_poly_basis(const Partition& m, int d) {
  if (d < 0) throw std::invalid_argument("polynomial degree must be >= 0");
  for (const Block& blk : m.blocks()) {
    if (blk.size() < d + 1) {
      throw BlockTooSmall("piecewise polynomial block needs at least d+1 points");
    }
  }
  const double pi = 3.14159265358979323846264338327950288;
  Matrix B = Matrix::Zero(m.n(), static_cast<Eigen::Index>(m.size()) * (d + 1));
  int col = 0;
  for (const Block& blk : m.blocks()) {
    const int N = blk.size();
    const double flat = 1.0 / std::sqrt(static_cast<double>(N));
    for (int i = blk.lo; i <= blk.hi; ++i) B(i - 1, col) = flat;
    ++col;
    const double amp = std::sqrt(2.0 / N);
    for (int j = 1; j <= d; ++j) {
      for (int i = blk.lo; i <= blk.hi; ++i) {
        const double theta = (i - blk.lo + 0.5) * pi / N;
        B(i - 1, col) = amp * std::cos(j * theta);
      }
      ++col;
    }
  }
  return B;
}

// The discrete trigonometric system at x_i = i/n:
//   phi_0 = (1/sqrt(n), ..., 1/sqrt(n))
//   phi_{2j-1} = sqrt(2/n) (cos(2 pi j x_i))_i,   phi_{2j} = sqrt(2/n) (sin(2 pi j x_i))_i.
inline Matrix trig_basis(const std::vector<int>& subset, int n, int Dbar) {
  if (subset.empty()) throw EmptySubset();
  if (Dbar < 0 || 2 * Dbar + 1 > n) {
    throw std::invalid_argument("trig system requires 2*Dbar + 1 <= n");
  }
  std::vector<int> idx = subset;
  std::sort(idx.begin(), idx.end());
  if (std::unique(idx.begin(), idx.end()) != idx.end()) {
    throw std::invalid_argument("trig subset has duplicate indices");
  }
  if (idx.front() < 0 || idx.back() > 2 * Dbar) {
    throw std::invalid_argument("trig subset must lie in {0, ..., 2*Dbar}");
  }
  const double two_pi = 6.28318530717958647692528676655900577;
  Matrix B(n, static_cast<Eigen::Index>(idx.size()));
  for (size_t col = 0; col < idx.size(); ++col) {
    const int k = idx[col];
    if (k == 0) {
      B.col(col).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
      continue;
    }
    const int j = (k + 1) / 2;
    const bool is_cos = (k % 2 == 1);
    const double amp = std::sqrt(2.0 / n);
    for (int i = 1; i <= n; ++i) {
      const double arg = two_pi * j * static_cast<double>(i) / n;
      B(i - 1, col) = amp * (is_cos ? std::cos(arg) : std::sin(arg));
    }
  }
  return B;
}

inline Subspace histogram_space(const Partition& m) {
  return make_subspace(OrthonormalBasis{histogram_basis(m)});
}

inline Subspace piecewise_poly_space(const Partition& m, int d) {
  return make_subspace(OrthonormalBasis{piecewise_poly_basis(m, d)});
}

inline Subspace trig_space(const std::vector<int>& subset, int n, int Dbar) {
  return make_subspace(OrthonormalBasis{trig_basis(subset, n, Dbar)});
}

// ---------------------------------------------------------------------------
// Structural geometric bounds (orthonormal systems with per-block support)
// ---------------------------------------------------------------------------

struct LambdaBounds {
  double lambda2_sq = 1.0;
  double lambda_inf = 1.0;
};

namespace detail {
inline LambdaBounds lambda_bounds_core(double card_J, double phi_sq, double min_block, int n) {
  LambdaBounds b;
  b.lambda2_sq = std::min(card_J * phi_sq / min_block, 1.0);
  b.lambda_inf = std::min(card_J * phi_sq, std::sqrt(static_cast<double>(n) * b.lambda2_sq));
  return b;
}
}  // namespace detail

// Histogram: J = {1}, Phi = 1.
inline LambdaBounds structural_lambda_bounds_histogram(int min_block, int n) {
  return detail::lambda_bounds_core(1.0, 1.0, min_block, n);
}

// Piecewise polynomials: |J| = d+1, Phi = sqrt(2).
inline LambdaBounds structural_lambda_bounds_piecewise(int d, int min_block, int n) {
  return detail::lambda_bounds_core(d + 1.0, 2.0, min_block, n);
}

// Trigonometric: the partition is trivial, |J| = |m|, Phi = sqrt(2).
inline LambdaBounds structural_lambda_bounds_trig(int subset_size, int n) {
  return detail::lambda_bounds_core(static_cast<double>(subset_size), 2.0, n, n);
}

// ---------------------------------------------------------------------------
// Model collections
// ---------------------------------------------------------------------------

struct ModelSpec {
  std::string id;
  ModelFamily family = ModelFamily::histogram;
  std::optional<Partition> blocks;  // histogram / piecewise_poly payload
  std::vector<int> subset;          // trig payload (may be empty: S = {0})
  double delta = 0.0;
  int dim = 0;  // D_m
};

inline double default_partition_delta(const Partition& m) {
  return m.size() + std::log(2.0);
}

inline double default_trig_delta(int subset_size, int Dbar) {
  const double N = 2.0 * Dbar + 1.0;
  const double k = subset_size;
  const double log_binom = std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0);
  return log_binom + k;
}

// Exact pairwise sweep for Lbar_inf is used only when |M|^2 fits this budget;
// beyond it the structural family bound applies.
inline constexpr long long kPairBudget = 10000;

class ModelCollection {
 public:
  static ModelCollection histograms(int n, std::vector<Partition> parts,
                                    std::optional<std::vector<double>> deltas = std::nullopt,
                                    std::optional<std::vector<std::string>> ids = std::nullopt) {
    return ModelCollection(n, ModelFamily::histogram, 0, 0, std::move(parts), {},
                           std::move(deltas), std::move(ids));
  }

  static ModelCollection piecewise(int n, int d, std::vector<Partition> parts,
                                   std::optional<std::vector<double>> deltas = std::nullopt,
                                   std::optional<std::vector<std::string>> ids = std::nullopt) {
    return ModelCollection(n, ModelFamily::piecewise_poly, d, 0, std::move(parts), {},
                           std::move(deltas), std::move(ids));
  }

  static ModelCollection trig(int n, int Dbar, std::vector<std::vector<int>> subsets,
                              std::optional<std::vector<double>> deltas = std::nullopt,
                              std::optional<std::vector<std::string>> ids = std::nullopt) {
    return ModelCollection(n, ModelFamily::trig, 0, Dbar, {}, std::move(subsets),
                           std::move(deltas), std::move(ids));
  }

  int n() const { return n_; }
  ModelFamily family() const { return family_; }
  int poly_degree() const { return d_; }
  int trig_dbar() const { return dbar_; }
  const std::vector<ModelSpec>& models() const { return models_; }
  size_t size() const { return models_.size(); }

  double sigma_weights() const { return sigma_weights_; }  // Sigma = sum e^{-Delta}
  double lambda_bar_inf() const { return lambda_bar_inf_; }
  double lambda2_sum_space() const { return lambda2_sn_; }

  // min |I| over the common refinement of all partitions (the role of the
  // finest partition); n for trig collections.
  int sum_min_block() const {
    return sum_partition_ ? sum_partition_->min_block() : n_;
  }
  const std::optional<Partition>& sum_partition() const { return sum_partition_; }
  const std::vector<int>& sum_subset() const { return sum_subset_; }

  // The dimension-vs-sample-size conditions under which the per-family
  // penalty displays are valid, for a given a > 0.
  bool proposition_condition(double a) const {
    if (a <= 0.0) throw std::invalid_argument("a must be positive");
    const double logn = std::log(static_cast<double>(n_));
    switch (family_) {
      case ModelFamily::histogram:
        return sum_min_block() >= a * a * logn * logn;
      case ModelFamily::piecewise_poly:
        return sum_min_block() >= (d_ + 1) * a * a * logn * logn;
      case ModelFamily::trig:
        return 2.0 * dbar_ + 1.0 <= std::sqrt(static_cast<double>(n_)) / (a * logn);
    }
    return false;
  }

  Subspace space_for(const ModelSpec& m) const {
    switch (family_) {
      case ModelFamily::histogram: return histogram_space(*m.blocks);
      case ModelFamily::piecewise_poly: return piecewise_poly_space(*m.blocks, d_);
      case ModelFamily::trig: return trig_space(m.subset, n_, dbar_);
    }
    throw std::logic_error("unknown family");
  }

  nlohmann::json to_json() const {
    nlohmann::json models = nlohmann::json::array();
    for (const ModelSpec& m : models_) {
      nlohmann::json jm{{"id", m.id}, {"delta", m.delta}};
      if (family_ == ModelFamily::trig) {
        jm["subset"] = m.subset;
      } else {
        nlohmann::json blocks = nlohmann::json::array();
        for (const Block& b : m.blocks->blocks()) blocks.push_back({b.lo, b.hi});
        jm["blocks"] = blocks;
      }
      models.push_back(std::move(jm));
    }
    nlohmann::json j{{"n", n_}, {"family", to_string(family_)}, {"models", std::move(models)}};
    if (family_ == ModelFamily::piecewise_poly) j["d"] = d_;
    if (family_ == ModelFamily::trig) j["Dbar"] = dbar_;
    return j;
  }

  static ModelCollection from_json(const nlohmann::json& j) {
    const int n = j.at("n").get<int>();
    const std::string fam = j.at("family").get<std::string>();
    std::vector<double> deltas;
    std::vector<std::string> ids;
    if (fam == "trig") {
      std::vector<std::vector<int>> subsets;
      for (const auto& jm : j.at("models")) {
        subsets.push_back(jm.at("subset").get<std::vector<int>>());
        deltas.push_back(jm.at("delta").get<double>());
        ids.push_back(jm.at("id").get<std::string>());
      }
      return trig(n, j.at("Dbar").get<int>(), std::move(subsets), std::move(deltas),
                  std::move(ids));
    }
    std::vector<Partition> parts;
    for (const auto& jm : j.at("models")) {
      std::vector<Block> blocks;
      for (const auto& jb : jm.at("blocks")) {
        blocks.push_back(Block{jb.at(0).get<int>(), jb.at(1).get<int>()});
      }
      parts.emplace_back(n, std::move(blocks));
      deltas.push_back(jm.at("delta").get<double>());
      ids.push_back(jm.at("id").get<std::string>());
    }
    if (fam == "histogram") {
      return histograms(n, std::move(parts), std::move(deltas), std::move(ids));
    }
    if (fam == "piecewise_poly") {
      return piecewise(n, j.at("d").get<int>(), std::move(parts), std::move(deltas),
                       std::move(ids));
    }
    throw std::invalid_argument("unknown model family: " + fam);
  }

 private:
  ModelCollection(int n, ModelFamily family, int d, int Dbar, std::vector<Partition> parts,
                  std::vector<std::vector<int>> subsets,
                  std::optional<std::vector<double>> deltas,
                  std::optional<std::vector<std::string>> ids)
      : n_(n), family_(family), d_(d), dbar_(Dbar) {
    if (n_ < 2) throw std::invalid_argument("collections require n >= 2");
    const size_t count = (family_ == ModelFamily::trig) ? subsets.size() : parts.size();
    if (count == 0) throw std::invalid_argument("collection must contain at least one model");
    if (deltas && deltas->size() != count) {
      throw std::invalid_argument("deltas length must match the number of models");
    }
    if (ids && ids->size() != count) {
      throw std::invalid_argument("ids length must match the number of models");
    }

    models_.reserve(count);
    char idbuf[24];
    for (size_t k = 0; k < count; ++k) {
      ModelSpec m;
      if (ids) {
        m.id = std::move((*ids)[k]);
      } else {
        std::snprintf(idbuf, sizeof(idbuf), "m%06zu", k);
        m.id = idbuf;
      }
      m.family = family_;
      if (family_ == ModelFamily::trig) {
        m.subset = std::move(subsets[k]);
        std::sort(m.subset.begin(), m.subset.end());
        if (!m.subset.empty() &&
            (m.subset.front() < 0 || m.subset.back() > 2 * dbar_ ||
             std::adjacent_find(m.subset.begin(), m.subset.end()) != m.subset.end())) {
          throw std::invalid_argument("trig subset must be a subset of {0,...,2*Dbar}");
        }
        m.dim = static_cast<int>(m.subset.size());
        m.delta = deltas ? (*deltas)[k] : default_trig_delta(m.dim, dbar_);
      } else {
        if (parts[k].n() != n_) throw std::invalid_argument("partition n mismatch");
        if (family_ == ModelFamily::piecewise_poly && parts[k].min_block() < d_ + 1) {
          throw BlockTooSmall("every block needs at least d+1 points");
        }
        m.dim = (family_ == ModelFamily::histogram) ? parts[k].size()
                                                    : parts[k].size() * (d_ + 1);
        m.delta = deltas ? (*deltas)[k] : default_partition_delta(parts[k]);
        m.blocks = std::move(parts[k]);
      }
      if (m.delta < 0.0) throw std::invalid_argument("weights Delta_m must be nonnegative");
      models_.push_back(std::move(m));
    }

    compute_constants();
  }

  void compute_constants() {
    sigma_weights_ = 0.0;
    for (const ModelSpec& m : models_) sigma_weights_ += std::exp(-m.delta);
    if (!std::isfinite(sigma_weights_)) throw std::invalid_argument("Sigma must be finite");

    if (family_ == ModelFamily::trig) {
      std::vector<char> used(static_cast<size_t>(2 * dbar_ + 1), 0);
      for (const ModelSpec& m : models_) {
        for (int k : m.subset) used[static_cast<size_t>(k)] = 1;
      }
      for (int k = 0; k <= 2 * dbar_; ++k) {
        if (used[static_cast<size_t>(k)]) sum_subset_.push_back(k);
      }
      lambda2_sn_ = sum_subset_.empty()
                        ? 0.0
                        : trig_space(sum_subset_, n_, dbar_).lambda2;
    } else {
      std::optional<Partition> acc;
      for (const ModelSpec& m : models_) {
        acc = acc ? refine(*acc, *m.blocks) : *m.blocks;
      }
      sum_partition_ = std::move(acc);
      if (family_ == ModelFamily::piecewise_poly && sum_partition_->min_block() < d_ + 1) {
        // The common refinement leaves the family; fall back to the explicit sum.
        lambda2_sn_ = explicit_sum_space().lambda2;
      } else {
        lambda2_sn_ = (family_ == ModelFamily::histogram)
                          ? histogram_space(*sum_partition_).lambda2
                          : piecewise_poly_space(*sum_partition_, d_).lambda2;
      }
    }

    lambda_bar_inf_ = compute_lambda_bar_inf();
  }

  Subspace explicit_sum_space() const {
    if (models_.size() > 256) {
      throw std::invalid_argument(
          "explicit sum space is infeasible for this collection; use nested partitions");
    }
    std::vector<VectorN> cols;
    for (const ModelSpec& m : models_) {
      const Subspace s = space_for(m);
      for (int j = 0; j < s.dim(); ++j) cols.push_back(s.basis.columns.col(j));
    }
    return subspace_from_span(cols);
  }

  double compute_lambda_bar_inf() const {
    const long long count = static_cast<long long>(models_.size());
    if (count * count <= kPairBudget) {
      double best = 0.0;
      std::vector<std::optional<Subspace>> spaces(models_.size());
      for (size_t i = 0; i < models_.size(); ++i) {
        if (family_ == ModelFamily::trig && models_[i].subset.empty()) continue;
        spaces[i] = space_for(models_[i]);
      }
      for (size_t i = 0; i < models_.size(); ++i) {
        if (!spaces[i]) continue;
        for (size_t j = i; j < models_.size(); ++j) {
          if (!spaces[j]) continue;
          const Subspace sum = (i == j) ? *spaces[i] : sum_spaces(*spaces[i], *spaces[j]);
          best = std::max(best, sum.lambda_inf);
        }
      }
      return std::max(best, 1.0);
    }
    // Structural family bound on Lambda_inf(S_m + S_m').
    switch (family_) {
      case ModelFamily::histogram: return 1.0;
      case ModelFamily::piecewise_poly: return 2.0 * (d_ + 1);
      case ModelFamily::trig: return std::max(1.0, std::sqrt(2.0 * (2.0 * dbar_ + 1.0)));
    }
    return 1.0;
  }

  int n_;
  ModelFamily family_;
  int d_;
  int dbar_;
  std::vector<ModelSpec> models_;
  double sigma_weights_ = 0.0;
  double lambda_bar_inf_ = 1.0;
  double lambda2_sn_ = 0.0;
  std::optional<Partition> sum_partition_;
  std::vector<int> sum_subset_;
};

struct CollectionConstants {
  double sigma_weights = 0.0;
  double lambda_bar_inf = 1.0;
  double lambda2_sum_space = 0.0;
};

inline CollectionConstants collection_constants(const ModelCollection& c) {
  return CollectionConstants{c.sigma_weights(), c.lambda_bar_inf(), c.lambda2_sum_space()};
}

// ---------------------------------------------------------------------------
// Fast per-observation criterion evaluation
// ---------------------------------------------------------------------------

// Precomputes what is needed to evaluate |P_m y|^2 in O(D_m) per histogram or
// trig model (O(|I| (d+1)) per block for piecewise polynomials) without
// materializing any basis.
class ResidualEvaluator {
 public:
  ResidualEvaluator(const ModelCollection& coll, const VectorN& y)
      : coll_(&coll), y_(y), y_sq_(y.squaredNorm()) {
    if (y.size() != coll.n()) throw DimensionMismatch("observation length mismatch");
    if (coll.family() != ModelFamily::trig) {
      prefix_.resize(static_cast<size_t>(coll.n()) + 1, 0.0);
      for (int i = 1; i <= coll.n(); ++i) prefix_[i] = prefix_[i - 1] + y[i - 1];
    } else {
      const int count = 2 * coll.trig_dbar() + 1;
      dots_.assign(static_cast<size_t>(count), 0.0);
      std::vector<int> all(static_cast<size_t>(count));
      for (int k = 0; k < count; ++k) all[static_cast<size_t>(k)] = k;
      const Matrix B = trig_basis(all, coll.n(), coll.trig_dbar());
      Eigen::Map<Eigen::VectorXd>(dots_.data(), count) = B.transpose() * y;
    }
  }

  double y_sq_norm() const { return y_sq_; }

  double fit_sq_norm(const ModelSpec& m) const {
    switch (coll_->family()) {
      case ModelFamily::histogram: {
        double fit = 0.0;
        for (const Block& b : m.blocks->blocks()) {
          const double s = prefix_[static_cast<size_t>(b.hi)] -
                           prefix_[static_cast<size_t>(b.lo) - 1];
          fit += s * s / b.size();
        }
        return fit;
      }
      case ModelFamily::piecewise_poly: {
        const double pi = 3.14159265358979323846264338327950288;
        const int d = coll_->poly_degree();
        double fit = 0.0;
        for (const Block& b : m.blocks->blocks()) {
          const int N = b.size();
          const double s = prefix_[static_cast<size_t>(b.hi)] -
                           prefix_[static_cast<size_t>(b.lo) - 1];
          fit += s * s / N;
          const double amp = std::sqrt(2.0 / N);
          for (int j = 1; j <= d; ++j) {
            double dot = 0.0;
            for (int i = b.lo; i <= b.hi; ++i) {
              dot += y_[i - 1] * amp * std::cos(j * (i - b.lo + 0.5) * pi / N);
            }
            fit += dot * dot;
          }
        }
        return fit;
      }
      case ModelFamily::trig: {
        double fit = 0.0;
        for (int k : m.subset) {
          const double dk = dots_[static_cast<size_t>(k)];
          fit += dk * dk;
        }
        return fit;
      }
    }
    return 0.0;
  }

  double residual_sq(const ModelSpec& m) const {
    return std::max(0.0, y_sq_ - fit_sq_norm(m));
  }

  VectorN fitted(const ModelSpec& m) const {
    VectorN out = VectorN::Zero(coll_->n());
    switch (coll_->family()) {
      case ModelFamily::histogram: {
        for (const Block& b : m.blocks->blocks()) {
          const double mean = (prefix_[static_cast<size_t>(b.hi)] -
                               prefix_[static_cast<size_t>(b.lo) - 1]) /
                              b.size();
          for (int i = b.lo; i <= b.hi; ++i) out[i - 1] = mean;
        }
        return out;
      }
      case ModelFamily::piecewise_poly: {
        const Matrix B = piecewise_poly_basis(*m.blocks, coll_->poly_degree());
        return B * (B.transpose() * y_);
      }
      case ModelFamily::trig: {
        if (m.subset.empty()) return out;
        const Matrix B = trig_basis(m.subset, coll_->n(), coll_->trig_dbar());
        VectorN coef(static_cast<Eigen::Index>(m.subset.size()));
        for (size_t k = 0; k < m.subset.size(); ++k) {
          coef[static_cast<Eigen::Index>(k)] = dots_[static_cast<size_t>(m.subset[k])];
        }
        return B * coef;
      }
    }
    return out;
  }

 private:
  const ModelCollection* coll_;
  VectorN y_;
  double y_sq_;
  std::vector<double> prefix_;
  std::vector<double> dots_;
};

}  // namespace penselect

#endif  // PENSELECT_MODELS_HPP
