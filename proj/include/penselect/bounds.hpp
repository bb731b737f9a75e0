// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_BOUNDS_HPP
#define PENSELECT_BOUNDS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "penselect/rng.hpp"

namespace penselect {

// The universal chaining constant.
inline constexpr double kKappa = 18.0;

struct KNotGreaterThanOne : std::invalid_argument {
  KNotGreaterThanOne() : std::invalid_argument("K must be > 1") {}
};

struct DeltaOutOfRange : std::invalid_argument {
  DeltaOutOfRange() : std::invalid_argument("delta must lie in (0, 1]") {}
};

struct PhiTooSmall : std::invalid_argument {
  PhiTooSmall() : std::invalid_argument("phi(x0) must be >= 1") {}
};

struct InvalidPartitionSizes : std::invalid_argument {
  explicit InvalidPartitionSizes(const std::string& what) : std::invalid_argument(what) {}
};

struct ChainingParams {
  double v = 0.0;   // d-diameter bound
  double b = 0.0;   // c*delta-diameter bound
  int D = 1;        // dimension
  double kappa = kKappa;
};

namespace detail {
inline void check_chaining(const ChainingParams& p) {
  if (p.D < 1) throw std::invalid_argument("chaining dimension must be >= 1");
  if (p.v < 0.0 || p.b < 0.0) throw std::invalid_argument("diameter bounds must be nonnegative");
  if (p.kappa != kKappa) throw std::invalid_argument("kappa is pinned to 18");
}
}  // namespace detail

// sqrt(2 v2 u) + c u
inline double bernstein_threshold(double v2, double c, double u) {
  if (v2 < 0.0 || c < 0.0 || u < 0.0) throw std::invalid_argument("arguments must be nonnegative");
  return std::sqrt(2.0 * v2 * u) + c * u;
}

// exp(-x^2 / (2 (v2 + c x)))
inline double bernstein_tail_prob(double x, double v2, double c) {
  if (x < 0.0) throw std::invalid_argument("x must be nonnegative");
  const double denom = 2.0 * (v2 + c * x);
  if (denom <= 0.0) return x == 0.0 ? 1.0 : 0.0;
  return std::exp(-x * x / denom);
}

// kappa (sqrt(v^2 (D+x)) + b (D+x))
inline double sup_threshold(const ChainingParams& p, double x) {
  detail::check_chaining(p);
  if (x < 0.0) throw std::invalid_argument("x must be nonnegative");
  const double dx = static_cast<double>(p.D) + x;
  return p.kappa * (std::sqrt(p.v * p.v * dx) + p.b * dx);
}

// The H series of the norm-case chaining proof, with N_k = 9^{2D} 5^{2kD}:
//   H = sum_k 2^{-k} (v sqrt(2 log(2^{k+1} N_k)) + b log(2^{k+1} N_k)).
// Logs are expanded exactly; truncated once the tail is below 1e-12 relative.
inline double chaining_H(const ChainingParams& p) {
  detail::check_chaining(p);
  const double log9 = std::log(9.0);
  const double log5 = std::log(5.0);
  const double log2c = std::log(2.0);
  const double D = static_cast<double>(p.D);
  double sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double logN = 2.0 * D * log9 + 2.0 * k * D * log5 + (k + 1) * log2c;
    const double term = std::ldexp(p.v * std::sqrt(2.0 * logN) + p.b * logN, -k);
    sum += term;
    if (k > 2 && term <= 1e-13 * sum) break;
  }
  return sum;
}

// The finite H of the general chaining theorem with arbitrary partitions:
// sizes[k] = |A_k|, sizes[0] = 1, and N_k = sizes[k+1] * sizes[k].
inline double generic_H(double v, double b, const std::vector<long long>& sizes) {
  if (sizes.empty() || sizes.front() != 1) {
    throw InvalidPartitionSizes("partition sizes must start at |A_0| = 1");
  }
  for (size_t k = 1; k < sizes.size(); ++k) {
    if (sizes[k] < sizes[k - 1]) {
      throw InvalidPartitionSizes("partition sizes must be nondecreasing");
    }
  }
  const double log2c = std::log(2.0);
  double sum = 0.0;
  for (size_t k = 0; k + 1 < sizes.size(); ++k) {
    const double logN = (k + 1) * log2c + std::log(static_cast<double>(sizes[k + 1])) +
                        std::log(static_cast<double>(sizes[k]));
    sum += std::ldexp(v * std::sqrt(2.0 * logN) + b * logN, -static_cast<int>(k));
  }
  return sum;
}

// C(K) = K (K^2 + K - 1) / (K - 1)^3
inline double oracle_constant(double K) {
  if (!(K > 1.0)) throw KNotGreaterThanOne();
  const double km1 = K - 1.0;
  return K * (K * K + K - 1.0) / (km1 * km1 * km1);
}

// u = (c + sigma) Lbar_inf L2(S_n) log(n^2 e^z) = (c+sigma) Lbar_inf L2 (2 log n + z)
inline double u_factor(double sigma, double c, double lambda_bar_inf, double lambda2_sn, int n,
                       double z) {
  if (n < 2) throw std::invalid_argument("u_factor requires n >= 2");
  if (z < 0.0) throw std::invalid_argument("z must be nonnegative");
  return (c + sigma) * lambda_bar_inf * lambda2_sn * (2.0 * std::log(static_cast<double>(n)) + z);
}

// R = kappa^2 (sigma^2 + 2 c u / kappa) Sigma + 2 (u / Lbar_inf)^2 e^{-z}
inline double remainder_R(double sigma, double c, double u, double lambda_bar_inf, double z,
                          double Sigma) {
  if (lambda_bar_inf < 1.0) throw std::invalid_argument("Lbar_inf must be >= 1");
  if (sigma < 0.0 || c < 0.0 || u < 0.0 || z < 0.0 || Sigma < 0.0) {
    throw std::invalid_argument("arguments must be nonnegative");
  }
  const double ratio = u / lambda_bar_inf;
  return kKappa * kKappa * (sigma * sigma + 2.0 * c * u / kKappa) * Sigma +
         2.0 * ratio * ratio * std::exp(-z);
}

// kappa^2 (sigma^2 + 2 c u / kappa) (D + x)
inline double chi2_threshold(double sigma, double c, double u, int D, double x) {
  if (D < 1) throw std::invalid_argument("D must be >= 1");
  if (x < 0.0) throw std::invalid_argument("x must be nonnegative");
  return kKappa * kKappa * (sigma * sigma + 2.0 * c * u / kKappa) * (static_cast<double>(D) + x);
}

// min(1, 2n exp(-x^2 / (2 L2^2 (sigma^2 + c x))))
inline double chi_inf_tail(double sigma, double c, double lambda2, double x, int n) {
  if (!(x > 0.0)) throw std::invalid_argument("x must be positive");
  if (!(lambda2 > 0.0 && lambda2 <= 1.0)) throw std::invalid_argument("lambda2 must be in (0,1]");
  const double raw =
      2.0 * n * std::exp(-x * x / (2.0 * lambda2 * lambda2 * (sigma * sigma + c * x)));
  return std::min(1.0, raw);
}

// (1 + 2/delta)^D, the covering bound for the unit ball of a D-dim normed space
inline double covering_bound(int D, double delta) {
  if (D < 1) throw std::invalid_argument("D must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw DeltaOutOfRange();
  return std::pow(1.0 + 2.0 / delta, static_cast<double>(D));
}

struct PackingResult {
  long long found_size = 0;
  double bound = 0.0;
  bool ok = false;
};

// Greedily grows a delta-separated subset of the Euclidean unit ball of R^D
// from `trials` uniform random candidates.  The greedy set is a valid packing
// witness, so found_size <= (1 + 2/delta)^D must always hold.
inline PackingResult packing_check(int D, double delta, long long trials, std::uint64_t seed) {
  if (D < 1 || D > 3) throw std::invalid_argument("packing_check is desk-scale: D in {1,2,3}");
  if (!(delta > 0.0 && delta <= 1.0)) throw DeltaOutOfRange();
  if (trials < 1) throw std::invalid_argument("trials must be positive");

  rng::Engine eng = rng::Engine::for_stream(seed, 0);
  std::vector<double> kept;  // flat, D-strided
  const double d2 = delta * delta;
  double cand[3];
  for (long long t = 0; t < trials; ++t) {
    // uniform in the unit ball: normal direction scaled by U^(1/D)
    double norm2 = 0.0;
    for (int k = 0; k < D; ++k) {
      cand[k] = rng::standard_normal(eng);
      norm2 += cand[k] * cand[k];
    }
    const double r = std::pow(eng.next_open(), 1.0 / D) / std::sqrt(std::max(norm2, 1e-300));
    for (int k = 0; k < D; ++k) cand[k] *= r;

    bool separated = true;
    for (size_t j = 0; j + D <= kept.size(); j += D) {
      double dist2 = 0.0;
      for (int k = 0; k < D; ++k) {
        const double diff = cand[k] - kept[j + k];
        dist2 += diff * diff;
      }
      if (dist2 <= d2) {
        separated = false;
        break;
      }
    }
    if (separated) {
      for (int k = 0; k < D; ++k) kept.push_back(cand[k]);
    }
  }
  PackingResult res;
  res.found_size = static_cast<long long>(kept.size()) / D;
  res.bound = covering_bound(D, delta);
  res.ok = static_cast<double>(res.found_size) <= res.bound;
  return res;
}

// a x0^p e^{-phi(x0)} (1 + e p! / phi(x0)) with phi(x) = x^2 / (2 (alpha + beta x)),
// a bound for E[X^p 1{X >= x0}] under the tail P(X >= x) <= a e^{-phi(x)}.
inline double truncated_moment_bound(double a, double alpha, double beta, double x0, int p) {
  if (a <= 0.0 || alpha <= 0.0 || beta < 0.0 || x0 <= 0.0) {
    throw std::invalid_argument("requires a, alpha, x0 > 0 and beta >= 0");
  }
  if (p < 1) throw std::invalid_argument("p must be a positive integer");
  const double phi = x0 * x0 / (2.0 * (alpha + beta * x0));
  if (phi < 1.0) throw PhiTooSmall();
  double fact = 1.0;
  for (int k = 2; k <= p; ++k) fact *= k;
  return a * std::pow(x0, p) * std::exp(-phi) * (1.0 + std::exp(1.0) * fact / phi);
}

}  // namespace penselect

#endif  // PENSELECT_BOUNDS_HPP
