// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_SELECT_HPP
#define PENSELECT_SELECT_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "penselect/bounds.hpp"
#include "penselect/models.hpp"
#include "penselect/noise.hpp"

namespace penselect {

struct ModeFamilyMismatch : std::invalid_argument {
  explicit ModeFamilyMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct ConditionViolated : std::runtime_error {
  explicit ConditionViolated(const std::string& what) : std::runtime_error(what) {}
};

enum class PenaltyMode { general, histogram, piecewise, trig };

inline std::string to_string(PenaltyMode m) {
  switch (m) {
    case PenaltyMode::general: return "general";
    case PenaltyMode::histogram: return "histogram";
    case PenaltyMode::piecewise: return "piecewise";
    case PenaltyMode::trig: return "trig";
  }
  return "?";
}

// Penalty constants.  Penalties are taken at equality with the minimal
// admissible display; pen_multiplier (>= 1 to stay admissible) scales them.
struct PenaltySpec {
  PenaltyMode mode = PenaltyMode::general;
  double K = 2.0;
  double z = -1.0;  // general mode; any value < 0 means the default log(n)
  double a = 1.0;   // proposition modes
  double b = 1.0;
  int d = 0;        // piecewise mode; must match the collection degree
  double sigma = 1.0;
  double c = 0.0;
  double pen_multiplier = 1.0;

  static PenaltySpec general_mode(const NoiseSpec& noise, double K, double z = -1.0) {
    PenaltySpec s;
    s.mode = PenaltyMode::general;
    s.K = K;
    s.z = z;
    s.sigma = noise.sigma();
    s.c = noise.c();
    return s;
  }

  static PenaltySpec proposition_mode(PenaltyMode mode, const NoiseSpec& noise, double K,
                                      double a, double b, int d = 0) {
    PenaltySpec s;
    s.mode = mode;
    s.K = K;
    s.a = a;
    s.b = b;
    s.d = d;
    s.sigma = noise.sigma();
    s.c = noise.c();
    return s;
  }

  double effective_z(int n) const { return z < 0.0 ? std::log(static_cast<double>(n)) : z; }
};

namespace detail {

inline void check_mode(const PenaltySpec& spec, const ModelCollection& coll) {
  if (!(spec.K > 1.0)) throw KNotGreaterThanOne();
  if (spec.pen_multiplier < 1.0) {
    throw std::invalid_argument("pen_multiplier below 1 would break admissibility");
  }
  switch (spec.mode) {
    case PenaltyMode::general:
      return;
    case PenaltyMode::histogram:
      if (coll.family() != ModelFamily::histogram) {
        throw ModeFamilyMismatch("histogram penalty mode on a non-histogram collection");
      }
      break;
    case PenaltyMode::piecewise:
      if (coll.family() != ModelFamily::piecewise_poly) {
        throw ModeFamilyMismatch("piecewise penalty mode on a non-piecewise collection");
      }
      if (spec.d != coll.poly_degree()) {
        throw ModeFamilyMismatch("penalty degree does not match the collection degree");
      }
      break;
    case PenaltyMode::trig:
      if (coll.family() != ModelFamily::trig) {
        throw ModeFamilyMismatch("trig penalty mode on a non-trig collection");
      }
      break;
  }
  if (spec.a <= 0.0 || spec.b <= 0.0) {
    throw std::invalid_argument("proposition modes require a > 0 and b > 0");
  }
  if (!coll.proposition_condition(spec.a)) {
    throw ConditionViolated("the collection violates the dimension condition for a = " +
                            std::to_string(spec.a));
  }
}

}  // namespace detail

// The multiplier of (D_m + Delta_m) in pen(m), i.e. K kappa^2 (sigma^2 + 2 c u / kappa)
// with the u of the relevant statement substituted at its displayed value.
inline double penalty_rate(const PenaltySpec& spec, const ModelCollection& coll) {
  detail::check_mode(spec, coll);
  const double sigma = spec.sigma;
  const double c = spec.c;
  double bump = 0.0;  // the 2 c u / kappa part
  switch (spec.mode) {
    case PenaltyMode::general: {
      const double u = u_factor(sigma, c, coll.lambda_bar_inf(), coll.lambda2_sum_space(),
                                coll.n(), spec.effective_z(coll.n()));
      bump = 2.0 * c * u / kKappa;
      break;
    }
    case PenaltyMode::histogram:
      bump = 2.0 * c * (sigma + c) * (spec.b + 2.0) / (spec.a * kKappa);
      break;
    case PenaltyMode::piecewise:
      bump = 4.0 * std::sqrt(2.0) * c * (sigma + c) * (spec.d + 1.0) * (spec.b + 2.0) /
             (spec.a * kKappa);
      break;
    case PenaltyMode::trig:
      bump = 4.0 * c * (c + sigma) * (spec.b + 2.0) / spec.a;
      break;
  }
  return spec.pen_multiplier * spec.K * kKappa * kKappa * (sigma * sigma + bump);
}

inline double penalty(const PenaltySpec& spec, const ModelSpec& m, const ModelCollection& coll) {
  return penalty_rate(spec, coll) * (m.dim + m.delta);
}

// crit(m) = |Y - P_m Y|^2 + pen(m)
inline double crit(const ModelSpec& m, const VectorN& y, const PenaltySpec& spec,
                   const ModelCollection& coll) {
  const ResidualEvaluator ev(coll, y);
  return ev.residual_sq(m) + penalty(spec, m, coll);
}

struct SelectionResult {
  std::string chosen_id;
  double chosen_crit = 0.0;
  std::vector<std::string> ids;        // collection order
  std::vector<double> residual_sq;
  std::vector<double> pen;
  std::vector<double> crit_values;
  VectorN fitted;
  std::vector<std::string> ties;  // every id attaining the minimum

  nlohmann::json to_json() const {
    nlohmann::json per_model = nlohmann::json::array();
    for (size_t i = 0; i < ids.size(); ++i) {
      per_model.push_back({{"id", ids[i]},
                           {"residual_sq", residual_sq[i]},
                           {"pen", pen[i]},
                           {"crit", crit_values[i]}});
    }
    return nlohmann::json{{"chosen_id", chosen_id},
                          {"crit", chosen_crit},
                          {"ties", ties},
                          {"per_model", std::move(per_model)}};
  }
};

namespace detail {

// Deterministic argmin scan: smaller crit wins; exact crit ties break first by
// smaller dimension, then by collection order.
inline int argmin_crit(const std::vector<const ModelSpec*>& models,
                       const std::vector<double>& crits) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(crits.size()); ++i) {
    if (crits[i] < crits[best] ||
        (crits[i] == crits[best] && models[i]->dim < models[best]->dim)) {
      best = i;
    }
  }
  return best;
}

}  // namespace detail

inline SelectionResult select_model(const VectorN& y, const ModelCollection& coll,
                                    const PenaltySpec& spec) {
  const ResidualEvaluator ev(coll, y);
  const double rate = penalty_rate(spec, coll);

  SelectionResult res;
  const size_t count = coll.size();
  res.ids.reserve(count);
  res.residual_sq.reserve(count);
  res.pen.reserve(count);
  res.crit_values.reserve(count);
  std::vector<const ModelSpec*> models;
  models.reserve(count);
  for (const ModelSpec& m : coll.models()) {
    const double r = ev.residual_sq(m);
    const double p = rate * (m.dim + m.delta);
    res.ids.push_back(m.id);
    res.residual_sq.push_back(r);
    res.pen.push_back(p);
    res.crit_values.push_back(r + p);
    models.push_back(&m);
  }
  const int best = detail::argmin_crit(models, res.crit_values);
  res.chosen_id = res.ids[static_cast<size_t>(best)];
  res.chosen_crit = res.crit_values[static_cast<size_t>(best)];
  for (size_t i = 0; i < count; ++i) {
    if (res.crit_values[i] == res.chosen_crit) res.ties.push_back(res.ids[i]);
  }
  res.fitted = ev.fitted(*models[static_cast<size_t>(best)]);
  return res;
}

// E |f - fhat|^2 = |f - P_S f|^2 + var(xi_1) * D, exactly (the trace of an
// orthogonal projector is its rank).
inline double exact_risk(const VectorN& f, const Subspace& S, const NoiseSpec& noise) {
  const VectorN pf = project(S, f);
  return (f - pf).squaredNorm() + noise.variance() * S.dim();
}

inline double exact_risk(const VectorN& f, const ModelSpec& m, const ModelCollection& coll,
                         const NoiseSpec& noise) {
  const ResidualEvaluator ev(coll, f);
  return ev.residual_sq(m) + noise.variance() * m.dim;
}

struct OracleRhs {
  double value = 0.0;      // the RHS of the applicable statement, as displayed
  double alt_value = 0.0;  // the same bound with the other bracket placement
  double inf_term = 0.0;   // inf_m (exact risk + pen)
  double remainder = 0.0;
  std::string best_id;     // the model attaining the infimum
};

inline OracleRhs oracle_rhs(const ModelCollection& coll, const PenaltySpec& spec,
                            const VectorN& f, const NoiseSpec& noise) {
  const double rate = penalty_rate(spec, coll);
  const ResidualEvaluator ev(coll, f);
  OracleRhs out;
  out.inf_term = std::numeric_limits<double>::infinity();
  for (const ModelSpec& m : coll.models()) {
    const double term = ev.residual_sq(m) + noise.variance() * m.dim + rate * (m.dim + m.delta);
    if (term < out.inf_term) {
      out.inf_term = term;
      out.best_id = m.id;
    }
  }

  const double K = spec.K;
  const double sigma = spec.sigma;
  const double c = spec.c;
  const double Sigma = coll.sigma_weights();
  const double n = static_cast<double>(coll.n());
  const double CK = oracle_constant(K);
  const double b2 = spec.b + 2.0;

  switch (spec.mode) {
    case PenaltyMode::general: {
      if (c == 0.0) {
        // Corollary form: remainder sits outside the C(K) bracket.
        out.remainder = K * K * K * kKappa * kKappa * sigma * sigma * Sigma /
                        ((K - 1.0) * (K - 1.0));
        out.value = CK * out.inf_term + out.remainder;
        out.alt_value = CK * (out.inf_term + kKappa * kKappa * sigma * sigma * Sigma);
        return out;
      }
      const double z = spec.effective_z(coll.n());
      const double u = u_factor(sigma, c, coll.lambda_bar_inf(), coll.lambda2_sum_space(),
                                coll.n(), z);
      out.remainder = remainder_R(sigma, c, u, coll.lambda_bar_inf(), z, Sigma);
      break;
    }
    case PenaltyMode::histogram:
      out.remainder =
          kKappa * kKappa * (sigma * sigma + 2.0 * c * (c + sigma) * b2 / (spec.a * kKappa)) *
              Sigma +
          2.0 * (c + sigma) * (c + sigma) * b2 * b2 / (spec.a * spec.a * std::pow(n, spec.b));
      break;
    case PenaltyMode::piecewise:
      out.remainder =
          kKappa * kKappa *
              (sigma * sigma +
               4.0 * std::sqrt(2.0) * c * (sigma + c) * (spec.d + 1.0) * b2 / (spec.a * kKappa)) *
              Sigma +
          4.0 * (c + sigma) * (c + sigma) * b2 * b2 / (spec.a * spec.a * std::pow(n, spec.b));
      break;
    case PenaltyMode::trig:
      out.remainder =
          kKappa * kKappa * (sigma * sigma + 4.0 * c * (c + sigma) * b2 / spec.a) * Sigma +
          4.0 * b2 * b2 * (c + sigma) * (c + sigma) /
              (spec.a * spec.a * (2.0 * coll.trig_dbar() + 1.0) * std::pow(n, spec.b));
      break;
  }
  // Theorem / proposition form: remainder inside the C(K) bracket.
  out.value = CK * (out.inf_term + out.remainder);
  out.alt_value = CK * out.inf_term + out.remainder;
  return out;
}

}  // namespace penselect

#endif  // PENSELECT_SELECT_HPP
