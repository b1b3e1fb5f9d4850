#pragma once

#include <cmath>
#include <stdexcept>

namespace fkflow {

// Edge-weight conventions: opening probability p in [0,1), odds
// pi = p/(1-p), conductance c with p = 1 - e^{-c}.  Internally everything
// is stored in c; pi is the quantity that erodes exponentially.
enum class WeightConvention { p, pi, c };

inline double pi_from_p(double p) {
  if (p < 0.0 || p >= 1.0) throw std::domain_error("p must lie in [0,1)");
  return p / (1.0 - p);
}

inline double p_from_pi(double pi) {
  if (pi < 0.0) throw std::domain_error("pi must be nonnegative");
  return pi / (1.0 + pi);
}

inline double pi_from_c(double c) {
  if (c < 0.0) throw std::domain_error("c must be nonnegative");
  return std::expm1(c);
}

inline double c_from_pi(double pi) {
  if (pi < 0.0) throw std::domain_error("pi must be nonnegative");
  return std::log1p(pi);
}

inline double c_from_p(double p) {
  if (p < 0.0 || p >= 1.0) throw std::domain_error("p must lie in [0,1)");
  return -std::log1p(-p);
}

inline double p_from_c(double c) {
  if (c < 0.0) throw std::domain_error("c must be nonnegative");
  return -std::expm1(-c);
}

inline double convert_weight(double value, WeightConvention from, WeightConvention to) {
  if (from == to) {
    switch (from) {
      case WeightConvention::p:
        if (value < 0.0 || value >= 1.0) throw std::domain_error("p must lie in [0,1)");
        break;
      default:
        if (value < 0.0) throw std::domain_error("weight must be nonnegative");
    }
    return value;
  }
  double pi;
  switch (from) {
    case WeightConvention::p: pi = pi_from_p(value); break;
    case WeightConvention::pi:
      if (value < 0.0) throw std::domain_error("pi must be nonnegative");
      pi = value;
      break;
    default: pi = pi_from_c(value); break;
  }
  switch (to) {
    case WeightConvention::p: return p_from_pi(pi);
    case WeightConvention::pi: return pi;
    default: return c_from_pi(pi);
  }
}

}  // namespace fkflow
