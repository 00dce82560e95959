#pragma once

#include "sefe/types.hpp"

namespace sefe {

/// Conditional exponential family with identity link and identity sufficient statistic.
struct FamilySpec {
  Family family = Family::Bernoulli;
};

/// Bernoulli admits {0, 1}; Poisson admits nonnegative integers.
bool admits(Family family, double x);

/// log(1 + e^eta) without overflow.
double softplus(double eta);
double sigmoid(double eta);

/// Bernoulli: x*eta - log(1 + e^eta). Poisson: x*eta - e^eta - log(x!).
/// Throws std::invalid_argument when x is outside the family's support.
double log_prob(Family family, double x, double eta);

/// d log_prob / d eta. Bernoulli: x - sigmoid(eta). Poisson: x - e^eta.
double dlogp_deta(Family family, double x, double eta);

inline double log_prob(FamilySpec spec, double x, double eta) {
  return log_prob(spec.family, x, eta);
}
inline double dlogp_deta(FamilySpec spec, double x, double eta) {
  return dlogp_deta(spec.family, x, eta);
}

}  // namespace sefe
