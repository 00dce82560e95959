#include "sefe/expfam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sefe {

bool admits(Family family, double x) {
  if (family == Family::Bernoulli) return x == 0.0 || x == 1.0;
  return x >= 0.0 && std::isfinite(x) && std::floor(x) == x;
}

double softplus(double eta) {
  if (eta > 0.0) return eta + std::log1p(std::exp(-eta));
  return std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

namespace {

void check_support(Family family, double x) {
  if (!admits(family, x)) {
    throw std::invalid_argument("value " + std::to_string(x) + " outside the support of " +
                                std::string(to_string(family)));
  }
}

}  // namespace

double log_prob(Family family, double x, double eta) {
  check_support(family, x);
  if (family == Family::Bernoulli) {
    // log sigma(eta) = -softplus(-eta); log(1 - sigma(eta)) = -softplus(eta)
    return x == 1.0 ? -softplus(-eta) : -softplus(eta);
  }
  return x * eta - std::exp(eta) - std::lgamma(x + 1.0);
}

double dlogp_deta(Family family, double x, double eta) {
  check_support(family, x);
  if (family == Family::Bernoulli) return x - sigmoid(eta);
  return x - std::exp(eta);
}

}  // namespace sefe
