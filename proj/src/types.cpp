#include "sefe/types.hpp"

#include <stdexcept>

namespace sefe {

std::string_view to_string(Modality m) {
  return m == Modality::Text ? "text" : "basket";
}

std::string_view to_string(Family f) {
  return f == Family::Bernoulli ? "bernoulli" : "poisson";
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Global: return "global";
    case Mode::Separate: return "separate";
    case Mode::Sefe: return "sefe";
    case Mode::Hierarchical: return "hierarchical";
    case Mode::AmortizedFF: return "amortized_ff";
    case Mode::AmortizedResnet: return "amortized_resnet";
  }
  return "unknown";
}

Modality parse_modality(std::string_view s) {
  if (s == "text") return Modality::Text;
  if (s == "basket") return Modality::Basket;
  throw std::invalid_argument("unknown modality '" + std::string(s) + "'");
}

Family parse_family(std::string_view s) {
  if (s == "bernoulli") return Family::Bernoulli;
  if (s == "poisson") return Family::Poisson;
  throw std::invalid_argument("unknown family '" + std::string(s) + "'");
}

Mode parse_mode(std::string_view s) {
  for (Mode m : {Mode::Global, Mode::Separate, Mode::Sefe, Mode::Hierarchical,
                 Mode::AmortizedFF, Mode::AmortizedResnet}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

}  // namespace sefe
