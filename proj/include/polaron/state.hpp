#pragma once

#include "polaron/spectral.hpp"

namespace polaron {

struct PolaronState {
  ComplexField psi;
  ComplexField phi;
  double alpha = 1;
  double t = 0;
};

}  // namespace polaron
