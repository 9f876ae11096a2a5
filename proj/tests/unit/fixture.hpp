#pragma once

#include "polaron/pekar.hpp"
#include "polaron/radial.hpp"

namespace fixture {

inline const polaron::RadialSolution& radial() {
  static const polaron::RadialSolution r = polaron::solve_radial({});
  return r;
}

// coarse torus: dx = 20 against a profile half width near 49
inline const polaron::PekarSolution& coarse() {
  static const polaron::PekarSolution s = polaron::lift(radial(), polaron::make_grid(640, 32));
  return s;
}

}  // namespace fixture
