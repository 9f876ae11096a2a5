#pragma once

#include <cstdint>
#include <vector>

#include "polaron/pekar.hpp"

namespace polaron {

struct HessianOptions {
  int extra = 2;
  double tol = 1e-9;
  int max_iter = 3000;
  std::uint64_t seed = 20240607;
};

struct HessianSpectrum {
  std::vector<double> values;
  std::vector<double> residuals;
  int iterations = 0;
  // <d1 psi_P, K d1 psi_P> / <d1 psi_P, d1 psi_P>
  double rayleigh_d1 = 0;
  // ||K d1 psi_P|| / ||d1 psi_P||
  double kernel_residual_d1 = 0;
};

// real fields p(x) psi_P(x) with p a random quadratic polynomial, orthogonal to psi_P
std::vector<RVec> smooth_random_fields(const PekarSolution& sol, int m, std::uint64_t seed);

// K f = Q (H_P - 4 X_P) Q f on real fields, Q = 1 - |psi_P><psi_P|
RVec apply_hessian(const PekarSolution& sol, const RVec& V, const RVec& f);

HessianSpectrum hessian_spectrum(const PekarSolution& sol, int count, const HessianOptions& opt = {});

}  // namespace polaron
