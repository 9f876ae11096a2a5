#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "polaron/grid.hpp"

namespace polaron {

using RealOperator = std::function<RVec(const RVec&)>;

struct LobpcgOptions {
  // number of wanted eigenpairs; the block carries `extra` more
  int want = 4;
  int extra = 2;
  // absolute residual ||A x - lambda x|| for unit x
  double tol = 1e-8;
  int max_iter = 1000;
  std::uint64_t seed = 12345;
};

struct LobpcgResult {
  std::vector<double> values;
  std::vector<RVec> vectors;
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
};

// Lowest eigenpairs of a symmetric operator on the orthogonal complement of
// `constraints` (assumed orthonormal in `dot`). The initial block must have
// want + extra entries. Throws ConvergenceError when max_iter is exhausted.
LobpcgResult lobpcg(const Grid& g, const RealOperator& A, const RealOperator& precond,
                    const std::vector<RVec>& constraints, std::vector<RVec> X0, const LobpcgOptions& opt);

}  // namespace polaron
