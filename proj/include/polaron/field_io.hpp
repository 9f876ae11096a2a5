#pragma once

#include <string>

#include "polaron/spectral.hpp"

namespace polaron {

inline constexpr const char* kFourierConvention =
    "forward F[k] = sum_x f[x] exp(-i k.x), unnormalized; inverse f[x] = N^-3 sum_k F[k] exp(+i k.x); "
    "k = 2 pi m / L, m in [-N/2, N/2); box [-L/2, L/2)^3, x_i = -L/2 + i L/N";

// writes <base>.bin (little-endian float64 re/im pairs, row-major x,y,z) and <base>.json
void write_snapshot(const ComplexField& f, const std::string& base);
ComplexField read_snapshot(const std::string& base);

}  // namespace polaron
