#include <doctest.h>

#include <cmath>
#include <random>

#include "fixture.hpp"
#include "polaron/eigensolver.hpp"
#include "polaron/errors.hpp"
#include "polaron/hessian.hpp"
#include "polaron/spectral.hpp"

using namespace polaron;

namespace {

std::vector<RVec> random_block(const Grid& g, int m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<RVec> X(m, RVec(g.size()));
  for (auto& x : X)
    for (auto& v : x) v = nd(rng);
  return X;
}

}  // namespace

TEST_SUITE("pekar_ground_state") {
  TEST_CASE("block eigensolver reproduces the torus Laplacian spectrum") {
    auto g = make_grid(2 * M_PI, 8);
    RealOperator A = [&](const RVec& f) { return frac_laplacian_real(*g, f, 1.0); };
    RealOperator I = [](const RVec& f) { return f; };
    RVec c(g->size(), 1.0 / std::sqrt(g->dv() * double(g->size())));
    LobpcgOptions o;
    o.want = 6;
    o.extra = 2;
    o.tol = 1e-10;
    LobpcgResult r = lobpcg(*g, A, I, {c}, random_block(*g, 8, 3), o);
    REQUIRE(r.converged);
    for (int i = 0; i < 6; ++i) CHECK(r.values[i] == doctest::Approx(1.0).epsilon(1e-10));
    o.want = 1;
    r = lobpcg(*g, A, I, {}, random_block(*g, 3, 5), o);
    CHECK(std::abs(r.values[0]) < 1e-10);
  }

  TEST_CASE("block eigensolver reports exhaustion") {
    auto g = make_grid(2 * M_PI, 8);
    RealOperator A = [&](const RVec& f) { return frac_laplacian_real(*g, f, 1.0); };
    RealOperator I = [](const RVec& f) { return f; };
    LobpcgOptions o;
    o.want = 4;
    o.extra = 2;
    o.tol = 1e-14;
    o.max_iter = 1;
    CHECK_THROWS_AS(lobpcg(*g, A, I, {}, random_block(*g, 6, 4), o), ConvergenceError);
  }

  TEST_CASE("Hessian kernel and first positive eigenvalue on the coarse torus") {
    const PekarSolution& s = fixture::coarse();
    HessianSpectrum h = hessian_spectrum(s, 4);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(h.values[i]) < 1e-6);
    CHECK(h.values[3] == doctest::Approx(5.753639e-4).epsilon(1e-4));
    CHECK(std::abs(h.rayleigh_d1) < 1e-6);
    CHECK(h.kernel_residual_d1 < 1e-4);
  }

  TEST_CASE("smooth random fields are orthogonal to psi_P") {
    const PekarSolution& s = fixture::coarse();
    auto F = smooth_random_fields(s, 3, 11);
    REQUIRE(F.size() == 3);
    for (const RVec& f : F) CHECK(std::abs(dot(*s.grid, f, s.psi_r)) < 1e-12 * std::sqrt(dot(*s.grid, f, f)));
  }
}
