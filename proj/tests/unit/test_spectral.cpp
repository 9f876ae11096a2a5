#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "polaron/errors.hpp"
#include "polaron/field_io.hpp"
#include "polaron/spectral.hpp"

using namespace polaron;

namespace {

// normalized Gaussian of width s centred at c, times exp(i k0 x_1)
ComplexField gaussian(const GridPtr& g, double s, Vec3 c = {0, 0, 0}, double k0 = 0) {
  const int N = g->N();
  CVec v(g->size());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        double dx = g->x(i) - c[0], dy = g->x(j) - c[1], dz = g->x(l) - c[2];
        v[g->index(i, j, l)] = std::exp(-(dx * dx + dy * dy + dz * dz) / (4 * s * s)) * std::polar(1.0, k0 * g->x(i));
      }
  ComplexField f(g, std::move(v), Role::electron);
  return scaled(f, 1.0 / norm(f));
}

ComplexField plane_cos(const GridPtr& g, int m, int axis, Role role) {
  const int N = g->N();
  CVec v(g->size());
  const double k = 2 * M_PI * m / g->L();
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        int idx[3] = {i, j, l};
        v[g->index(i, j, l)] = std::cos(k * g->x(idx[axis]));
      }
  return ComplexField(g, std::move(v), role);
}

double max_diff(const ComplexField& a, const ComplexField& b) {
  double d = 0;
  for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, std::abs(a[n] - b[n]));
  return d;
}

}  // namespace

TEST_SUITE("spectral_fields") {
  TEST_CASE("grid rejects odd, tiny or non-positive boxes") {
    CHECK_THROWS_AS(make_grid(10, 15), GridError);
    CHECK_THROWS_AS(make_grid(10, 4), GridError);
    CHECK_THROWS_AS(make_grid(-1, 16), GridError);
  }

  TEST_CASE("forward then backward transform is the identity") {
    auto g = make_grid(10, 16);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    CVec a(g->size());
    for (auto& x : a) x = cplx(nd(rng), nd(rng));
    CVec b = a;
    g->forward(b.data());
    g->backward(b.data());
    double d = 0;
    for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, std::abs(a[n] - b[n]));
    CHECK(d < 1e-13);
  }

  TEST_CASE("first derivative and fractional Laplacian are exact on plane waves") {
    auto g = make_grid(10, 16);
    const double k = 2 * M_PI * 3 / 10.0;
    ComplexField c = plane_cos(g, 3, 1, Role::auxiliary);
    ComplexField d = derivative(c, 1);
    const int N = g->N();
    double err = 0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l)
          err = std::max(err, std::abs(d[g->index(i, j, l)] + k * std::sin(k * g->x(j))));
    CHECK(err < 1e-12);
    CHECK(max_diff(frac_laplacian_apply(c, -1.0), scaled(c, 1.0 / (k * k))) < 1e-13);
    CHECK(max_diff(frac_laplacian_apply(c, -0.5), scaled(c, 1.0 / k)) < 1e-13);
    CHECK(max_diff(frac_laplacian_apply(c, 0.5), scaled(c, k)) < 1e-12);
    CHECK(max_diff(frac_laplacian_apply(c, 1.0), scaled(c, k * k)) < 1e-12);
  }

  TEST_CASE("negative powers drop the zero mode") {
    auto g = make_grid(10, 16);
    CVec one(g->size(), cplx(1.0, 0.0));
    ComplexField f(g, one, Role::auxiliary);
    CHECK(norm(frac_laplacian_apply(f, -1.0)) < 1e-14);
    CHECK(norm(frac_laplacian_apply(f, -0.5)) < 1e-14);
  }

  TEST_CASE("real and complex fractional Laplacians agree") {
    auto g = make_grid(12, 16);
    ComplexField f = gaussian(g, 1.0);
    RVec fr = f.real_part();
    RVec a = frac_laplacian_real(*g, fr, -0.5);
    ComplexField b = frac_laplacian_apply(f.with_role(Role::auxiliary), -0.5);
    double d = 0;
    for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, std::abs(a[n] - b[n].real()));
    CHECK(d < 1e-14);
  }

  TEST_CASE("G at phi = -sigma_psi reduces to the Pekar energy") {
    auto g = make_grid(30, 24);
    ComplexField psi = gaussian(g, 2.0);
    ComplexField phi = scaled(sigma_of(psi), -1.0).with_role(Role::phonon);
    EnergyBreakdown G = energy_G(psi, phi);
    const double E = energy_E(psi);
    CHECK(std::abs(G.total - E) < 1e-15);
    CHECK(std::abs(G.field - coulomb_energy(psi)) < 1e-15);
    CHECK(std::abs(G.interaction + 2 * coulomb_energy(psi)) < 1e-15);
  }

  TEST_CASE("Gaussian kinetic energy matches 3/(4 s^2)") {
    auto g = make_grid(30, 32);
    ComplexField psi = gaussian(g, 2.0);
    CHECK(kinetic_energy(psi) == doctest::Approx(3.0 / 16.0).epsilon(1e-10));
  }

  TEST_CASE("roles and grids are enforced") {
    auto g = make_grid(10, 16), h = make_grid(10, 8);
    ComplexField psi = gaussian(g, 1.0);
    CHECK_THROWS_AS(sigma_of(psi.with_role(Role::phonon)), RoleError);
    CHECK_THROWS_AS(energy_G(psi, psi), RoleError);
    CHECK_THROWS_AS(inner(psi, gaussian(h, 1.0)), GridError);
    CHECK_THROWS_AS(energy_E(scaled(psi, 1.1)), NormalizationError);
  }

  TEST_CASE("translation moves the centre, momentum sets the velocity") {
    auto g = make_grid(40, 32);
    const double k0 = 2 * M_PI * 2 / 40.0;
    ComplexField psi = gaussian(g, 2.0, {0, 0, 0}, k0);
    ComplexField moved = translate(psi, {1.5, -2.0, 0.5});
    ElectronObservables o = electron_observables(moved);
    CHECK(o.X[0] == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(o.X[1] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(o.X[2] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(o.V[0] == doctest::Approx(2 * k0).epsilon(1e-9));
    CHECK(std::abs(o.V[1]) < 1e-12);
    CHECK(o.norm == doctest::Approx(1.0).epsilon(1e-13));
  }

  TEST_CASE("snapshots round-trip bit for bit") {
    auto g = make_grid(10, 8);
    ComplexField f = gaussian(g, 1.0, {0.3, 0, 0}, 2 * M_PI / 10);
    const std::string base = (std::filesystem::temp_directory_path() / "polaron_snapshot_test").string();
    write_snapshot(f, base);
    ComplexField r = read_snapshot(base);
    CHECK(r.role() == Role::electron);
    CHECK(r.g().L() == 10);
    CHECK(r.g().N() == 8);
    bool same = true;
    for (std::size_t n = 0; n < f.size(); ++n) same = same && f[n] == r[n];
    CHECK(same);
  }
}
