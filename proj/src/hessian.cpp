#include "polaron/hessian.hpp"

#include <cmath>
#include <random>

#include "polaron/eigensolver.hpp"
#include "polaron/errors.hpp"

namespace polaron {

namespace {

void project_out(const Grid& g, const RVec& psi, RVec& f) {
  double a = dot(g, psi, f);
  for (std::size_t n = 0; n < f.size(); ++n) f[n] -= a * psi[n];
}

RVec shifted_inverse(const Grid& g, const RVec& f, double s) {
  const int N = g.N(), nh = g.nh();
  CVec h(g.half_size());
  g.forward_r2c(f.data(), h.data());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      cplx* row = h.data() + (std::size_t(i) * N + j) * nh;
      for (int l = 0; l < nh; ++l) row[l] /= (g.k2(i, j, l) + s);
    }
  RVec out(g.size());
  g.backward_c2r(h.data(), out.data());
  return out;
}

}  // namespace

std::vector<RVec> smooth_random_fields(const PekarSolution& sol, int m, std::uint64_t seed) {
  const Grid& g = *sol.grid;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const double w = std::sqrt(4.0 * sol.grid_scalars.q);
  std::vector<RVec> out;
  const int N = g.N();
  for (int b = 0; b < m; ++b) {
    double c[10];
    for (double& v : c) v = nd(rng);
    RVec f(g.size());
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) {
          double x = g.x(i) / w, y = g.x(j) / w, z = g.x(l) / w;
          double p = c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * x + c[5] * y * y + c[6] * z * z +
                     c[7] * x * y + c[8] * y * z + c[9] * z * x;
          std::size_t n = g.index(i, j, l);
          f[n] = p * sol.psi_r[n];
        }
    project_out(g, sol.psi_r, f);
    out.push_back(std::move(f));
  }
  return out;
}

RVec apply_hessian(const PekarSolution& sol, const RVec& V, const RVec& f) {
  const Grid& g = *sol.grid;
  RVec q = f;
  project_out(g, sol.psi_r, q);
  RVec out = apply_HP_real(sol, q, V);
  RVec x = apply_XP_real(g, sol.psi_r, q);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] -= 4.0 * x[n];
  project_out(g, sol.psi_r, out);
  return out;
}

HessianSpectrum hessian_spectrum(const PekarSolution& sol, int count, const HessianOptions& opt) {
  if (count < 4) throw Error("hessian_spectrum needs count >= 4");
  const Grid& g = *sol.grid;
  const RVec V = pekar_potential(sol);
  const double shift = std::abs(sol.mu_P);
  RealOperator K = [&](const RVec& f) { return apply_hessian(sol, V, f); };
  RealOperator T = [&](const RVec& r) { return shifted_inverse(g, r, shift); };
  LobpcgOptions lo;
  lo.want = count;
  lo.extra = opt.extra;
  lo.tol = opt.tol;
  lo.max_iter = opt.max_iter;
  lo.seed = opt.seed;
  LobpcgResult r = lobpcg(g, K, T, {sol.psi_r}, smooth_random_fields(sol, count + opt.extra, opt.seed), lo);

  HessianSpectrum hs;
  hs.values = r.values;
  hs.residuals = r.residuals;
  hs.iterations = r.iterations;
  RVec d1 = derivative_real(g, sol.psi_r, 0);
  RVec Kd = K(d1);
  double dd = dot(g, d1, d1);
  hs.rayleigh_d1 = dot(g, d1, Kd) / dd;
  hs.kernel_residual_d1 = std::sqrt(dot(g, Kd, Kd) / dd);
  return hs;
}

}  // namespace polaron
