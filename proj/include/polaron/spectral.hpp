#pragma once

#include <string>

#include "polaron/grid.hpp"

namespace polaron {

enum class Role { electron, phonon, auxiliary };

std::string role_name(Role r);
Role role_from_name(const std::string& s);

class ComplexField {
 public:
  ComplexField(GridPtr grid, Role role);
  ComplexField(GridPtr grid, CVec values, Role role);
  static ComplexField from_real(GridPtr grid, const RVec& values, Role role);

  const GridPtr& grid() const { return grid_; }
  const Grid& g() const { return *grid_; }
  Role role() const { return role_; }
  const CVec& values() const { return values_; }
  const cplx& operator[](std::size_t n) const { return values_[n]; }
  std::size_t size() const { return values_.size(); }

  ComplexField with_role(Role r) const { return ComplexField(grid_, values_, r); }
  RVec real_part() const;
  RVec imag_part() const;

 private:
  GridPtr grid_;
  CVec values_;
  Role role_;
};

struct EnergyBreakdown {
  double total = 0, kinetic = 0, interaction = 0, field = 0;
};

struct ElectronObservables {
  Vec3 X{}, V{};
  double kinetic = 0;
  double norm = 0;
  double boundary_mass = 0;
  bool boundary_warning = false;
};

inline constexpr double kNormTolerance = 1e-9;
inline constexpr double kBoundaryMassThreshold = 1e-8;

void require_same_grid(const ComplexField& a, const ComplexField& b);

// grid quadrature inner product <f, g> = dv sum conj(f) g
cplx inner(const ComplexField& f, const ComplexField& g);
double norm_sq(const ComplexField& f);
double norm(const ComplexField& f);
double dot(const Grid& g, const RVec& a, const RVec& b);

ComplexField scaled(const ComplexField& f, cplx a);
ComplexField combine(cplx a, const ComplexField& f, cplx b, const ComplexField& h, Role role);
ComplexField conjugate(const ComplexField& f);

// Fourier multiplier |k|^(2p), p in {-1, -1/2, 1/2, 1}; zero mode dropped for p < 0
ComplexField frac_laplacian_apply(const ComplexField& f, double p);
// real-field version through the half spectrum
RVec frac_laplacian_real(const Grid& g, const RVec& f, double p);

ComplexField sigma_of(const ComplexField& psi);
ComplexField potential_of(const ComplexField& phi);
ComplexField apply_h(const ComplexField& V, const ComplexField& psi);

EnergyBreakdown energy_G(const ComplexField& psi, const ComplexField& phi, double norm_tol = kNormTolerance);
double energy_E(const ComplexField& psi, double norm_tol = kNormTolerance);
// <rho, (-Delta)^-1 rho> with rho = |psi|^2
double coulomb_energy(const ComplexField& psi);
double kinetic_energy(const ComplexField& psi);

ElectronObservables electron_observables(const ComplexField& psi);

ComplexField apply_XP(const ComplexField& psiP, const ComplexField& f);
RVec apply_XP_real(const Grid& g, const RVec& psiP, const RVec& f);

ComplexField translate(const ComplexField& f, const Vec3& y);
// spectral first derivative, Nyquist mode zeroed
ComplexField derivative(const ComplexField& f, int axis);
RVec derivative_real(const Grid& g, const RVec& f, int axis);

enum class Coordinate { sawtooth, smooth };
// centered coordinate along an axis; the smooth variant is tapered to zero
// over the outer `band` fraction of each half box
std::vector<double> coordinate_axis(const Grid& g, Coordinate kind, double band = 0.1);
ComplexField times_coordinate(const ComplexField& f, int axis, Coordinate kind = Coordinate::sawtooth);

}  // namespace polaron
