#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <new>
#include <vector>

#include <fftw3.h>

namespace polaron {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { fftw_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const { return true; }
};

using CVec = std::vector<cplx, FftwAllocator<cplx>>;
using RVec = std::vector<double, FftwAllocator<double>>;

// number of FFTW threads, read once from POLARON_THREADS
int fft_threads();

// Periodic cubic box [-L/2, L/2)^3 with N points per axis.
// Forward transform: F[k] = sum_x f[x] exp(-i k.x), unnormalized.
// Backward transform: f[x] = N^-3 sum_k F[k] exp(+i k.x).
class Grid {
 public:
  static std::shared_ptr<const Grid> make(double L, int N);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  double L() const { return L_; }
  int N() const { return N_; }
  double dx() const { return dx_; }
  double dv() const { return dx_ * dx_ * dx_; }
  std::size_t size() const { return size_; }
  // r2c half spectrum: N x N x (N/2+1)
  int nh() const { return N_ / 2 + 1; }
  std::size_t half_size() const { return std::size_t(N_) * N_ * nh(); }

  std::size_t index(int i, int j, int k) const {
    return (std::size_t(i) * N_ + j) * N_ + k;
  }
  double x(int i) const { return -0.5 * L_ + i * dx_; }
  // wavenumber of mode index i, in [-N/2, N/2) * 2pi/L
  double k(int i) const { return kv_[i]; }
  // wavenumber used for odd derivatives (Nyquist mode zeroed)
  double kd(int i) const { return kdv_[i]; }
  int mirror(int i) const { return i == 0 ? 0 : N_ - i; }
  double k2(int i, int j, int l) const { return kv_[i] * kv_[i] + kv_[j] * kv_[j] + kv_[l] * kv_[l]; }
  // true for the k = 0 mode
  bool is_zero_mode(int i, int j, int l) const { return i == 0 && j == 0 && l == 0; }
  double fourier_weight() const { return dv() / double(size_); }

  void forward(cplx* data) const;
  void backward(cplx* data) const;
  void forward_r2c(const double* in, cplx* out) const;
  // destroys `in`
  void backward_c2r(cplx* in, double* out) const;

  bool same_as(const Grid& o) const { return L_ == o.L_ && N_ == o.N_; }

 private:
  Grid(double L, int N);
  double L_;
  int N_;
  double dx_;
  std::size_t size_;
  std::vector<double> kv_, kdv_;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr, r2c_ = nullptr, c2r_ = nullptr;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(double L, int N) { return Grid::make(L, N); }

}  // namespace polaron
