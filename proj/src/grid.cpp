#include "polaron/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "polaron/errors.hpp"

namespace polaron {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int read_threads() {
  const char* s = std::getenv("POLARON_THREADS");
  if (!s || !*s) return 1;
  char* end = nullptr;
  long n = std::strtol(s, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return int(n);
}

}  // namespace

int fft_threads() {
  static const int n = [] {
    int t = read_threads();
    if (t > 1) {
      fftw_init_threads();
    }
    return t;
  }();
  return n;
}

GridPtr Grid::make(double L, int N) {
  if (!(L > 0.0) || !std::isfinite(L)) throw GridError("box length must be positive, got " + std::to_string(L));
  if (N < 8) throw GridError("points per axis must be at least 8, got " + std::to_string(N));
  if (N % 2 != 0) throw GridError("points per axis must be even, got " + std::to_string(N));
  return GridPtr(new Grid(L, N));
}

Grid::Grid(double L, int N) : L_(L), N_(N), dx_(L / N), size_(std::size_t(N) * N * N) {
  kv_.resize(N);
  kdv_.resize(N);
  const double dk = 2.0 * M_PI / L;
  for (int i = 0; i < N; ++i) {
    int m = i < N / 2 ? i : i - N;
    kv_[i] = dk * m;
    kdv_[i] = (i == N / 2) ? 0.0 : dk * m;
  }

  int threads = fft_threads();
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (threads > 1) fftw_plan_with_nthreads(threads);
  CVec a(size_);
  CVec h(half_size());
  RVec r(size_);
  auto* ca = reinterpret_cast<fftw_complex*>(a.data());
  auto* ch = reinterpret_cast<fftw_complex*>(h.data());
  fwd_ = fftw_plan_dft_3d(N, N, N, ca, ca, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_3d(N, N, N, ca, ca, FFTW_BACKWARD, FFTW_ESTIMATE);
  r2c_ = fftw_plan_dft_r2c_3d(N, N, N, r.data(), ch, FFTW_ESTIMATE);
  c2r_ = fftw_plan_dft_c2r_3d(N, N, N, ch, r.data(), FFTW_ESTIMATE);
  if (!fwd_ || !bwd_ || !r2c_ || !c2r_) throw GridError("FFT planning failed");
}

Grid::~Grid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(bwd_);
  fftw_destroy_plan(r2c_);
  fftw_destroy_plan(c2r_);
}

void Grid::forward(cplx* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(fwd_, p, p);
}

void Grid::backward(cplx* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(bwd_, p, p);
  const double s = 1.0 / double(size_);
  for (std::size_t n = 0; n < size_; ++n) data[n] *= s;
}

void Grid::forward_r2c(const double* in, cplx* out) const {
  fftw_execute_dft_r2c(r2c_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void Grid::backward_c2r(cplx* in, double* out) const {
  fftw_execute_dft_c2r(c2r_, reinterpret_cast<fftw_complex*>(in), out);
  const double s = 1.0 / double(size_);
  for (std::size_t n = 0; n < size_; ++n) out[n] *= s;
}

}  // namespace polaron
