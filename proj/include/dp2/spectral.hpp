#pragma once

// Periodic grid and Fourier machinery on top of FFTW: spectral derivatives,
// 2/3-rule truncation, trigonometric interpolation and the inverse Helmholtz
// operator (1 - d_xx)^{-1}, i.e. convolution with the periodized Green
// function G(x) = e^{-|x|}/2, realised by the multiplier 1/(1 + w_k^2).

#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "dp2/core.hpp"

namespace dp2 {

using Field = std::vector<double>;
using Spectrum = std::vector<std::complex<double>>;

/// Uniform periodic grid x_j = j L / n, n a power of two >= 16.
class Grid1D {
 public:
  Grid1D(std::size_t n, double length) : n_(n), length_(length) {
    detail::require(n >= 16 && (n & (n - 1)) == 0, Errc::InvalidArgument, "n",
                    "n must be a power of two >= 16");
    detail::require(std::isfinite(length) && length > 0.0, Errc::InvalidArgument, "length",
                    "length must be positive");
  }

  std::size_t n() const noexcept { return n_; }
  double length() const noexcept { return length_; }
  double dx() const noexcept { return length_ / static_cast<double>(n_); }
  double node(std::size_t j) const noexcept { return static_cast<double>(j) * dx(); }

  Field nodes() const {
    Field x(n_);
    for (std::size_t j = 0; j < n_; ++j) x[j] = node(j);
    return x;
  }

  /// Angular wavenumber 2 pi k / L of rfft index k.
  double wavenumber(std::size_t k) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(k) / length_;
  }

  template <class F>
  Field sample(F&& f) const {
    Field out(n_);
    for (std::size_t j = 0; j < n_; ++j) out[j] = f(node(j));
    return out;
  }

 private:
  std::size_t n_;
  double length_;
};

namespace detail {

// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

/// Real-to-complex transforms for one grid. Owns FFTW plans and scratch
/// buffers, so an instance must not be shared between threads.
class Spectral {
 public:
  explicit Spectral(const Grid1D& grid) : grid_(grid), n_(grid.n()), nc_(grid.n() / 2 + 1) {
    real_ = fftw_alloc_real(n_);
    cplx_ = fftw_alloc_complex(nc_);
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_, cplx_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), cplx_, real_, FFTW_ESTIMATE);
  }

  ~Spectral() {
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      if (forward_) fftw_destroy_plan(forward_);
      if (backward_) fftw_destroy_plan(backward_);
    }
    fftw_free(real_);
    fftw_free(cplx_);
  }

  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  const Grid1D& grid() const noexcept { return grid_; }

  /// Unnormalized forward transform, n/2 + 1 coefficients.
  Spectrum forward(std::span<const double> f) const {
    detail::require(f.size() == n_, Errc::InvalidArgument, "field", "field length != grid size");
    std::copy(f.begin(), f.end(), real_);
    fftw_execute(forward_);
    Spectrum out(nc_);
    for (std::size_t k = 0; k < nc_; ++k) out[k] = {cplx_[k][0], cplx_[k][1]};
    return out;
  }

  /// Inverse of forward(), including the 1/n normalization.
  Field inverse(std::span<const std::complex<double>> c) const {
    detail::require(c.size() == nc_, Errc::InvalidArgument, "spectrum", "spectrum size mismatch");
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < nc_; ++k) {
      cplx_[k][0] = c[k].real() * scale;
      cplx_[k][1] = c[k].imag() * scale;
    }
    // Nyquist and mean modes of a real signal are real.
    cplx_[0][1] = 0.0;
    cplx_[nc_ - 1][1] = 0.0;
    fftw_execute(backward_);
    return Field(real_, real_ + n_);
  }

  /// Highest index kept by the 2/3 rule: aliasing of quadratic products of
  /// retained modes lands above it.
  std::size_t dealias_cutoff() const noexcept { return (n_ - 1) / 3; }

  void truncate(Spectrum& c) const {
    for (std::size_t k = dealias_cutoff() + 1; k < c.size(); ++k) c[k] = 0.0;
  }

  /// Multiply by (i w_k)^order; the Nyquist mode is dropped for odd orders.
  Spectrum differentiate(Spectrum c, int order = 1) const {
    for (std::size_t k = 0; k < c.size(); ++k) {
      const std::complex<double> ik(0.0, grid_.wavenumber(k));
      std::complex<double> m(1.0, 0.0);
      for (int i = 0; i < order; ++i) m *= ik;
      c[k] *= m;
    }
    if (order % 2 != 0) c.back() = 0.0;
    return c;
  }

  Field derivative(std::span<const double> f, int order = 1) const {
    return inverse(differentiate(forward(f), order));
  }

  Spectrum helmholtz_inverse(Spectrum c) const {
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double w = grid_.wavenumber(k);
      c[k] /= 1.0 + w * w;
    }
    return c;
  }

  Field helmholtz_inverse(std::span<const double> f) const {
    return inverse(helmholtz_inverse(forward(f)));
  }

  /// Trigonometric interpolant of the nodal field evaluated at an arbitrary x.
  double interpolate(const Spectrum& c, double x) const {
    double sum = c[0].real();
    for (std::size_t k = 1; k < nc_; ++k) {
      const double phase = grid_.wavenumber(k) * x;
      const double w = (k == nc_ - 1) ? 1.0 : 2.0;
      sum += w * (c[k].real() * std::cos(phase) - c[k].imag() * std::sin(phase));
    }
    return sum / static_cast<double>(n_);
  }

 private:
  Grid1D grid_;
  std::size_t n_;
  std::size_t nc_;
  double* real_ = nullptr;
  fftw_complex* cplx_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// G * w on the periodic grid.
inline Field helmholtz_inverse(const Grid1D& grid, std::span<const double> w) {
  return Spectral(grid).helmholtz_inverse(w);
}

}  // namespace dp2
