#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

#include "vnsim/field.hpp"

namespace vnsim {

// ---------------------------------------------------------------------------
// FFT over the periodic horizontal axes for a stack of `rows` vertical
// layers stored row-major (k slow, i fast). Wraps FFTW many-plans; forward
// output is rows x n_modes complex, mode-major within a row.
// ---------------------------------------------------------------------------
class HorizontalFFT {
 public:
  HorizontalFFT(const Grid& g, int rows) : g_(g), rows_(rows) {
    const int dim = g.dim();
    nmx_ = g.nx / 2 + 1;
    nmy_ = dim == 3 ? g.ny : 1;
    layer_real_ = static_cast<long>(g.nx) * (dim == 3 ? g.ny : 1);
    layer_cplx_ = static_cast<long>(nmx_) * nmy_;
    rbuf_ = fftw_alloc_real(layer_real_ * rows_);
    cbuf_ = fftw_alloc_complex(layer_cplx_ * rows_);
    int n2[2] = {g.ny, g.nx};
    int n1[1] = {g.nx};
    const int rank = dim == 3 ? 2 : 1;
    int* n = dim == 3 ? n2 : n1;
    fwd_ = fftw_plan_many_dft_r2c(rank, n, rows_, rbuf_, nullptr, 1, static_cast<int>(layer_real_),
                                  cbuf_, nullptr, 1, static_cast<int>(layer_cplx_), FFTW_ESTIMATE);
    bwd_ = fftw_plan_many_dft_c2r(rank, n, rows_, cbuf_, nullptr, 1, static_cast<int>(layer_cplx_),
                                  rbuf_, nullptr, 1, static_cast<int>(layer_real_), FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw std::runtime_error("HorizontalFFT: plan creation failed");
  }
  ~HorizontalFFT() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(rbuf_);
    fftw_free(cbuf_);
  }
  HorizontalFFT(const HorizontalFFT&) = delete;
  HorizontalFFT& operator=(const HorizontalFFT&) = delete;

  long n_modes() const { return layer_cplx_; }
  int rows() const { return rows_; }

  // Discrete symbol of -d^2/dx^2 (-d^2/dy^2) for mode index m.
  double lambda(long m) const {
    const long mi = m % nmx_;
    const long mj = m / nmx_;
    double s = (2.0 - 2.0 * std::cos(2.0 * M_PI * mi / g_.nx)) / (g_.hx * g_.hx);
    if (g_.dim() == 3) s += (2.0 - 2.0 * std::cos(2.0 * M_PI * mj / g_.ny)) / (g_.hy * g_.hy);
    return s;
  }

  // real (rows x layer_real) -> spectral (rows x n_modes), unnormalized.
  void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
    std::memcpy(rbuf_, in.data(), sizeof(double) * layer_real_ * rows_);
    fftw_execute(fwd_);
    out.resize(layer_cplx_ * rows_);
    std::memcpy(out.data(), cbuf_, sizeof(fftw_complex) * layer_cplx_ * rows_);
  }

  // spectral -> real, including the 1/(nx*ny) normalization.
  void backward(const std::vector<std::complex<double>>& in, std::vector<double>& out) {
    std::memcpy(cbuf_, in.data(), sizeof(fftw_complex) * layer_cplx_ * rows_);
    fftw_execute(bwd_);
    out.resize(layer_real_ * rows_);
    const double scale = 1.0 / (static_cast<double>(g_.nx) * (g_.dim() == 3 ? g_.ny : 1));
    for (long i = 0; i < layer_real_ * rows_; ++i) out[i] = rbuf_[i] * scale;
  }

  long layer_real() const { return layer_real_; }

 private:
  Grid g_;
  int rows_;
  int nmx_, nmy_;
  long layer_real_, layer_cplx_;
  double* rbuf_;
  fftw_complex* cbuf_;
  fftw_plan fwd_, bwd_;
};

namespace detail {

// Thomas solve of a tridiagonal system with constant sub/super diagonal
// `off` and per-row diagonal `diag`, complex right-hand side strided by
// `stride` starting at rhs. In place.
inline void tridiag_solve(const std::vector<double>& diag, double off,
                          std::complex<double>* rhs, long stride, int n,
                          std::vector<double>& cp, std::vector<std::complex<double>>& dp) {
  cp.resize(n);
  dp.resize(n);
  double b = diag[0];
  cp[0] = off / b;
  dp[0] = rhs[0] / b;
  for (int k = 1; k < n; ++k) {
    const double m = diag[k] - off * cp[k - 1];
    cp[k] = off / m;
    dp[k] = (rhs[static_cast<long>(k) * stride] - off * dp[k - 1]) / m;
  }
  rhs[static_cast<long>(n - 1) * stride] = dp[n - 1];
  for (int k = n - 2; k >= 0; --k)
    rhs[static_cast<long>(k) * stride] = dp[k] - cp[k] * rhs[static_cast<long>(k + 1) * stride];
}

}  // namespace detail

// Vertical boundary treatment of the 1D second-difference operator acting on
// a stack of rows.
enum class VerticalBC {
  neumann_center,    // cell centers, zero-flux ghosts (pressure)
  noslip_center,     // cell centers, odd ghost below / even ghost above (horizontal velocity)
  dirichlet_face,    // interior z-faces, zero wall values (vertical velocity)
  periodic,          // fully periodic test mode
};

// Direct solve of (sigma - Laplacian) x = rhs via horizontal FFT and a
// vertical Thomas sweep per mode. sigma = 0 with Neumann walls is the
// pressure Poisson problem; the zero mode is then deflated (mean removed) so
// the solve is exact for compatible data.
class SpectralSolver {
 public:
  SpectralSolver(const Grid& g, int rows, VerticalBC bc) : g_(g), rows_(rows), bc_(bc), fft_(g, rows) {
    if (bc == VerticalBC::periodic && rows != g.nz)
      throw std::invalid_argument("SpectralSolver: periodic mode needs rows == nz");
  }

  // Solves (sigma - Lap) x = rhs; rhs and x are rows x horizontal-layer
  // arrays in field storage order.
  void solve(const std::vector<double>& rhs, std::vector<double>& x, double sigma) {
    fft_.forward(rhs, spec_);
    const long M = fft_.n_modes();
    const double ihz2 = 1.0 / (g_.hz * g_.hz);

    if (bc_ == VerticalBC::periodic) {
      // Diagonalize z with a cyclic reduction-free approach: the periodic
      // tridiagonal system is solved per mode by Sherman-Morrison.
      solve_periodic(sigma, ihz2, M);
    } else {
      diag_.resize(rows_);
      for (long m = 0; m < M; ++m) {
        const double lam = fft_.lambda(m);
        build_diag(sigma, lam, ihz2);
        const bool singular = bc_ == VerticalBC::neumann_center && sigma == 0.0 && lam == 0.0;
        std::complex<double>* col = spec_.data() + m;
        if (singular) {
          // Deflate: remove the mean of the rhs, pin the last row, then
          // remove the mean of the solution.
          std::complex<double> mean{0.0, 0.0};
          for (int k = 0; k < rows_; ++k) mean += col[static_cast<long>(k) * M];
          mean /= static_cast<double>(rows_);
          for (int k = 0; k < rows_; ++k) col[static_cast<long>(k) * M] -= mean;
          // Pin x0 = 0 and solve the remaining (rows-1) tridiagonal block;
          // the mean shift below restores the zero-mean representative.
          solve_pinned(diag_, col, M);
          std::complex<double> xmean{0.0, 0.0};
          for (int k = 0; k < rows_; ++k) xmean += col[static_cast<long>(k) * M];
          xmean /= static_cast<double>(rows_);
          for (int k = 0; k < rows_; ++k) col[static_cast<long>(k) * M] -= xmean;
        } else {
          detail::tridiag_solve(diag_, -ihz2, col, M, rows_, cp_, dp_);
        }
      }
    }
    fft_.backward(spec_, x);
  }

 private:
  // diag of (sigma - Lap) restricted to a horizontal mode with symbol lam.
  void build_diag(double sigma, double lam, double ihz2) {
    for (int k = 0; k < rows_; ++k) diag_[k] = sigma + lam + 2.0 * ihz2;
    switch (bc_) {
      case VerticalBC::neumann_center:
        diag_[0] -= ihz2;
        diag_[rows_ - 1] -= ihz2;
        break;
      case VerticalBC::noslip_center:
        diag_[0] += ihz2;       // odd ghost below the wall
        diag_[rows_ - 1] -= ihz2;  // even ghost above the top
        break;
      case VerticalBC::dirichlet_face:
        break;  // wall values are zero, no modification
      case VerticalBC::periodic:
        break;
    }
  }

  // Solve with row 0 pinned to zero: drop row 0 (x0 = 0) and solve the
  // remaining tridiagonal block, whose first equation loses its sub-diagonal
  // coupling.
  void solve_pinned(const std::vector<double>& d, std::complex<double>* col, long M) {
    const int n = rows_ - 1;
    const double off = -1.0 / (g_.hz * g_.hz);
    sub_diag_.assign(d.begin() + 1, d.end());
    detail::tridiag_solve(sub_diag_, off, col + M, M, n, cp_, dp_);
    col[0] = {0.0, 0.0};
  }

  void solve_periodic(double sigma, double ihz2, long M) {
    // Sherman-Morrison for the cyclic tridiagonal system per mode.
    const int n = rows_;
    for (long m = 0; m < M; ++m) {
      const double lam = fft_.lambda(m);
      const double b = sigma + lam + 2.0 * ihz2;
      std::complex<double>* col = spec_.data() + m;
      const bool singular = sigma == 0.0 && lam == 0.0;
      if (singular) {
        // Zero horizontal mode of the periodic Poisson problem: project out
        // the vertical mean and solve the pinned subsystem.
        std::complex<double> mean{0.0, 0.0};
        for (int k = 0; k < n; ++k) mean += col[static_cast<long>(k) * M];
        mean /= static_cast<double>(n);
        for (int k = 0; k < n; ++k) col[static_cast<long>(k) * M] -= mean;
        col[0] = {0.0, 0.0};
        cyclic_solve(b, ihz2, col, M, n, true);
        std::complex<double> xmean{0.0, 0.0};
        for (int k = 0; k < n; ++k) xmean += col[static_cast<long>(k) * M];
        xmean /= static_cast<double>(n);
        for (int k = 0; k < n; ++k) col[static_cast<long>(k) * M] -= xmean;
      } else {
        cyclic_solve(b, ihz2, col, M, n, false);
      }
    }
  }

  // Cyclic tridiagonal solve (diag b, off-diagonals -ihz2, wraparound) by
  // Sherman-Morrison; `deflated` pins x0 = 0 for the singular zero mode, in
  // which case the wraparound edge only couples to the pinned unknown and
  // the remainder is a plain tridiagonal block.
  void cyclic_solve(double b, double ihz2, std::complex<double>* col, long M, int n, bool deflated) {
    const double off = -ihz2;
    if (deflated) {
      sub_diag_.assign(n - 1, b);
      detail::tridiag_solve(sub_diag_, off, col + M, M, n - 1, cp_, dp_);
      return;
    }
    const double gamma = -0.5 * b;
    sub_diag_.assign(n, b);
    sub_diag_[0] = b - gamma;
    sub_diag_[n - 1] = b - off * off / gamma;
    detail::tridiag_solve(sub_diag_, off, col, M, n, cp_, dp_);
    sm_rhs_.assign(n, {0.0, 0.0});
    sm_rhs_[0] = {gamma, 0.0};
    sm_rhs_[n - 1] = {off, 0.0};
    std::vector<std::complex<double>> z(sm_rhs_);
    detail::tridiag_solve(sub_diag_, off, z.data(), 1, n, cp_, dp_);
    const std::complex<double> num = col[0] + col[static_cast<long>(n - 1) * M] * (off / gamma);
    const std::complex<double> den = 1.0 + z[0] + z[n - 1] * (off / gamma);
    const std::complex<double> fact = num / den;
    for (int k = 0; k < n; ++k) col[static_cast<long>(k) * M] -= fact * z[k];
  }

  Grid g_;
  int rows_;
  VerticalBC bc_;
  HorizontalFFT fft_;
  std::vector<std::complex<double>> spec_;
  std::vector<double> diag_, sub_diag_;
  std::vector<double> cp_;
  std::vector<std::complex<double>> dp_, sm_rhs_;
};

}  // namespace vnsim
