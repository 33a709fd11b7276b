#pragma once

// Single-excitation propagation on a finite chain: ground truth for the
// series. Periodic chains are circulant and diagonalised by one FFT; open
// chains use a dense symmetric eigendecomposition.

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "convolution.hpp"
#include "error.hpp"
#include "kernels.hpp"

namespace lrcone {

enum class Boundary { periodic, open };

inline const char *boundary_name(Boundary b) { return b == Boundary::periodic ? "periodic" : "open"; }

inline Boundary parse_boundary(const std::string &s)
{
  if (s == "periodic")
    return Boundary::periodic;
  if (s == "open")
    return Boundary::open;
  config_error("unknown boundary '" + s + "' (periodic|open)");
}

class HoppingMatrix {
 public:
  HoppingMatrix(const KernelSpec &spec, long N, Boundary bc, double scale, double diagonal)
      : spec_(spec), N_(N), bc_(bc), scale_(scale), diagonal_(diagonal)
  {
    if (N < 3)
      config_error("chain length N must be >= 3");
    if (!std::isfinite(scale) || !std::isfinite(diagonal))
      config_error("scale and diagonal must be finite");
    row_.resize(static_cast<std::size_t>(N));
    row_[0] = diagonal;
    for (long j = 1; j < N; ++j)
      row_[j] = element(0, j);
    if (bc == Boundary::periodic)
      build_periodic();
    else
      build_open();
  }

  const KernelSpec &spec() const { return spec_; }
  long N() const { return N_; }
  Boundary bc() const { return bc_; }
  double scale() const { return scale_; }
  double diagonal() const { return diagonal_; }
  long source() const { return bc_ == Boundary::periodic ? 0 : N_ / 2; }

  long distance(long j, long k) const
  {
    long d = std::labs(j - k);
    return bc_ == Boundary::periodic ? std::min(d, N_ - d) : d;
  }

  double element(long j, long k) const
  {
    double v = scale_ * spec_(distance(j, k));
    return j == k ? v + diagonal_ : v;
  }

  Eigen::MatrixXd dense() const
  {
    Eigen::MatrixXd H(N_, N_);
    for (long j = 0; j < N_; ++j)
      for (long k = 0; k < N_; ++k)
        H(j, k) = element(j, k);
    return H;
  }

  // periodic: omega_k in FFT order; open: ascending eigenvalues
  const std::vector<double> &eigenvalues() const { return eig_; }
  const Eigen::MatrixXd &eigenvectors() const { return vec_; }

  // site index of the excitation after moving q from the source
  long target(long q) const
  {
    if (bc_ == Boundary::periodic)
      return ((q % N_) + N_) % N_;
    long s = source() + q;
    if (s < 0 || s >= N_)
      config_error("distance " + std::to_string(q) + " leaves the open chain of " + std::to_string(N_) + " sites");
    return s;
  }

 private:
  void build_periodic()
  {
    std::vector<double> in(row_);
    const std::size_t nc = static_cast<std::size_t>(N_ / 2 + 1);
    auto *out = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * nc));
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> g(detail::fftw_planner_mutex());
      plan = fftw_plan_dft_r2c_1d(static_cast<int>(N_), in.data(), out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    eig_.resize(static_cast<std::size_t>(N_));
    for (long k = 0; k < N_; ++k) {
      long kk = k <= N_ / 2 ? k : N_ - k;
      eig_[k] = out[kk][0];
    }
    {
      std::lock_guard<std::mutex> g(detail::fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(out);
    cos_.resize(static_cast<std::size_t>(N_));
    for (long m = 0; m < N_; ++m)
      cos_[m] = std::cos(2.0 * M_PI * static_cast<double>(m) / static_cast<double>(N_));
  }

  void build_open()
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense());
    if (es.info() != Eigen::Success)
      numeric_error("eigendecomposition failed");
    eig_.assign(es.eigenvalues().data(), es.eigenvalues().data() + N_);
    vec_ = es.eigenvectors();
  }

  KernelSpec spec_;
  long N_;
  Boundary bc_;
  double scale_, diagonal_;
  std::vector<double> row_;
  std::vector<double> eig_;
  std::vector<double> cos_;
  Eigen::MatrixXd vec_;

 public:
  const std::vector<double> &first_row() const { return row_; }
  const std::vector<double> &cos_table() const { return cos_; }
};

inline HoppingMatrix build_hopping(const KernelSpec &spec, long N, Boundary bc = Boundary::periodic, double scale = 1.0,
                                   double diagonal = 0.0, long max_q = 0)
{
  if (bc == Boundary::open && N < 2 * std::labs(max_q))
    config_error("open chain of " + std::to_string(N) + " sites is shorter than 2q = " +
                 std::to_string(2 * std::labs(max_q)));
  return HoppingMatrix(spec, N, bc, scale, diagonal);
}

// <q| exp(-i t H) |0>
inline std::complex<double> amplitude(const HoppingMatrix &H, double t, long q)
{
  const long N = H.N();
  if (H.bc() == Boundary::periodic) {
    if (2 * std::labs(q) >= N)
      config_error("periodic distance must satisfy |q| < N/2");
    // omega_k = omega_{N-k}: pair the two phases into one cosine
    const auto &w = H.eigenvalues();
    const auto &c = H.cos_table();
    // the amplitude is even in q; reduce to the shorter way round so that
    // q and -q take the same summation path
    long m = ((q % N) + N) % N;
    m = std::min(m, N - m);
    double re = 0, im = 0;
    for (long k = 0; k < N; ++k) {
      long idx = static_cast<long>((static_cast<unsigned long>(k) * static_cast<unsigned long>(m)) %
                                   static_cast<unsigned long>(N));
      double s, co;
      sincos(w[k] * t, &s, &co);
      re += co * c[idx];
      im -= s * c[idx];
    }
    return {re / static_cast<double>(N), im / static_cast<double>(N)};
  }
  long src = H.source(), dst = H.target(q);
  const auto &V = H.eigenvectors();
  const auto &lam = H.eigenvalues();
  double re = 0, im = 0;
  for (long m = 0; m < N; ++m) {
    double a = V(dst, m) * V(src, m);
    re += a * std::cos(lam[m] * t);
    im -= a * std::sin(lam[m] * t);
  }
  return {re, im};
}

struct Propagation {
  std::complex<double> amplitude;
  double probability = 0;
};

inline Propagation propagate(const HoppingMatrix &H, double t, long q)
{
  auto a = amplitude(H, t, q);
  return {a, std::norm(a)};
}

// psi_j(t) for all sites j (periodic: index = offset from the source)
inline std::vector<std::complex<double>> propagate_all(const HoppingMatrix &H, double t)
{
  const long N = H.N();
  std::vector<std::complex<double>> psi(static_cast<std::size_t>(N));
  if (H.bc() == Boundary::periodic) {
    auto *buf = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * N));
    const auto &w = H.eigenvalues();
    for (long k = 0; k < N; ++k) {
      buf[k][0] = std::cos(w[k] * t) / static_cast<double>(N);
      buf[k][1] = -std::sin(w[k] * t) / static_cast<double>(N);
    }
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> g(detail::fftw_planner_mutex());
      plan = fftw_plan_dft_1d(static_cast<int>(N), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    for (long j = 0; j < N; ++j)
      psi[j] = {buf[j][0], buf[j][1]};
    {
      std::lock_guard<std::mutex> g(detail::fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(buf);
    return psi;
  }
  const auto &V = H.eigenvectors();
  const auto &lam = H.eigenvalues();
  long src = H.source();
  Eigen::VectorXcd coef(N);
  for (long m = 0; m < N; ++m)
    coef[m] = V(src, m) * std::exp(std::complex<double>(0, -lam[m] * t));
  Eigen::VectorXcd out = V.cast<std::complex<double>>() * coef;
  for (long j = 0; j < N; ++j)
    psi[j] = out[j];
  return psi;
}

// <psi(t)| H |psi(t)> evaluated in the site basis
inline double energy(const HoppingMatrix &H, double t)
{
  auto psi = propagate_all(H, t);
  const long N = H.N();
  std::complex<double> e = 0;
  for (long j = 0; j < N; ++j) {
    std::complex<double> hpsi = 0;
    for (long k = 0; k < N; ++k) {
      double h = H.element(j, k);
      if (h != 0.0)
        hpsi += h * psi[k];
    }
    e += std::conj(psi[j]) * hpsi;
  }
  return e.real();
}

struct FiniteSizeBound {
  double amplitude_bound = 0;   // 10 |A_N - A_2N|
  double probability_bound = 0; // implied bound on |P_N - P_inf|
  bool converged = true;        // |A_2N - A_4N| did not exceed |A_N - A_2N|
};

inline FiniteSizeBound finite_size_bound(const HoppingMatrix &H, double t, long q)
{
  if (H.bc() != Boundary::periodic)
    config_error("finite_size_bound needs a periodic chain");
  FiniteSizeBound out;
  if (t == 0.0)
    return out;
  HoppingMatrix H2(H.spec(), 2 * H.N(), Boundary::periodic, H.scale(), H.diagonal());
  HoppingMatrix H4(H.spec(), 4 * H.N(), Boundary::periodic, H.scale(), H.diagonal());
  auto a1 = amplitude(H, t, q), a2 = amplitude(H2, t, q), a4 = amplitude(H4, t, q);
  double d12 = std::abs(a1 - a2), d24 = std::abs(a2 - a4);
  // plus a summation rounding allowance of the three FFT-length sums
  out.amplitude_bound = 10.0 * d12 + 1e-15;
  out.probability_bound = out.amplitude_bound * (2.0 * std::abs(a1) + out.amplitude_bound);
  // rounding floor: differences below ~1e-14 are noise, not non-convergence
  out.converged = d24 <= std::max(d12, 1e-14);
  return out;
}

} // namespace lrcone
