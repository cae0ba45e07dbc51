#pragma once

// Tabulation of location mixtures x -> (1/N) sum_j K(x - y_j) on a uniform
// lattice, for K the CDF and density of a light-tailed innovation law.
// States are linearly binned onto the lattice and convolved with the sampled
// kernels by FFT, which keeps the cost at O(G log G) for G lattice points
// regardless of the number of states.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "osclab/cdf.hpp"
#include "osclab/error.hpp"
#include "osclab/innovations.hpp"

namespace osclab {

namespace detail {

// FFTW planning is not thread-safe; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n), real_(fftw_buffer<double>(n)), spec_(fftw_buffer<fftw_complex>(n / 2 + 1)) {
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_.get(), spec_.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_.get(), real_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }

  /// Spectrum of a zero-padded real sequence.
  std::vector<std::complex<double>> forward(std::span<const double> x) {
    std::fill(real_.get(), real_.get() + n_, 0.0);
    std::copy(x.begin(), x.end(), real_.get());
    fftw_execute(forward_);
    std::vector<std::complex<double>> out(n_ / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spec_[k][0], spec_[k][1]};
    return out;
  }

  /// Inverse of a product spectrum, normalized.
  std::vector<double> inverse(std::span<const std::complex<double>> s) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      spec_[k][0] = s[k].real();
      spec_[k][1] = s[k].imag();
    }
    fftw_execute(backward_);
    std::vector<double> out(real_.get(), real_.get() + n_);
    const double inv = 1.0 / static_cast<double>(n_);
    for (auto& v : out) v *= inv;
    return out;
  }

 private:
  std::size_t n_;
  FftwBuffer<double> real_;
  FftwBuffer<fftw_complex> spec_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace detail

/// Mixture CDF and density tabulated on origin + k * step.
struct MixtureTable {
  double origin = 0.0;
  double step = 0.0;
  std::vector<double> cdf;
  std::vector<double> density;
  /// Largest |density slope| on the lattice; bounds the linear-interpolation
  /// error of the CDF by step^2 / 8 times this value.
  double max_density_slope = 0.0;

  double knot(std::size_t k) const noexcept { return origin + step * static_cast<double>(k); }

  PiecewiseLinearCdf to_cdf() const { return PiecewiseLinearCdf(origin, step, cdf, density); }

  double interpolation_error_bound() const noexcept { return step * step / 8.0 * max_density_slope; }
};

/// Largest power of two not exceeding x.
inline double floor_pow2(double x) { return std::ldexp(1.0, static_cast<int>(std::floor(std::log2(x)))); }

/// Tabulates (1/N) sum_j law.cdf(x - y_j) and the matching density for x on
/// a lattice of spacing `step` (a power of two) covering every x where the
/// mixture is strictly between 0 and 1.
inline MixtureTable tabulate_mixture(std::span<const double> states, const InnovationDistribution& law, double step) {
  if (states.empty()) throw std::invalid_argument("tabulate_mixture: no states");
  if (!law.light_tailed() || !law.has_closed_density())
    throw CapabilityError("lattice mixture tabulation needs a light-tailed law with closed-form CDF");
  if (!(step > 0.0) || floor_pow2(step) != step) throw std::invalid_argument("tabulate_mixture: step must be a power of two");

  const auto [klo, khi] = law.effective_support();
  const auto [ymin_it, ymax_it] = std::minmax_element(states.begin(), states.end());
  const double ymin = *ymin_it, ymax = *ymax_it;

  using i64 = std::int64_t;
  auto lattice_floor = [step](double v) { return static_cast<i64>(std::floor(v / step)); };
  const i64 hy_min = lattice_floor(ymin);
  const i64 hy_max = lattice_floor(ymax) + 1;
  const i64 gx_min = lattice_floor(ymin + klo) - 1;
  const i64 gx_max = lattice_floor(ymax + khi) + 2;

  const auto ny = static_cast<std::size_t>(hy_max - hy_min + 1);
  const auto nx = static_cast<std::size_t>(gx_max - gx_min + 1);
  const std::size_t nk = nx + ny - 1;
  const i64 m_min = gx_min - hy_max;

  // Linear binning keeps mass and mean of every state.
  std::vector<double> w(ny, 0.0);
  const double unit = 1.0 / static_cast<double>(states.size());
  for (double y : states) {
    const double u = y / step;
    const double fl = std::floor(u);
    const double lambda = u - fl;
    const auto h = static_cast<std::size_t>(static_cast<i64>(fl) - hy_min);
    w[h] += unit * (1.0 - lambda);
    w[h + 1] += unit * lambda;
  }

  std::vector<double> kcdf(nk), kpdf(nk);
  for (std::size_t q = 0; q < nk; ++q) {
    const double d = static_cast<double>(m_min + static_cast<i64>(q)) * step;
    kcdf[q] = law.cdf(d);
    kpdf[q] = law.pdf(d);
  }

  detail::RealFft fft(detail::next_pow2(ny + nk - 1));
  const auto sw = fft.forward(w);
  auto convolve = [&](const std::vector<double>& kernel) {
    auto sk = fft.forward(kernel);
    for (std::size_t k = 0; k < sk.size(); ++k) sk[k] *= sw[k];
    return fft.inverse(sk);
  };
  const auto c_cdf = convolve(kcdf);
  const auto c_pdf = convolve(kpdf);

  MixtureTable table;
  table.origin = static_cast<double>(gx_min) * step;
  table.step = step;
  table.cdf.resize(nx);
  table.density.resize(nx);
  double running = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    running = std::max(running, std::clamp(c_cdf[i + ny - 1], 0.0, 1.0));
    table.cdf[i] = running;
    table.density[i] = std::max(0.0, c_pdf[i + ny - 1]);
  }
  table.cdf.front() = 0.0;
  table.cdf.back() = 1.0;
  for (std::size_t i = 0; i + 1 < nx; ++i)
    table.max_density_slope =
        std::max(table.max_density_slope, std::abs(table.density[i + 1] - table.density[i]) / step);
  return table;
}

}  // namespace osclab
