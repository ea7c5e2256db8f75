#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <string>
#include <vector>

#include "landau/grid.hpp"

namespace landau {

/// fftw_malloc-backed array; SIMD-aligned so any buffer can be used with any plan.
template <class T>
class FftwBuffer {
 public:
  FftwBuffer() = default;
  explicit FftwBuffer(std::size_t n) : n_(n), data_(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (!data_ && n) throw std::bad_alloc();
    for (std::size_t i = 0; i < n; ++i) data_[i] = T{};
  }
  FftwBuffer(const FftwBuffer& o) : FftwBuffer(o.n_) {
    for (std::size_t i = 0; i < n_; ++i) data_[i] = o.data_[i];
  }
  FftwBuffer(FftwBuffer&& o) noexcept : n_(o.n_), data_(o.data_) {
    o.n_ = 0;
    o.data_ = nullptr;
  }
  FftwBuffer& operator=(FftwBuffer o) noexcept {
    std::swap(n_, o.n_);
    std::swap(data_, o.data_);
    return *this;
  }
  ~FftwBuffer() {
    if (data_) fftw_free(data_);
  }
  T* data() { return data_; }
  const T* data() const { return data_; }
  std::size_t size() const { return n_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

 private:
  std::size_t n_ = 0;
  T* data_ = nullptr;
};

using Spectrum = FftwBuffer<std::complex<double>>;

namespace detail {
// The FFTW planner is not thread-safe; execution with new arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Linear (non-periodic) convolution on a grid via zero-padding to 2n per axis.
/// Kernel tables live on the padded lattice with offset m stored at m mod 2n.
class PaddedConvolver {
 public:
  explicit PaddedConvolver(const Grid& g) : d_(g.dim()), n_(g.points()), N_(2 * g.points()), h_d_(g.cell_volume()) {
    real_size_ = 1;
    for (int a = 0; a < d_; ++a) real_size_ *= static_cast<std::size_t>(N_);
    complex_size_ = real_size_ / N_ * (N_ / 2 + 1);
    std::vector<int> dims(d_, N_);
    FftwBuffer<double> r(real_size_);
    Spectrum c(complex_size_);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    // ESTIMATE keeps plans, hence rounding, identical from run to run.
    forward_ = fftw_plan_dft_r2c(d_, dims.data(), r.data(), reinterpret_cast<fftw_complex*>(c.data()), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r(d_, dims.data(), reinterpret_cast<fftw_complex*>(c.data()), r.data(), FFTW_ESTIMATE);
    if (!forward_ || !backward_) throw Error("FFTW planning failed");
  }
  PaddedConvolver(const PaddedConvolver&) = delete;
  PaddedConvolver& operator=(const PaddedConvolver&) = delete;
  ~PaddedConvolver() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  int padded_points() const { return N_; }
  std::size_t padded_size() const { return real_size_; }
  std::size_t spectrum_size() const { return complex_size_; }

  /// Index on the padded lattice for signed per-axis offsets in (−n, n).
  std::size_t padded_index(const int* offsets) const {
    std::size_t idx = 0;
    for (int a = 0; a < d_; ++a) idx = idx * N_ + static_cast<std::size_t>((offsets[a] + N_) % N_);
    return idx;
  }

  Spectrum transform_table(const std::vector<double>& table) const {
    FftwBuffer<double> r(real_size_);
    for (std::size_t i = 0; i < real_size_; ++i) r[i] = table[i];
    Spectrum out(complex_size_);
    fftw_execute_dft_r2c(forward_, r.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  Spectrum transform_field(const std::vector<double>& values) const {
    FftwBuffer<double> r(real_size_);
    std::vector<int> c(d_);
    const std::size_t count = values.size();
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t rem = i, pidx = 0;
      for (int a = d_ - 1; a >= 0; --a) {
        c[a] = static_cast<int>(rem % n_);
        rem /= n_;
      }
      for (int a = 0; a < d_; ++a) pidx = pidx * N_ + c[a];
      r[pidx] = values[i];
    }
    Spectrum out(complex_size_);
    fftw_execute_dft_r2c(forward_, r.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  /// (kernel ∗ field)(v_i) = Σ_j K(v_i − v_j) f_j h^d on the original grid.
  std::vector<double> apply(const Spectrum& kernel, const Spectrum& field) const {
    Spectrum prod(complex_size_);
    for (std::size_t i = 0; i < complex_size_; ++i) prod[i] = kernel[i] * field[i];
    return inverse(std::move(prod));
  }

  /// Inverse transform of a product spectrum, restricted to the original grid and scaled by h^d.
  std::vector<double> inverse(Spectrum prod) const {
    FftwBuffer<double> r(real_size_);
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(prod.data()), r.data());
    std::size_t count = 1;
    for (int a = 0; a < d_; ++a) count *= static_cast<std::size_t>(n_);
    std::vector<double> out(count);
    const double scale = h_d_ / static_cast<double>(real_size_);
    std::vector<int> c(d_);
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t rem = i, pidx = 0;
      for (int a = d_ - 1; a >= 0; --a) {
        c[a] = static_cast<int>(rem % n_);
        rem /= n_;
      }
      for (int a = 0; a < d_; ++a) pidx = pidx * N_ + c[a];
      out[i] = r[pidx] * scale;
    }
    return out;
  }

  static std::shared_ptr<const PaddedConvolver> for_grid(const Grid& g) {
    static std::mutex m;
    static std::map<std::string, std::shared_ptr<const PaddedConvolver>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[g.fingerprint()];
    if (!slot) slot = std::make_shared<const PaddedConvolver>(g);
    return slot;
  }

 private:
  int d_;
  int n_;
  int N_;
  double h_d_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace landau
