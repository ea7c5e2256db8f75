#pragma once

#include <atomic>
#include <deque>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "landau/error.hpp"
#include "landau/fft.hpp"
#include "landau/grid.hpp"

namespace landau {

/// Counts inputs that had negative entries where a nonnegative density was expected.
inline std::atomic<long>& negative_input_warnings() {
  static std::atomic<long> count{0};
  return count;
}

struct Potential {
  double gamma;
  int d;

  explicit Potential(double g, int dim = 3) : gamma(g), d(dim) {
    if (d < 2) throw DomainError("dimension must be >= 2");
    if (!(gamma >= -d && gamma < 0.0))
      throw DomainError("γ ∈ [−d,0) required, got γ=" + std::to_string(gamma) + " with d=" + std::to_string(d));
  }
  bool coulomb() const { return gamma == -static_cast<double>(d); }
};

/// |S^{d−1}|.
inline double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

/// c_d = (d−1)(d−2)|S^{d−1}|, the local Coulomb coefficient.
inline double coulomb_constant(int d) { return (d - 1.0) * (d - 2.0) * sphere_area(d); }

struct DenseMatrix {
  int d;
  std::vector<double> a;
  explicit DenseMatrix(int dim) : d(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * d + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * d + j]; }
};

namespace detail {
inline double norm2(std::span<const double> z) {
  double s = 0.0;
  for (double x : z) s += x * x;
  return s;
}
}  // namespace detail

/// Π(z) = Id − z⊗z/|z|².
inline DenseMatrix projector(std::span<const double> z) {
  double r2 = detail::norm2(z);
  if (!(r2 > 0.0)) throw DomainError("projector: z must be nonzero");
  const int d = static_cast<int>(z.size());
  DenseMatrix P(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) P(i, j) = (i == j ? 1.0 : 0.0) - z[i] * z[j] / r2;
  return P;
}

/// a(z) = |z|^{γ+2} Π(z).
inline DenseMatrix kernel_a(std::span<const double> z, const Potential& pot) {
  DenseMatrix P = projector(z);
  double s = std::pow(detail::norm2(z), 0.5 * (pot.gamma + 2.0));
  for (double& x : P.a) x *= s;
  return P;
}

/// b(z) = −(d−1) z |z|^γ.
inline std::vector<double> kernel_b(std::span<const double> z, const Potential& pot) {
  double r2 = detail::norm2(z);
  if (!(r2 > 0.0)) throw DomainError("kernel_b: z must be nonzero");
  double s = -(pot.d - 1.0) * std::pow(r2, 0.5 * pot.gamma);
  std::vector<double> out(z.begin(), z.end());
  for (double& x : out) x *= s;
  return out;
}

/// c(z) = −(d−1)(d+γ)|z|^γ for γ > −d (Coulomb is local, see coefficient_fields).
inline double kernel_c(std::span<const double> z, const Potential& pot) {
  if (pot.coulomb()) throw DomainError("kernel_c: Coulomb c is the local term −c_d f, not a kernel");
  double r2 = detail::norm2(z);
  if (!(r2 > 0.0)) throw DomainError("kernel_c: z must be nonzero");
  return -(pot.d - 1.0) * (pot.d + pot.gamma) * std::pow(r2, 0.5 * pot.gamma);
}

namespace detail {

// Full Gauss-Legendre rule on [−1,1] from the half rule Boost stores.
template <int Q>
const std::pair<std::vector<double>, std::vector<double>>& gauss_rule() {
  static const auto rule = [] {
    using G = boost::math::quadrature::gauss<double, Q>;
    std::vector<double> x, w;
    const auto& ax = G::abscissa();
    const auto& aw = G::weights();
    for (std::size_t i = 0; i < ax.size(); ++i) {
      x.push_back(ax[i]);
      w.push_back(aw[i]);
      if (ax[i] != 0.0) {
        x.push_back(-ax[i]);
        w.push_back(aw[i]);
      }
    }
    return std::make_pair(x, w);
  }();
  return rule;
}

// Σ over the tensor rule on the cube of side h centred at c (dims m), weights summing to 1.
template <int Q, class Fn>
void for_each_tensor_point(std::span<const double> c, double h, Fn&& fn) {
  const auto& [x, w] = gauss_rule<Q>();
  const int m = static_cast<int>(c.size());
  const int q = static_cast<int>(x.size());
  int total = 1;
  for (int a = 0; a < m; ++a) total *= q;
  std::vector<double> y(m);
  for (int s = 0; s < total; ++s) {
    int rem = s;
    double wt = 1.0;
    for (int a = 0; a < m; ++a) {
      int k = rem % q;
      rem /= q;
      y[a] = c[a] + 0.5 * h * x[k];
      wt *= 0.5 * w[k];
    }
    fn(std::span<const double>(y), wt);
  }
}

// ∫ over the cube of side h centred at 0 of a function homogeneous of degree μ > −d.
// The cube splits into 2d pyramids with apex at 0; the radial integral is closed form.
template <class Fn>
double origin_cell_integral(Fn&& fn, double mu, double h, int d) {
  if (!(mu > -d)) throw DomainError("origin cell integral needs degree > −d");
  std::vector<double> centre(d - 1, 0.0), w(d);
  double acc = 0.0;
  for (int axis = 0; axis < d; ++axis)
    for (double sign : {-1.0, 1.0})
      for_each_tensor_point<30>(std::span<const double>(centre), h, [&](std::span<const double> y, double wt) {
        for (int a = 0, k = 0; a < d; ++a) w[a] = a == axis ? sign * 0.5 * h : y[k++];
        acc += wt * std::pow(h, d - 1) * fn(std::span<const double>(w));
      });
  return 0.5 * h / (mu + d) * acc;
}

}  // namespace detail

/// Mean of |u|^β over the unit cube [−1/2,1/2]^d, β > −d.
inline double unit_cell_power_average(double beta, int d) {
  if (!(beta > -d)) throw DomainError("cell average of |z|^β needs β > −d");
  static std::mutex m;
  static std::map<std::pair<double, int>, double> cache;
  std::lock_guard<std::mutex> lock(m);
  auto key = std::make_pair(beta, d);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  double avg = detail::origin_cell_integral([&](std::span<const double> z) { return std::pow(detail::norm2(z), 0.5 * beta); },
                                            beta, 1.0, d);
  cache.emplace(key, avg);
  return avg;
}

/// h^{−d} ∫_{cell} |z|^β dz for the cell of side h centred at the origin.
inline double cell_power_average(double beta, double h, int d) { return std::pow(h, beta) * unit_cell_power_average(beta, d); }

/// A kernel K(z)·1_{|z|≤radius} with K homogeneous of the given degree.
struct KernelSpec {
  std::string key;
  std::function<double(std::span<const double>)> value;  ///< pointwise, z ≠ 0
  double degree;
  double radius = std::numeric_limits<double>::infinity();
};

inline KernelSpec a_kernel_spec(const Potential& pot, int i, int j) {
  std::ostringstream key;
  key.precision(17);
  key << "a|" << pot.gamma << '|' << i << '|' << j;
  const double half = 0.5 * (pot.gamma + 2.0), gm = 0.5 * pot.gamma;
  return {key.str(),
          [=](std::span<const double> z) {
            double r2 = detail::norm2(z);
            return (i == j ? std::pow(r2, half) : 0.0) - z[i] * z[j] * std::pow(r2, gm);
          },
          pot.gamma + 2.0};
}

inline KernelSpec b_kernel_spec(const Potential& pot, int i) {
  std::ostringstream key;
  key.precision(17);
  key << "b|" << pot.gamma << '|' << i;
  const double coef = -(pot.d - 1.0), gm = 0.5 * pot.gamma;
  return {key.str(), [=](std::span<const double> z) { return coef * z[i] * std::pow(detail::norm2(z), gm); }, pot.gamma + 1.0};
}

/// coefficient·|z|^β·1_{|z|≤radius}.
inline KernelSpec power_kernel_spec(double beta, double coefficient,
                                    double radius = std::numeric_limits<double>::infinity()) {
  std::ostringstream key;
  key.precision(17);
  key << "pow|" << beta << '|' << coefficient << '|' << radius;
  return {key.str(), [=](std::span<const double> z) { return coefficient * std::pow(detail::norm2(z), 0.5 * beta); }, beta, radius};
}

/// Cell moments of a kernel on the padded lattice, all divided by h^d:
/// average ∫K, first[k] ∫K·(z−z_c)_k and second ∫K·|z−z_c|²/d over each cell.
struct KernelTable {
  std::vector<double> average;
  std::vector<std::vector<double>> first;
  std::vector<double> second;
};

struct KernelSpectra {
  Spectrum average;
  std::vector<Spectrum> first;
  Spectrum second;
};

/// How a convolution is discretised. cell_average sums cell-averaged kernel
/// values against nodal f, a positive-weight rule, so nonnegative f gives PSD A
/// and nonpositive c exactly. corrected adds the first- and second-moment terms
/// −m·∇f + ½ s Δf, which removes the O(h²) error of the far cells and the leading
/// error of the cells next to the singularity.
enum class ConvolutionRule { cell_average, corrected };

namespace detail {

// Cells within this Chebyshev ring around the origin get an 8-point tensor rule;
// farther cells a 2-point one.
inline constexpr int kNearRing = 2;

struct CellMoments {
  double average = 0.0;
  std::vector<double> first;
  double second = 0.0;
};

template <int Q>
CellMoments gauss_moments(const KernelSpec& k, std::span<const double> z, double h) {
  const int d = static_cast<int>(z.size());
  CellMoments m{0.0, std::vector<double>(d, 0.0), 0.0};
  for_each_tensor_point<Q>(z, h, [&](std::span<const double> y, double wt) {
    double v = wt * k.value(y);
    m.average += v;
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      double dz = y[a] - z[a];
      m.first[a] += v * dz;
      r2 += dz * dz;
    }
    m.second += v * r2 / d;
  });
  return m;
}

inline CellMoments origin_moments(const KernelSpec& k, int d, double h) {
  const double vol = std::pow(h, d);
  CellMoments m{0.0, std::vector<double>(d, 0.0), 0.0};
  m.average = origin_cell_integral([&](std::span<const double> z) { return k.value(z); }, k.degree, h, d) / vol;
  for (int a = 0; a < d; ++a)
    m.first[a] = origin_cell_integral([&](std::span<const double> z) { return k.value(z) * z[a]; }, k.degree + 1.0, h, d) / vol;
  m.second =
      origin_cell_integral([&](std::span<const double> z) { return k.value(z) * norm2(z) / d; }, k.degree + 2.0, h, d) / vol;
  return m;
}

// Cells cut by the truncation sphere: 8^d subcell midpoints; the origin cell
// keeps its exact moments scaled by the inside fraction.
inline CellMoments cut_moments(const KernelSpec& k, std::span<const double> z, double h, bool origin) {
  const int d = static_cast<int>(z.size());
  constexpr int sub = 8;
  int total = 1;
  for (int a = 0; a < d; ++a) total *= sub;
  CellMoments m{0.0, std::vector<double>(d, 0.0), 0.0};
  std::vector<double> y(d);
  int inside = 0;
  const double R2 = k.radius * k.radius;
  for (int s = 0; s < total; ++s) {
    int rem = s;
    for (int a = 0; a < d; ++a) {
      y[a] = z[a] + ((rem % sub) + 0.5) / sub * h - 0.5 * h;
      rem /= sub;
    }
    if (norm2(y) > R2) continue;
    ++inside;
    if (origin) continue;
    double v = k.value(std::span<const double>(y)) / total;
    m.average += v;
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      double dz = y[a] - z[a];
      m.first[a] += v * dz;
      r2 += dz * dz;
    }
    m.second += v * r2 / d;
  }
  if (origin) {
    m = origin_moments(k, d, h);
    double frac = static_cast<double>(inside) / total;
    m.average *= frac;
    for (double& x : m.first) x *= frac;
    m.second *= frac;
  }
  return m;
}

inline CellMoments cell_moments(const KernelSpec& k, std::span<const double> z, const int* off, double h) {
  const int d = static_cast<int>(z.size());
  double rmin2 = 0.0, rmax2 = 0.0;
  int ring = 0;
  for (int a = 0; a < d; ++a) {
    double lo = std::max(0.0, std::abs(z[a]) - 0.5 * h), hi = std::abs(z[a]) + 0.5 * h;
    rmin2 += lo * lo;
    rmax2 += hi * hi;
    ring = std::max(ring, std::abs(off[a]));
  }
  const double R2 = k.radius * k.radius;
  if (rmin2 > R2) return {0.0, std::vector<double>(d, 0.0), 0.0};
  if (rmax2 > R2) return cut_moments(k, z, h, ring == 0);
  if (ring == 0) return origin_moments(k, d, h);
  if (ring <= kNearRing) return gauss_moments<8>(k, z, h);
  return gauss_moments<2>(k, z, h);
}

}  // namespace detail

/// Cell moments of the kernel at every padded-lattice offset (offset ±n is unused and left 0).
inline KernelTable kernel_table(const Grid& g, const KernelSpec& k) {
  auto conv = PaddedConvolver::for_grid(g);
  const int d = g.dim(), n = g.points(), N = conv->padded_points();
  const double h = g.spacing();
  const std::size_t size = conv->padded_size();
  KernelTable t{std::vector<double>(size, 0.0), std::vector<std::vector<double>>(d, std::vector<double>(size, 0.0)),
                std::vector<double>(size, 0.0)};
  parallel_for(size, [&](std::size_t p) {
    std::vector<int> off(d);
    std::vector<double> z(d);
    std::size_t rem = p;
    for (int a = d - 1; a >= 0; --a) {
      int j = static_cast<int>(rem % N);
      rem /= N;
      if (j == n) return;  // offset ±n never occurs between grid nodes
      off[a] = j < n ? j : j - N;
      z[a] = off[a] * h;
    }
    auto m = detail::cell_moments(k, std::span<const double>(z), off.data(), h);
    t.average[p] = m.average;
    for (int a = 0; a < d; ++a) t.first[a][p] = m.first[a];
    t.second[p] = m.second;
  });
  return t;
}

namespace detail {
inline std::size_t spectra_bytes(const KernelSpectra& s) {
  return (s.average.size() * (2 + s.first.size())) * sizeof(std::complex<double>);
}
// Scans over many grids (dilation families) would otherwise keep every table alive.
inline constexpr std::size_t kKernelCacheBytes = std::size_t(1) << 30;
}  // namespace detail

/// Spectra of the kernel moments, cached per kernel and grid (oldest entries are
/// dropped once the cache exceeds 1 GiB).
inline std::shared_ptr<const KernelSpectra> kernel_spectra(const Grid& g, const KernelSpec& k) {
  static std::mutex m;
  static std::map<std::string, std::shared_ptr<const KernelSpectra>> cache;
  static std::deque<std::string> order;
  static std::size_t bytes = 0;
  const std::string full = k.key + "@" + g.fingerprint();
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(full);
    if (it != cache.end()) return it->second;
  }
  auto conv = PaddedConvolver::for_grid(g);
  KernelTable t = kernel_table(g, k);
  auto s = std::make_shared<KernelSpectra>();
  s->average = conv->transform_table(t.average);
  for (const auto& f : t.first) s->first.push_back(conv->transform_table(f));
  s->second = conv->transform_table(t.second);
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(full);
  if (it != cache.end()) return it->second;
  while (!order.empty() && bytes + detail::spectra_bytes(*s) > detail::kKernelCacheBytes) {
    auto old = cache.find(order.front());
    bytes -= detail::spectra_bytes(*old->second);
    cache.erase(old);
    order.pop_front();
  }
  cache.emplace(full, s);
  order.push_back(full);
  bytes += detail::spectra_bytes(*s);
  return s;
}

/// Transforms of f and, for the corrected rule, of its gradient and Laplacian.
struct FieldSpectra {
  ConvolutionRule rule;
  Spectrum value;
  std::vector<Spectrum> gradient;
  Spectrum laplacian;
};

inline FieldSpectra field_spectra(const ScalarField& f, ConvolutionRule rule) {
  auto conv = PaddedConvolver::for_grid(*f.grid);
  FieldSpectra out{rule, conv->transform_field(f.values), {}, {}};
  if (rule == ConvolutionRule::corrected) {
    VectorField grad = gradient_fourth_order(f);
    for (const auto& c : grad.components) out.gradient.push_back(conv->transform_field(c));
    out.laplacian = conv->transform_field(laplacian_fourth_order(f).values);
  }
  return out;
}

/// Σ_cells [K̄ f − m·∇f + ½ s Δf](v − z_c) h^d, the last two terms only for the corrected rule.
inline std::vector<double> convolve(const Grid& g, const KernelSpectra& k, const FieldSpectra& f) {
  auto conv = PaddedConvolver::for_grid(g);
  const std::size_t size = conv->spectrum_size();
  Spectrum prod(size);
  const bool corrected = f.rule == ConvolutionRule::corrected;
  const int d = g.dim();
  for (std::size_t i = 0; i < size; ++i) {
    std::complex<double> acc = k.average[i] * f.value[i];
    if (corrected) {
      for (int a = 0; a < d; ++a) acc -= k.first[a][i] * f.gradient[a][i];
      acc += 0.5 * k.second[i] * f.laplacian[i];
    }
    prod[i] = acc;
  }
  return conv->inverse(std::move(prod));
}

inline ScalarField convolve(const ScalarField& f, const KernelSpec& k, ConvolutionRule rule = ConvolutionRule::corrected) {
  if (!f.finite()) throw DomainError("convolve: non-finite input field");
  return ScalarField(f.grid, convolve(*f.grid, *kernel_spectra(*f.grid, k), field_spectra(f, rule)));
}

struct CoefficientFields {
  MatrixField A;
  VectorField b;
  ScalarField c;
};

namespace detail {
inline void check_density(const ScalarField& f, const char* where) {
  if (!f.finite()) throw DomainError(std::string(where) + ": non-finite input field");
  if (f.min() < 0.0) negative_input_warnings()++;
}
}  // namespace detail

/// A[f] = a∗f, b[f] = ∇·A[f] (fourth-order differences; b = ∇·a holds for
/// the kernels), c_γ[f] by convolution or −c_d f for Coulomb.
inline CoefficientFields coefficient_fields(const ScalarField& f, const Potential& pot,
                                            ConvolutionRule rule = ConvolutionRule::corrected) {
  detail::check_density(f, "coefficient_fields");
  const Grid& g = *f.grid;
  if (g.dim() != pot.d) throw GridMismatchError("coefficient_fields: potential dimension differs from grid");
  FieldSpectra fs = field_spectra(f, rule);
  CoefficientFields out{MatrixField(f.grid), VectorField(f.grid), ScalarField(f.grid)};
  const int d = g.dim();
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      out.A.components[MatrixField::packed(i, j, d)] = convolve(g, *kernel_spectra(g, a_kernel_spec(pot, i, j)), fs);
  for (int i = 0; i < d; ++i) {
    VectorField row(f.grid);
    for (int j = 0; j < d; ++j) row.components[j] = out.A.components[MatrixField::packed(std::min(i, j), std::max(i, j), d)];
    out.b.components[i] = divergence_fourth_order(row).values;
  }
  if (pot.coulomb()) {
    const double cd = coulomb_constant(d);
    for (std::size_t i = 0; i < g.size(); ++i) out.c.values[i] = -cd * f.values[i];
  } else {
    out.c.values = convolve(g, *kernel_spectra(g, power_kernel_spec(pot.gamma, -(d - 1.0) * (d + pot.gamma))), fs);
  }
  return out;
}

/// b∗f computed directly from the b kernel.
inline VectorField b_convolution(const ScalarField& f, const Potential& pot, ConvolutionRule rule = ConvolutionRule::corrected) {
  detail::check_density(f, "b_convolution");
  const Grid& g = *f.grid;
  FieldSpectra fs = field_spectra(f, rule);
  VectorField out(f.grid);
  for (int i = 0; i < g.dim(); ++i) out.components[i] = convolve(g, *kernel_spectra(g, b_kernel_spec(pot, i)), fs);
  return out;
}

/// coefficient·(|z|^β 1_{|z|≤radius}) ∗ f.
inline ScalarField convolve_power(const ScalarField& f, double beta, double coefficient = 1.0,
                                  double radius = std::numeric_limits<double>::infinity(),
                                  ConvolutionRule rule = ConvolutionRule::corrected) {
  return convolve(f, power_kernel_spec(beta, coefficient, radius), rule);
}

/// c_β[f] = −(d−1)(d+β)|·|^β ∗ f; at β = −d the local limit −c_d f.
inline ScalarField c_operator(const ScalarField& f, double beta, ConvolutionRule rule = ConvolutionRule::corrected) {
  const int d = f.grid->dim();
  if (beta < -d) throw DomainError("c_operator: exponent below −d");
  if (beta == -static_cast<double>(d)) {
    ScalarField out = f;
    out *= -coulomb_constant(d);
    return out;
  }
  return convolve_power(f, beta, -(d - 1.0) * (d + beta), std::numeric_limits<double>::infinity(), rule);
}

/// c̄_β[f]: the c kernel restricted to |z| ≤ radius. Needs β > −d.
inline ScalarField truncated_c(const ScalarField& f, double beta, double radius = 1.0,
                               ConvolutionRule rule = ConvolutionRule::corrected) {
  const int d = f.grid->dim();
  if (!(beta > -d))
    throw DomainError("truncated_c: exponent must exceed −d; for Coulomb call with exponent 1−d");
  if (!(radius > 0.0)) throw DomainError("truncated_c: radius must be positive");
  return convolve_power(f, beta, -(d - 1.0) * (d + beta), radius, rule);
}

inline ScalarField truncated_c(const ScalarField& f, const Potential& pot, double radius = 1.0,
                               ConvolutionRule rule = ConvolutionRule::corrected) {
  if (pot.coulomb()) throw DomainError("truncated_c: γ = −d needs the shifted exponent 1−d");
  return truncated_c(f, pot.gamma, radius, rule);
}

}  // namespace landau
