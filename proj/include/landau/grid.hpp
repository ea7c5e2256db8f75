#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "landau/error.hpp"
#include "landau/parallel.hpp"

namespace landau {

/// Compensated (Neumaier) running sum. Always fed in index order.
class Accumulator {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Cell-centered uniform lattice on [−L, L]^d with n points per axis.
class Grid {
 public:
  Grid(int n, double extent, int d = 3) : d_(d), n_(n), L_(extent) {
    if (d < 1) throw DomainError("grid dimension must be >= 1");
    if (n < 8 || n % 2 != 0) throw DomainError("grid needs an even n >= 8, got " + std::to_string(n));
    if (!(extent > 0.0) || !std::isfinite(extent)) throw DomainError("grid extent L must be positive");
    h_ = 2.0 * L_ / n_;
    size_ = 1;
    stride_.assign(d_, 1);
    for (int a = d_ - 1; a >= 0; --a) {
      stride_[a] = size_;
      size_ *= static_cast<std::size_t>(n_);
    }
    nodes_.resize(n_);
    for (int i = 0; i < n_; ++i) nodes_[i] = -L_ + (i + 0.5) * h_;
    r2_.resize(size_);
    for (std::size_t idx = 0; idx < size_; ++idx) {
      double s = 0.0;
      for (int a = 0; a < d_; ++a) {
        double x = nodes_[index(idx, a)];
        s += x * x;
      }
      r2_[idx] = s;
    }
  }
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int dim() const { return d_; }
  int points() const { return n_; }
  double extent() const { return L_; }
  double spacing() const { return h_; }
  double cell_volume() const { return std::pow(h_, d_); }
  std::size_t size() const { return size_; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  int index(std::size_t flat, int axis) const { return static_cast<int>((flat / stride_[axis]) % n_); }
  double node(int i) const { return nodes_[i]; }
  double coord(std::size_t flat, int axis) const { return nodes_[index(flat, axis)]; }
  double radius_squared(std::size_t flat) const { return r2_[flat]; }
  const std::vector<double>& radii_squared() const { return r2_; }

  /// ⟨v⟩^k at every node; computed on first request and kept for the grid's lifetime.
  const std::vector<double>& weight(double k) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = weights_.find(k);
    if (it != weights_.end()) return *it->second;
    auto w = std::make_unique<std::vector<double>>(size_);
    for (std::size_t i = 0; i < size_; ++i) (*w)[i] = std::pow(1.0 + r2_[i], 0.5 * k);
    const auto& ref = *w;
    weights_.emplace(k, std::move(w));
    return ref;
  }

  bool same_as(const Grid& o) const { return d_ == o.d_ && n_ == o.n_ && L_ == o.L_; }

  std::string fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    os << "d=" << d_ << ";n=" << n_ << ";L=" << L_;
    return os.str();
  }

 private:
  int d_;
  int n_;
  double L_;
  double h_;
  std::size_t size_;
  std::vector<std::size_t> stride_;
  std::vector<double> nodes_;
  std::vector<double> r2_;
  mutable std::mutex cache_mutex_;
  mutable std::map<double, std::unique_ptr<std::vector<double>>> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(int n, double extent, int d = 3) { return std::make_shared<const Grid>(n, extent, d); }

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!a.same_as(b)) throw GridMismatchError(std::string(where) + ": grid mismatch (" + a.fingerprint() + " vs " + b.fingerprint() + ")");
}

struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
  ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) throw GridMismatchError("scalar field size does not match grid");
  }

  /// Samples fn(v) at every node; v is a span of length d.
  template <class Fn>
  static ScalarField sample(GridPtr g, Fn&& fn) {
    ScalarField out(g);
    std::vector<double> v(g->dim());
    for (std::size_t i = 0; i < g->size(); ++i) {
      for (int a = 0; a < g->dim(); ++a) v[a] = g->coord(i, a);
      out.values[i] = fn(std::span<const double>(v));
    }
    return out;
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double min() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double x : values) m = std::min(m, x);
    return m;
  }
  double max() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double x : values) m = std::max(m, x);
    return m;
  }
  double max_abs() const {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::abs(x));
    return m;
  }
  bool finite() const {
    for (double x : values)
      if (!std::isfinite(x)) return false;
    return true;
  }
  bool nonnegative() const { return min() >= 0.0; }

  ScalarField& operator*=(double s) {
    for (double& x : values) x *= s;
    return *this;
  }
};

struct VectorField {
  GridPtr grid;
  std::vector<std::vector<double>> components;

  VectorField() = default;
  explicit VectorField(GridPtr g) : grid(std::move(g)), components(grid->dim(), std::vector<double>(grid->size(), 0.0)) {}
  bool finite() const {
    for (const auto& c : components)
      for (double x : c)
        if (!std::isfinite(x)) return false;
    return true;
  }
};

/// Symmetric d×d field stored as the d(d+1)/2 upper-triangle components.
struct MatrixField {
  GridPtr grid;
  std::vector<std::vector<double>> components;

  MatrixField() = default;
  explicit MatrixField(GridPtr g)
      : grid(std::move(g)), components(packed_count(grid->dim()), std::vector<double>(grid->size(), 0.0)) {}

  static int packed_count(int d) { return d * (d + 1) / 2; }
  static int packed(int i, int j, int d) {
    if (i > j) std::swap(i, j);
    return i * d - i * (i - 1) / 2 + (j - i);
  }
  double at(int i, int j, std::size_t node) const { return components[packed(i, j, grid->dim())][node]; }
  bool finite() const {
    for (const auto& c : components)
      for (double x : c)
        if (!std::isfinite(x)) return false;
    return true;
  }
};

namespace detail {

// Derivative along one axis. order 2: central interior, one-sided second-order
// rows at the two ends. order 4: five-point central where it fits, order-2 rows
// on the two outermost layers.
inline void axis_derivative(const Grid& g, const double* f, double* out, int axis, int order) {
  const int n = g.points();
  const std::size_t s = g.stride(axis);
  const double h = g.spacing();
  parallel_for(g.size(), [&](std::size_t idx) {
    int i = g.index(idx, axis);
    double val;
    if (order == 4 && i >= 2 && i <= n - 3) {
      val = (f[idx - 2 * s] - 8.0 * f[idx - s] + 8.0 * f[idx + s] - f[idx + 2 * s]) / (12.0 * h);
    } else if (i == 0) {
      val = (-3.0 * f[idx] + 4.0 * f[idx + s] - f[idx + 2 * s]) / (2.0 * h);
    } else if (i == n - 1) {
      val = (3.0 * f[idx] - 4.0 * f[idx - s] + f[idx - 2 * s]) / (2.0 * h);
    } else {
      val = (f[idx + s] - f[idx - s]) / (2.0 * h);
    }
    out[idx] = val;
  });
}

}  // namespace detail

/// Second-order central gradient with one-sided second-order boundary rows.
inline VectorField gradient(const ScalarField& f) {
  VectorField out(f.grid);
  for (int a = 0; a < f.grid->dim(); ++a)
    detail::axis_derivative(*f.grid, f.values.data(), out.components[a].data(), a, 2);
  return out;
}

/// Fourth-order interior stencil; used by the quadratic gradient functionals,
/// whose O(h²) bias at h = 0.5 is several percent with the plain stencil.
inline VectorField gradient_fourth_order(const ScalarField& f) {
  VectorField out(f.grid);
  for (int a = 0; a < f.grid->dim(); ++a)
    detail::axis_derivative(*f.grid, f.values.data(), out.components[a].data(), a, 4);
  return out;
}

/// Same stencil as gradient applied per component, so summation by parts is
/// exact for fields vanishing on the two outer layers.
inline ScalarField divergence(const VectorField& F) {
  const Grid& g = *F.grid;
  ScalarField out(F.grid);
  std::vector<double> tmp(g.size());
  for (int a = 0; a < g.dim(); ++a) {
    detail::axis_derivative(g, F.components[a].data(), tmp.data(), a, 2);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += tmp[i];
  }
  return out;
}

inline ScalarField divergence_fourth_order(const VectorField& F) {
  const Grid& g = *F.grid;
  ScalarField out(F.grid);
  std::vector<double> tmp(g.size());
  for (int a = 0; a < g.dim(); ++a) {
    detail::axis_derivative(g, F.components[a].data(), tmp.data(), a, 4);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += tmp[i];
  }
  return out;
}

/// Fourth-order Laplacian; values beyond the box are taken as 0.
inline ScalarField laplacian_fourth_order(const ScalarField& f) {
  const Grid& g = *f.grid;
  const int n = g.points();
  const double h2 = g.spacing() * g.spacing();
  ScalarField out(f.grid);
  const double* u = f.values.data();
  parallel_for(g.size(), [&](std::size_t idx) {
    double acc = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const std::size_t s = g.stride(a);
      const int i = g.index(idx, a);
      auto at = [&](int k) { return (i + k < 0 || i + k >= n) ? 0.0 : u[static_cast<std::ptrdiff_t>(idx) + k * static_cast<std::ptrdiff_t>(s)]; };
      if (i >= 2 && i <= n - 3)
        acc += (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12.0 * h2);
      else
        acc += (at(-1) - 2.0 * at(0) + at(1)) / h2;
    }
    out.values[idx] = acc;
  });
  return out;
}

/// Midpoint quadrature Σ f ⟨v⟩^k h^d, summed in index order.
inline double integrate(const ScalarField& f, double k = 0.0) {
  const Grid& g = *f.grid;
  Accumulator acc;
  if (k == 0.0) {
    for (double x : f.values) acc.add(x);
  } else {
    const auto& w = g.weight(k);
    for (std::size_t i = 0; i < g.size(); ++i) acc.add(f.values[i] * w[i]);
  }
  return acc.value() * g.cell_volume();
}

/// Σ a·b h^d.
inline double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(*a.grid, *b.grid, "inner");
  Accumulator acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc.add(a.values[i] * b.values[i]);
  return acc.value() * a.grid->cell_volume();
}

inline double inner(const VectorField& a, const VectorField& b) {
  require_same_grid(*a.grid, *b.grid, "inner");
  Accumulator acc;
  for (std::size_t i = 0; i < a.grid->size(); ++i)
    for (int c = 0; c < a.grid->dim(); ++c) acc.add(a.components[c][i] * b.components[c][i]);
  return acc.value() * a.grid->cell_volume();
}

/// ∫|∇g|² with the fourth-order stencil.
inline double gradient_energy(const ScalarField& g) {
  VectorField grad = gradient_fourth_order(g);
  return inner(grad, grad);
}

}  // namespace landau
