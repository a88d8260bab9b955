#pragma once

// Fermi-coordinate charts: one radial axis r plus 2n+1 boundary coordinates,
// sampled on a rectangular grid. Axis 0 is always r; boundary axes follow.

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace carnot {

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int count = 0;

  double step() const { return count > 1 ? (hi - lo) / (count - 1) : 0.0; }
  double coord(int i) const { return lo + step() * i; }
};

struct Grid {
  std::vector<GridAxis> axes;

  int naxes() const { return static_cast<int>(axes.size()); }
  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
    return n;
  }
  std::size_t flat(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int k = 0; k < naxes(); ++k) f = f * axes[k].count + idx[k];
    return f;
  }
  std::vector<int> unflat(std::size_t f) const {
    std::vector<int> idx(naxes());
    for (int k = naxes() - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(f % axes[k].count);
      f /= axes[k].count;
    }
    return idx;
  }
  void point(std::size_t f, double* out) const {
    for (int k = naxes() - 1; k >= 0; --k) {
      out[k] = axes[k].coord(static_cast<int>(f % axes[k].count));
      f /= axes[k].count;
    }
  }
  bool same_as(const Grid& o) const {
    if (naxes() != o.naxes()) return false;
    for (int k = 0; k < naxes(); ++k)
      if (axes[k].lo != o.axes[k].lo || axes[k].hi != o.axes[k].hi ||
          axes[k].count != o.axes[k].count)
        return false;
    return true;
  }
  // True if idx is at least `margin` samples away from every edge of every axis.
  bool interior(const std::vector<int>& idx, int margin) const {
    for (int k = 0; k < naxes(); ++k)
      if (idx[k] < margin || idx[k] >= axes[k].count - margin) return false;
    return true;
  }
};

/// One local Fermi chart: r in [r_min, r_max], boundary coordinates in base_box.
struct Chart {
  int dim_boundary = 3;                         // 2n+1
  double r_min = 0.0;
  double r_max = 1.0;
  std::vector<std::array<double, 2>> base_box;  // per boundary axis
  std::vector<int> grid_counts;                 // [n_r, n_1, ..., n_{2n+1}]
  double h_x = 1e-3;                            // model finite-difference step

  int dim() const { return dim_boundary + 1; }
  int n_complex() const { return (dim_boundary - 1) / 2; }

  void validate() const {
    if (dim_boundary < 3 || dim_boundary % 2 == 0)
      throw std::invalid_argument("chart.dim_boundary must be odd and >= 3");
    if (r_min < 0.0) throw std::invalid_argument("chart.r_min must be >= 0");
    if (r_max <= r_min) throw std::invalid_argument("chart.r_max must be > chart.r_min");
    if (static_cast<int>(base_box.size()) != dim_boundary)
      throw std::invalid_argument("chart.base_box must have dim_boundary intervals");
    for (const auto& b : base_box)
      if (b[1] <= b[0]) throw std::invalid_argument("chart.base_box intervals must be increasing");
    if (static_cast<int>(grid_counts.size()) != dim())
      throw std::invalid_argument("chart.grid must have 1+dim_boundary counts");
    for (int c : grid_counts)
      if (c < 5) throw std::invalid_argument("chart.grid must be >= 5");
    if (h_x <= 0.0) throw std::invalid_argument("chart.h_x must be positive");
  }

  /// Full grid over (r, x^1, ..., x^{2n+1}).
  Grid grid4() const {
    Grid g;
    g.axes.push_back({r_min, r_max, grid_counts[0]});
    for (int k = 0; k < dim_boundary; ++k)
      g.axes.push_back({base_box[k][0], base_box[k][1], grid_counts[k + 1]});
    return g;
  }

  /// Boundary grid over (x^1, ..., x^{2n+1}) only.
  Grid base_grid() const {
    Grid g;
    for (int k = 0; k < dim_boundary; ++k)
      g.axes.push_back({base_box[k][0], base_box[k][1], grid_counts[k + 1]});
    return g;
  }
};

}  // namespace carnot
