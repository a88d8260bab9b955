#pragma once

// r -> infinity limits of sampled scalar series. exp_fit models the tail as
// y = L + C e^{-b r}: a three-point elimination on equally spaced samples
// seeds (L, C, b), then b is refined by minimizing the profiled least-squares
// residual (L, C solved linearly for each b).
//
// Series produced by the radial pipeline decay down to a floor where
// integration noise (sometimes exponentially amplified) takes over, after
// which increments grow again. The fit window is therefore chosen
// adaptively: it ends where the increment magnitude bottoms out.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace carnot {

enum class ExtrapMode { plain, exp_fit };

struct ExtrapResult {
  double limit = 0.0;
  double residual = 0.0;  // rms misfit of the tail model (plain: last increment)
  double slope = std::numeric_limits<double>::quiet_NaN();  // decay rate b
  bool slope_valid = false;
  bool fallback = false;  // tail not usable for an exponential fit
  std::size_t window_lo = 0, window_hi = 0;  // sample indices actually used
};

namespace detail {

struct LinFit { double L = 0.0, C = 0.0, sse = 0.0; };

// least squares of y ~ L + C e^{-b r} over [i0, i1]
inline LinFit profile_fit(const std::vector<double>& r, const std::vector<double>& y,
                          std::size_t i0, std::size_t i1, double b) {
  const double n = static_cast<double>(i1 - i0 + 1);
  double s1 = 0, se = 0, see = 0, sy = 0, sey = 0;
  for (std::size_t i = i0; i <= i1; ++i) {
    const double e = std::exp(-b * (r[i] - r[i0]));  // shifted for conditioning
    s1 += 1; se += e; see += e * e; sy += y[i]; sey += e * y[i];
  }
  const double det = s1 * see - se * se;
  LinFit f;
  if (std::abs(det) < 1e-300) { f.L = sy / n; f.C = 0.0; }
  else {
    f.L = (see * sy - se * sey) / det;
    f.C = (s1 * sey - se * sy) / det;
  }
  for (std::size_t i = i0; i <= i1; ++i) {
    const double e = std::exp(-b * (r[i] - r[i0]));
    const double d = y[i] - f.L - f.C * e;
    f.sse += d * d;
  }
  return f;
}

}  // namespace detail

inline ExtrapResult extrapolate_limit(const std::vector<double>& r,
                                      const std::vector<double>& y,
                                      ExtrapMode mode = ExtrapMode::exp_fit,
                                      double window_fraction = 1.0 / 3.0) {
  if (r.size() != y.size() || r.size() < 2)
    throw std::invalid_argument("extrapolate_limit: series too short");
  ExtrapResult out;
  if (mode == ExtrapMode::plain) {
    out.limit = y.back();
    out.residual = std::abs(y[y.size() - 1] - y[y.size() - 2]);
    out.window_lo = y.size() - 2;
    out.window_hi = y.size() - 1;
    return out;
  }
  const std::size_t n = y.size();
  if (n < 6) throw std::invalid_argument("extrapolate_limit: need >= 6 samples");

  // smoothed increment magnitudes
  std::vector<double> inc(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) inc[k] = std::abs(y[k + 1] - y[k]);
  std::vector<double> sm(inc.size());
  for (std::size_t k = 0; k < inc.size(); ++k) {
    const std::size_t a = k > 0 ? k - 1 : 0;
    const std::size_t b = std::min(k + 1, inc.size() - 1);
    double m[3] = {inc[a], inc[k], inc[b]};
    std::sort(m, m + 3);
    sm[k] = m[1];
  }
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  double inc_min = 1e300;
  for (double v : sm) inc_min = std::min(inc_min, v);

  // constant series (all increments at rounding level)
  if (inc_min <= 1e-15 * std::max(scale, 1.0)) {
    double worst = 0.0;
    for (double v : sm) worst = std::max(worst, v);
    if (worst <= 64 * 1e-15 * std::max(scale, 1.0)) {
      out.limit = y.back();
      out.residual = worst;
      out.window_lo = 0;
      out.window_hi = n - 1;
      return out;
    }
  }

  // the window ends where increments bottom out (amplified noise beyond)
  std::size_t k_hi = inc.size() - 1;
  {
    std::size_t k_min = 0;
    for (std::size_t k = 0; k < sm.size(); ++k)
      if (sm[k] < sm[k_min]) k_min = k;
    k_hi = k_min;
    while (k_hi + 1 < sm.size() && sm[k_hi + 1] <= 2.0 * sm[k_min]) ++k_hi;
  }
  std::size_t end = std::min(k_hi + 1, n - 1);
  const std::size_t want =
      std::max<std::size_t>(6, static_cast<std::size_t>(std::ceil(window_fraction * n)));
  std::size_t lo = end + 1 >= want ? end + 1 - want : 0;
  if (end - lo + 1 < 4) lo = (end >= 5 ? end - 5 : 0);
  out.window_lo = lo;
  out.window_hi = end;

  // monotone decay inside the window?
  int flips = 0, steps = 0;
  const double sgn0 = y[lo + 1] >= y[lo] ? 1.0 : -1.0;
  for (std::size_t k = lo; k < end; ++k, ++steps)
    if ((y[k + 1] - y[k]) * sgn0 < 0) ++flips;
  const bool monotone = steps > 0 && flips * 10 <= steps;

  auto window_mean = [&]() {
    // flat / noisy window: the mean of the tail half is the honest limit
    const std::size_t mid = lo + (end - lo) / 2;
    double mean = 0.0;
    for (std::size_t k = mid; k <= end; ++k) mean += y[k];
    mean /= static_cast<double>(end - mid + 1);
    double var = 0.0;
    for (std::size_t k = mid; k <= end; ++k) var += (y[k] - mean) * (y[k] - mean);
    out.limit = mean;
    out.residual = std::sqrt(var / static_cast<double>(end - mid + 1));
    out.fallback = true;
    return out;
  };
  if (!monotone) return window_mean();

  // three equally spaced points for the seed
  const std::size_t span2 = (end - lo) / 2;
  const std::size_t ia = end - 2 * span2, ib = end - span2, ic = end;
  const double d1 = y[ib] - y[ia], d2 = y[ic] - y[ib];
  double b_seed = 0.0;
  if (d1 != 0.0) {
    const double q = d2 / d1;
    if (q > 0.0 && q < 1.0) b_seed = -std::log(q) / (r[ib] - r[ia]);
  }
  if (b_seed <= 0.0) {
    out.limit = y.back();
    out.residual = std::abs(y[n - 1] - y[n - 2]);
    out.fallback = true;
    return out;
  }

  // golden-section refinement of the profiled SSE over b
  double blo = b_seed / 3.0, bhi = b_seed * 3.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = bhi - gr * (bhi - blo), x2 = blo + gr * (bhi - blo);
  double f1 = detail::profile_fit(r, y, lo, end, x1).sse;
  double f2 = detail::profile_fit(r, y, lo, end, x2).sse;
  for (int it = 0; it < 80; ++it) {
    if (f1 > f2) { blo = x1; x1 = x2; f1 = f2; x2 = blo + gr * (bhi - blo); f2 = detail::profile_fit(r, y, lo, end, x2).sse; }
    else         { bhi = x2; x2 = x1; f2 = f1; x1 = bhi - gr * (bhi - blo); f1 = detail::profile_fit(r, y, lo, end, x1).sse; }
  }
  const double b = 0.5 * (blo + bhi);
  const auto fit = detail::profile_fit(r, y, lo, end, b);
  // trust guards: a near-zero rate is indistinguishable from a linear drift
  // and extrapolates without bound, and the limit correction should never
  // dwarf the variation actually observed in the window
  const double span = r[end] - r[lo];
  double wmin = y[lo], wmax = y[lo];
  for (std::size_t k = lo; k <= end; ++k) {
    wmin = std::min(wmin, y[k]);
    wmax = std::max(wmax, y[k]);
  }
  if (b * span < 0.8 || std::abs(fit.L - y[end]) > 10.0 * (wmax - wmin))
    return window_mean();
  out.limit = fit.L;
  out.residual = std::sqrt(fit.sse / static_cast<double>(end - lo + 1));
  out.slope = b;
  out.slope_valid = true;
  return out;
}

}  // namespace carnot
