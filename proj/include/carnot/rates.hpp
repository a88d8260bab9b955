#pragma once

// Log-linear decay-rate estimation and classification into the three decay
// regimes (a < 3/2, a = 3/2, a > 3/2). Measured slopes are one-sided
// evidence: a quantity may decay faster than its predicted rate, never
// slower, so verdicts distinguish "rate = predicted" from "rate >= predicted".

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace carnot {

enum class Regime { sub_3_2, border_3_2, super_3_2, none };

inline const char* to_string(Regime reg) {
  switch (reg) {
    case Regime::sub_3_2: return "sub_3_2";
    case Regime::border_3_2: return "border_3_2";
    case Regime::super_3_2: return "super_3_2";
    case Regime::none: return "none";
  }
  return "?";
}

struct DecayFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = 0.0;       // log-amplitude at r = 0
  double r_lo = 0.0, r_hi = 0.0;
  double rms_residual = 0.0;    // in log space
  bool log_corrected = false;   // fit form (r+1) e^{-b r}
  Regime regime = Regime::none;
  int clamped_points = 0;       // values clamped to the noise floor
};

/// Least squares of log(value) against r; with allow_log also fits
/// log(value) - log(r+1) and keeps the lower-residual model.
inline DecayFit fit_decay(const std::vector<double>& r, const std::vector<double>& value,
                          bool allow_log = false, double r_lo = -1e300, double r_hi = 1e300) {
  if (r.size() != value.size()) throw std::invalid_argument("fit_decay: size mismatch");
  std::vector<double> xs, ys;
  DecayFit out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < r_lo || r[i] > r_hi) continue;
    double v = value[i];
    if (!std::isfinite(v)) throw std::invalid_argument("fit_decay: non-finite value");
    if (v <= 0.0) { v = 1e-14; ++out.clamped_points; }
    xs.push_back(r[i]);
    ys.push_back(std::log(v));
  }
  if (xs.size() < 6) throw std::invalid_argument("fit_decay: fewer than 6 usable samples");
  out.r_lo = xs.front();
  out.r_hi = xs.back();

  auto lsq = [&](bool logc, double& slope, double& icept) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double yi = ys[i] - (logc ? std::log(xs[i] + 1.0) : 0.0);
      sx += xs[i]; sy += yi; sxx += xs[i] * xs[i]; sxy += xs[i] * yi;
    }
    const double m = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    slope = -m;
    icept = (sy - m * sx) / n;
    double sse = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double yi = ys[i] - (logc ? std::log(xs[i] + 1.0) : 0.0);
      const double d = yi - (icept - slope * xs[i]);
      sse += d * d;
    }
    return std::sqrt(sse / n);
  };

  double b0, c0, b1, c1;
  const double res0 = lsq(false, b0, c0);
  out.slope = b0;
  out.intercept = c0;
  out.rms_residual = res0;
  if (allow_log) {
    const double res1 = lsq(true, b1, c1);
    if (res1 < res0) {
      out.slope = b1;
      out.intercept = c1;
      out.rms_residual = res1;
      out.log_corrected = true;
    }
  }
  // near-constant series carry no decay information
  if (std::abs(out.slope) < 1e-3) {
    out.regime = Regime::none;
    return out;
  }
  if (std::abs(out.slope - 1.5) < 0.02) out.regime = Regime::border_3_2;
  else if (out.slope < 1.5) out.regime = Regime::sub_3_2;
  else out.regime = Regime::super_3_2;
  return out;
}

/// Predicted decay rate of a tracked quantity as a function of the nominal
/// order a. Keys follow the series names emitted by the pipeline.
inline double predicted_rate(const std::string& quantity, double a) {
  if (quantity == "alch" || quantity == "ak" || quantity == "alch_plus" ||
      quantity == "ak_plus" || quantity == "beta")
    return a;
  if (quantity == "eta0") return std::min(a, 1.5);
  if (quantity == "eta_j" || quantity == "gamma" || quantity == "shape_limit" ||
      quantity == "xi0" || quantity == "phi")
    return std::min(a - 0.5, 1.0);
  if (quantity == "g_ghat") return std::min(a - 1.0, 0.5);
  throw std::invalid_argument("predicted_rate: unknown quantity " + quantity);
}

struct RegimeVerdict {
  bool pass = false;
  bool exact_match = false;   // |slope - predicted| within band
  bool faster = false;        // slope exceeds predicted beyond band
  double predicted = 0.0;
  double band = 0.0;
  bool at_knee = false;       // nominal a at the 3/2 knee: report only
  std::string note;
};

/// Compares a measured fit against the predicted rate. O(.) estimates are
/// upper bounds, so measured decay faster than predicted still passes; the
/// verdict records whether the rate matched or exceeded the prediction. At
/// the a = 3/2 knee the log factor cannot be certified from data; the
/// verdict carries a note instead of a hard call.
inline RegimeVerdict classify_regime(double a_nominal, const DecayFit& fit,
                                     const std::string& quantity,
                                     double rel_band = 0.15, double abs_band = 0.05) {
  if (fit.regime == Regime::none && !std::isfinite(fit.slope))
    throw std::invalid_argument("classify_regime: fit invalid");
  RegimeVerdict v;
  v.predicted = predicted_rate(quantity, a_nominal);
  v.band = rel_band * std::abs(v.predicted) + abs_band;
  // the rate maps of the boundary quantities all kink at a = 3/2, where the
  // predicted decay carries a log factor; the pure-exponential quantities
  // (alch, ak, beta) have no knee
  const bool has_knee = quantity != "alch" && quantity != "ak" && quantity != "alch_plus" &&
                        quantity != "ak_plus" && quantity != "beta";
  v.at_knee = has_knee && std::abs(a_nominal - 1.5) < 0.01;
  v.exact_match = std::abs(fit.slope - v.predicted) <= v.band;
  v.faster = fit.slope > v.predicted + v.band;
  v.pass = v.exact_match || v.faster;
  if (v.at_knee)
    v.note = "nominal order at the 3/2 knee: log factor not separable; "
             "log_corrected=" + std::string(fit.log_corrected ? "true" : "false");
  else if (v.faster)
    v.note = "rate >= predicted (one-sided bound)";
  else if (v.exact_match)
    v.note = "rate = predicted";
  else
    v.note = "rate below predicted band";
  return v;
}

}  // namespace carnot
