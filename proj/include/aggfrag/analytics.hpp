// Observables and diagnostics: moments, distribution error norms, oscillation
// classification, and log-log convergence slopes. Pure functions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aggfrag/size_distribution.hpp"

namespace aggfrag {

// Moment series on a strictly increasing time grid. values[oi][ti] is
// M_{orders[oi]} at times[ti]; se mirrors values when an ensemble standard
// error is available and is empty otherwise.
struct MomentSeries {
  std::vector<int> orders;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> se;
};

// M_k = sum s^k n_s. k is capped at 8: s^k on 64-bit sizes overflows double
// precision headroom quickly beyond that.
inline double moment(const SizeDistribution& dist, int k) {
  if (k < 0 || k > 8) throw std::domain_error("moment: order must be in [0, 8]");
  double m = 0.0;
  for (std::size_t i = 0; i < dist.sizes.size(); ++i)
    m += std::pow(static_cast<double>(dist.sizes[i]), k) * dist.concentrations[i];
  return m;
}

// sqrt of the summed squared concentration differences over the union of the
// two supports; absent sizes count as zero.
inline double euclidean_error(const SizeDistribution& a, const SizeDistribution& b) {
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.sizes.size() || j < b.sizes.size()) {
    double d;
    if (j >= b.sizes.size() || (i < a.sizes.size() && a.sizes[i] < b.sizes[j])) {
      d = a.concentrations[i];
      ++i;
    } else if (i >= a.sizes.size() || b.sizes[j] < a.sizes[i]) {
      d = b.concentrations[j];
      ++j;
    } else {
      d = a.concentrations[i] - b.concentrations[j];
      ++i;
      ++j;
    }
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Least-squares slope of log(error) against log(N). Requires at least three
// points spanning two decades in N.
inline double convergence_slope(const std::vector<std::pair<double, double>>& errors) {
  if (errors.size() < 3)
    throw std::domain_error("convergence_slope: need at least 3 points");
  double lo = errors.front().first, hi = errors.front().first;
  for (const auto& [n, e] : errors) {
    if (!(n > 0.0) || !(e > 0.0))
      throw std::domain_error("convergence_slope: N and error must be positive");
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  if (hi < lo * 100.0 * (1.0 - 1e-12))
    throw std::domain_error("convergence_slope: N values must span >= 2 decades");
  double sx = 0, sy = 0;
  for (const auto& [n, e] : errors) {
    sx += std::log(n);
    sy += std::log(e);
  }
  const double mx = sx / errors.size(), my = sy / errors.size();
  double num = 0, den = 0;
  for (const auto& [n, e] : errors) {
    const double dx = std::log(n) - mx;
    num += dx * (std::log(e) - my);
    den += dx * dx;
  }
  return num / den;
}

enum class OscillationClass {
  Steady,             // sustained cycles, stable amplitude
  Damped,             // cycles present but amplitude shrinking
  Growing,            // amplitude still building up
  Flat,               // no oscillation above the noise floor
  InsufficientCycles  // too few peaks to judge (diagnostic, not a failure)
};

inline const char* oscillation_class_name(OscillationClass c) {
  switch (c) {
    case OscillationClass::Steady: return "steady";
    case OscillationClass::Damped: return "damped";
    case OscillationClass::Growing: return "growing";
    case OscillationClass::Flat: return "flat";
    case OscillationClass::InsufficientCycles: return "insufficient_cycles";
  }
  return "?";
}

struct OscillationOptions {
  double transient_fraction = 0.25;     // of the time span, discarded up front
  double smooth_window_fraction = 0.01; // moving-average width / analyzed span
  double steady_ratio_lo = 0.5;         // amplitude_trend_ratio band for "steady"
  double steady_ratio_hi = 2.0;
  double amplitude_noise_factor = 5.0;  // mean amplitude must exceed this x noise
  std::size_t min_cycles = 4;
};

struct OscillationMetrics {
  OscillationClass classification = OscillationClass::InsufficientCycles;
  std::vector<double> peak_times;
  std::vector<double> amplitudes;       // peak minus mean of adjacent troughs
  double mean_period = 0.0;
  double mean_amplitude = 0.0;
  double amplitude_trend_ratio = 0.0;   // mean amplitude, last third / middle third
  double noise_floor = 0.0;
};

// Peak-based oscillation diagnostics of a single scalar trace. The series is
// smoothed with a centered moving average before extremum detection; peaks
// weaker than the noise floor are discarded. The noise floor is the mean
// ensemble standard error when `se` is provided, otherwise the RMS residual
// between the raw and smoothed series. Thresholds are artifact choices, not
// published values.
inline OscillationMetrics oscillation_metrics(const std::vector<double>& times,
                                              const std::vector<double>& values,
                                              const std::vector<double>& se = {},
                                              OscillationOptions opts = {}) {
  if (times.size() != values.size())
    throw std::domain_error("oscillation_metrics: times/values length mismatch");
  if (!se.empty() && se.size() != values.size())
    throw std::domain_error("oscillation_metrics: se length mismatch");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::domain_error("oscillation_metrics: time grid must be strictly increasing");

  OscillationMetrics out;
  if (times.size() < 8) return out;

  const double t0 = times.front(), t1 = times.back();
  const double cut = t0 + opts.transient_fraction * (t1 - t0);
  std::size_t begin = 0;
  while (begin < times.size() && times[begin] < cut) ++begin;
  const std::size_t n = times.size() - begin;
  if (n < 8) return out;

  // centered moving average; window measured in time and converted to points
  // via the median sample spacing
  std::vector<double> dts;
  dts.reserve(n - 1);
  for (std::size_t i = begin + 1; i < times.size(); ++i)
    dts.push_back(times[i] - times[i - 1]);
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double dt_med = dts[dts.size() / 2];
  const double span = times.back() - times[begin];
  std::size_t half = static_cast<std::size_t>(
      std::max(0.0, std::round(0.5 * opts.smooth_window_fraction * span / dt_med)));

  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += values[begin + j];
    smooth[i] = acc / static_cast<double>(hi - lo + 1);
  }

  if (!se.empty()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += se[begin + i];
    out.noise_floor = acc / static_cast<double>(n);
  } else {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = values[begin + i] - smooth[i];
      acc += r * r;
    }
    out.noise_floor = std::sqrt(acc / static_cast<double>(n));
  }

  // local extrema of the smoothed trace; ties broken toward the leftmost point
  std::vector<std::size_t> peaks, troughs;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1]) peaks.push_back(i);
    else if (smooth[i] < smooth[i - 1] && smooth[i] <= smooth[i + 1]) troughs.push_back(i);
  }

  // amplitude = peak minus the mean of the nearest troughs on each side;
  // edge peaks without both neighbours are dropped, as are peaks weaker than
  // the noise floor
  for (const std::size_t p : peaks) {
    auto it = std::lower_bound(troughs.begin(), troughs.end(), p);
    if (it == troughs.begin() || it == troughs.end()) continue;
    const double base = 0.5 * (smooth[*(it - 1)] + smooth[*it]);
    const double amp = smooth[p] - base;
    if (amp <= out.noise_floor) continue;
    out.peak_times.push_back(times[begin + p]);
    out.amplitudes.push_back(amp);
  }

  if (out.peak_times.size() >= 2) {
    out.mean_period = (out.peak_times.back() - out.peak_times.front()) /
                      static_cast<double>(out.peak_times.size() - 1);
  }
  if (!out.amplitudes.empty()) {
    double acc = 0.0;
    for (const double a : out.amplitudes) acc += a;
    out.mean_amplitude = acc / static_cast<double>(out.amplitudes.size());
  }

  if (out.peak_times.size() < opts.min_cycles) {
    // a long trace whose smoothed range stays inside the noise band is flat,
    // not inconclusive; a degenerate (noise-free) trace stays inconclusive
    const auto [lo_it, hi_it] = std::minmax_element(smooth.begin(), smooth.end());
    out.classification = out.noise_floor > 0.0 &&
                                 *hi_it - *lo_it <=
                                     opts.amplitude_noise_factor * out.noise_floor
                             ? OscillationClass::Flat
                             : OscillationClass::InsufficientCycles;
    return out;
  }

  const double ta = times[begin], tb = times.back();
  const double third = (tb - ta) / 3.0;
  double mid_acc = 0.0, last_acc = 0.0;
  std::size_t mid_n = 0, last_n = 0;
  for (std::size_t i = 0; i < out.peak_times.size(); ++i) {
    const double t = out.peak_times[i];
    if (t >= ta + third && t < ta + 2.0 * third) {
      mid_acc += out.amplitudes[i];
      ++mid_n;
    } else if (t >= ta + 2.0 * third) {
      last_acc += out.amplitudes[i];
      ++last_n;
    }
  }
  if (mid_n == 0 || last_n == 0) {
    out.classification = OscillationClass::InsufficientCycles;
    return out;
  }
  out.amplitude_trend_ratio = (last_acc / last_n) / (mid_acc / mid_n);

  if (out.mean_amplitude <= opts.amplitude_noise_factor * out.noise_floor)
    out.classification = OscillationClass::Flat;
  else if (out.amplitude_trend_ratio < opts.steady_ratio_lo)
    out.classification = OscillationClass::Damped;
  else if (out.amplitude_trend_ratio > opts.steady_ratio_hi)
    out.classification = OscillationClass::Growing;
  else
    out.classification = OscillationClass::Steady;
  return out;
}

}  // namespace aggfrag
