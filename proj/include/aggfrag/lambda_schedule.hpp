// Shattering-to-aggregation rate ratio lambda(t) as a piecewise-linear
// schedule. A single breakpoint means a constant ratio; outside the breakpoint
// range the end values are held.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "aggfrag/errors.hpp"

namespace aggfrag {

class LambdaSchedule {
 public:
  LambdaSchedule() : pts_{{0.0, 0.0}} {}

  explicit LambdaSchedule(double constant_value) : pts_{{0.0, constant_value}} {
    validate();
  }

  explicit LambdaSchedule(std::vector<std::pair<double, double>> breakpoints)
      : pts_(std::move(breakpoints)) {
    validate();
  }

  double operator()(double t) const {
    if (t <= pts_.front().first) return pts_.front().second;
    if (t >= pts_.back().first) return pts_.back().second;
    auto hi = std::upper_bound(
        pts_.begin(), pts_.end(), t,
        [](double val, const auto& p) { return val < p.first; });
    auto lo = hi - 1;
    const double w = (t - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
  }

  bool constant() const { return pts_.size() == 1; }
  const std::vector<std::pair<double, double>>& breakpoints() const { return pts_; }

 private:
  void validate() const {
    if (pts_.empty()) throw ConfigError("lambda: schedule needs at least one breakpoint");
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (!std::isfinite(pts_[i].first) || !std::isfinite(pts_[i].second))
        throw ConfigError("lambda: breakpoint " + std::to_string(i) + " is not finite");
      if (pts_[i].second < 0.0)
        throw ConfigError("lambda: value at t=" + std::to_string(pts_[i].first) +
                          " is negative");
      if (i > 0 && pts_[i].first <= pts_[i - 1].first)
        throw ConfigError("lambda: breakpoint times must be strictly increasing");
    }
  }

  std::vector<std::pair<double, double>> pts_;
};

}  // namespace aggfrag
