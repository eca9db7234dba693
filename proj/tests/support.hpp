#pragma once

// shared helpers for statistical test gates

#include <cmath>
#include <cstddef>
#include <vector>

namespace testsupport {

// Wilson score lower confidence bound at confidence z (1.96 ~ 95%)
inline double wilson_lower(long long successes, long long trials, double z = 1.959964) {
  if (trials == 0) return 0.0;
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = p + z2 / (2.0 * n);
  double margin = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return (center - margin) / denom;
}

inline double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return least_squares_slope(lx, ly);
}

}  // namespace testsupport
