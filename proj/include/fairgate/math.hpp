#pragma once

#include <algorithm>
#include <cmath>

namespace fairgate {

// Logistic function, evaluated without overflow for any finite t.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline constexpr double kProbabilityEpsilon = 1e-12;

// Binary cross-entropy with p clamped to [eps, 1 - eps].
inline double bce_loss(double p, double y) {
  const double q = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  // An exact 0/1 target and a saturated prediction on the right side give 0.
  if (y == 1.0 && p >= 1.0) return 0.0;
  if (y == 0.0 && p <= 0.0) return 0.0;
  return -(y * std::log(q) + (1.0 - y) * std::log1p(-q));
}

}  // namespace fairgate
