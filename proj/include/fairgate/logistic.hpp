#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairgate/error.hpp"
#include "fairgate/features.hpp"
#include "fairgate/math.hpp"

namespace fairgate {

struct LogisticRegression {
  std::vector<double> weights;
  double bias = 0.0;

  static LogisticRegression zeros(std::size_t dim) { return {std::vector<double>(dim, 0.0), 0.0}; }
};

struct SparseExample {
  SparseVector x;
  double y = 0.0;  // 1 = unfair
};

inline double lr_logit(const LogisticRegression& model, const SparseVector& x) {
  double t = model.bias;
  for (std::size_t k = 0; k < x.indices.size(); ++k) {
    const auto i = x.indices[k];
    if (i >= model.weights.size()) {
      throw ShapeError("feature index " + std::to_string(i) + " out of range for " +
                       std::to_string(model.weights.size()) + " weights");
    }
    t += model.weights[i] * x.values[k];
  }
  return t;
}

inline double lr_predict(const LogisticRegression& model, const SparseVector& x) {
  return sigmoid(lr_logit(model, x));
}

inline double lr_loss(const LogisticRegression& model, std::span<const SparseExample> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  double total = 0.0;
  for (const auto& ex : batch) total += bce_loss(lr_predict(model, ex.x), ex.y);
  return total / static_cast<double>(batch.size());
}

// Gradient of the mean BCE over the batch: mean of (p - y) x and (p - y).
inline LogisticRegression lr_gradients(const LogisticRegression& model,
                                       std::span<const SparseExample> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  auto grad = LogisticRegression::zeros(model.weights.size());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    const double residual = (lr_predict(model, ex.x) - ex.y) * scale;
    for (std::size_t k = 0; k < ex.x.indices.size(); ++k) {
      grad.weights[ex.x.indices[k]] += residual * ex.x.values[k];
    }
    grad.bias += residual;
  }
  return grad;
}

}  // namespace fairgate
