#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "cubqmc/errors.hpp"
#include "cubqmc/sequences.hpp"

namespace cubqmc {

/// A p-output integrand over [0,1)^d. `evaluate` must be pure: the engine may call it
/// from several threads and expects identical results for identical x.
struct Integrand {
  std::size_t dimension = 0;
  std::size_t outputs = 1;
  std::function<void(std::span<const double> x, std::span<double> y)> evaluate;
};

template <class F>
Integrand scalar_integrand(std::size_t dimension, F f) {
  return {dimension, 1, [f = std::move(f)](std::span<const double> x, std::span<double> y) {
            y[0] = f(x);
          }};
}

/// Evaluate f on every row of `batch`, appending output k to `columns[k]`.
/// Throws EvaluationError naming the sequence index of the first non-finite value.
inline void evaluate_into(const Integrand& f, const PointBatch& batch,
                          std::vector<std::vector<double>>& columns) {
  std::vector<double> y(f.outputs);
  for (auto& c : columns) c.reserve(c.size() + batch.count);
  for (std::size_t i = 0; i < batch.count; ++i) {
    f.evaluate(batch.row(i), y);
    for (std::size_t k = 0; k < f.outputs; ++k) {
      if (!std::isfinite(y[k])) throw EvaluationError(batch.start + i, k);
      columns[k].push_back(y[k]);
    }
  }
}

}  // namespace cubqmc
