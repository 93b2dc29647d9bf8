#pragma once

#include <cmath>
#include <span>

#include "perfml/error.hpp"

namespace perfml {

namespace detail {
inline void check_lengths(std::span<const double> predictions, std::span<const double> actuals) {
  if (predictions.size() != actuals.size())
    throw Error("metric: " + std::to_string(predictions.size()) + " predictions vs " +
                std::to_string(actuals.size()) + " actuals");
  if (actuals.empty()) throw Error("metric: empty input");
}
} // namespace detail

/// Mean absolute error, in the units of the target.
inline double mae(std::span<const double> predictions, std::span<const double> actuals) {
  detail::check_lengths(predictions, actuals);
  double sum = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) sum += std::abs(predictions[i] - actuals[i]);
  return sum / static_cast<double>(actuals.size());
}

/// Relative absolute error: sum |pred - actual| / sum |actual - mean(actual)|.
/// Predicting the mean scores exactly 1.
inline double rae(std::span<const double> predictions, std::span<const double> actuals) {
  detail::check_lengths(predictions, actuals);
  double mean = 0.0;
  for (double a : actuals) mean += a;
  mean /= static_cast<double>(actuals.size());
  double err = 0.0, dev = 0.0;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    err += std::abs(predictions[i] - actuals[i]);
    dev += std::abs(actuals[i] - mean);
  }
  if (dev == 0.0) throw Error("RAE undefined for constant target");
  return err / dev;
}

} // namespace perfml
