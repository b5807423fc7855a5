#pragma once

#include <map>
#include <string>

#include "icon2/config.hpp"

namespace icon2 {

/// Performance spread across the values of one attribute. All quantities
/// are AP fractions; reports render percentage points.
struct SpreadStats {
  double mean = 0;
  double variance = 0;
  double std = 0;
  std::map<std::string, double> values;  // attribute value -> AP fraction
  Estimator estimator = Estimator::Sample;
};

/// Mean and variance of the AP values; divisor |A| - 1 for the sample
/// estimator, |A| for population. Throws Error(SpreadUndefined) for fewer
/// than two values.
SpreadStats ap_spread(const std::map<std::string, double>& values,
                      Estimator estimator);

}  // namespace icon2
