#include "icon2/spread.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "icon2/errors.hpp"

namespace icon2 {

SpreadStats ap_spread(const std::map<std::string, double>& values,
                      Estimator estimator) {
  const auto n = static_cast<Eigen::Index>(values.size());
  if (n < 2) {
    throw Error(ErrorCode::SpreadUndefined,
                "spread needs at least 2 attribute values, got " +
                    std::to_string(values.size()));
  }
  Eigen::VectorXd ap(n);
  Eigen::Index i = 0;
  for (const auto& [value, fraction] : values) ap[i++] = fraction;

  SpreadStats stats;
  stats.values = values;
  stats.estimator = estimator;
  stats.mean = ap.mean();
  const auto divisor =
      static_cast<double>(estimator == Estimator::Sample ? n - 1 : n);
  stats.variance = (ap.array() - stats.mean).square().sum() / divisor;
  stats.std = std::sqrt(stats.variance);
  return stats;
}

}  // namespace icon2
