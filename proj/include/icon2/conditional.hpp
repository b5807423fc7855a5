#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "icon2/types.hpp"

namespace icon2 {

/// Empirical P(e_j | a_i) for one class, counted over ground-truth
/// instances. Rows follow the sensitive schema's value order, columns the
/// explanatory schema's. Rows with zero support carry row_valid = false and
/// an all-zero probability row.
struct ConditionalDistribution {
  std::string sensitive;
  std::string explanatory;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd probabilities;
  Eigen::MatrixXd counts;
  std::vector<bool> row_valid;

  /// Valid row as value-label -> probability.
  std::map<std::string, double> row(std::size_t i) const;
};

/// Instances with an unknown value for either attribute are excluded from
/// the counts. Throws Error(Usage) when the class has no ground truth.
ConditionalDistribution conditional_distribution(const Dataset& dataset,
                                                 ClassId class_id,
                                                 std::string_view explanatory,
                                                 std::string_view sensitive);

/// ProxyAP for one sensitive value: sum_j P(e_j | a_i) * AP_{e_j}. Positive
/// mass on a value missing from ap_by_explanatory raises
/// Error(ProxyUndefined) naming the value. The row must sum to 1 (1e-9).
double proxy_ap(const std::map<std::string, double>& ap_by_explanatory,
                const std::map<std::string, double>& row);

/// Positional overload; entries of ap_by_col aligned with row. An undefined
/// AP is passed as NaN and raises Error(ProxyUndefined) if its mass is
/// positive.
double proxy_ap(const Eigen::VectorXd& ap_by_col, const Eigen::VectorXd& row);

}  // namespace icon2
