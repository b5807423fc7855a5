#include "icon2/conditional.hpp"

#include <cmath>

#include "icon2/errors.hpp"

namespace icon2 {

namespace {

constexpr double kRowSumTolerance = 1e-9;

void check_row_sum(double sum) {
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw Error(ErrorCode::Usage,
                "distribution row must sum to 1, got " + std::to_string(sum));
  }
}

}  // namespace

std::map<std::string, double> ConditionalDistribution::row(
    std::size_t i) const {
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < col_labels.size(); ++j) {
    out[col_labels[j]] = probabilities(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(j));
  }
  return out;
}

ConditionalDistribution conditional_distribution(const Dataset& dataset,
                                                 ClassId class_id,
                                                 std::string_view explanatory,
                                                 std::string_view sensitive) {
  const AttributeSchema& sens = dataset.schema(sensitive);
  const AttributeSchema& expl = dataset.schema(explanatory);
  const int sens_idx = dataset.schema_index(sensitive);
  const int expl_idx = dataset.schema_index(explanatory);

  ConditionalDistribution dist;
  dist.sensitive = sens.name;
  dist.explanatory = expl.name;
  dist.row_labels = sens.values;
  dist.col_labels = expl.values;

  const auto rows = static_cast<Eigen::Index>(sens.values.size());
  const auto cols = static_cast<Eigen::Index>(expl.values.size());
  dist.counts = Eigen::MatrixXd::Zero(rows, cols);

  bool class_seen = false;
  for (std::size_t g = 0; g < dataset.ground_truth.size(); ++g) {
    if (dataset.ground_truth[g].class_id != class_id) continue;
    class_seen = true;
    const std::int32_t a =
        dataset.instance_value(sens_idx, static_cast<std::int32_t>(g));
    const std::int32_t e =
        dataset.instance_value(expl_idx, static_cast<std::int32_t>(g));
    if (a == kUnknownValue || e == kUnknownValue) continue;
    dist.counts(a, e) += 1.0;
  }
  if (!class_seen) {
    throw Error(ErrorCode::Usage, "class " + std::to_string(class_id) +
                                      " has no ground truth instances");
  }

  dist.probabilities = Eigen::MatrixXd::Zero(rows, cols);
  dist.row_valid.assign(static_cast<std::size_t>(rows), false);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double total = dist.counts.row(i).sum();
    if (total <= 0) continue;
    dist.probabilities.row(i) = dist.counts.row(i) / total;
    dist.row_valid[static_cast<std::size_t>(i)] = true;
  }
  return dist;
}

double proxy_ap(const std::map<std::string, double>& ap_by_explanatory,
                const std::map<std::string, double>& row) {
  double sum = 0;
  for (const auto& [value, mass] : row) sum += mass;
  check_row_sum(sum);

  double proxy = 0;
  for (const auto& [value, mass] : row) {
    if (mass <= 0) continue;
    const auto it = ap_by_explanatory.find(value);
    if (it == ap_by_explanatory.end() || std::isnan(it->second)) {
      throw Error(ErrorCode::ProxyUndefined,
                  "ProxyAP undefined: value '" + value +
                      "' has positive mass but no defined AP");
    }
    proxy += mass * it->second;
  }
  return proxy;
}

double proxy_ap(const Eigen::VectorXd& ap_by_col, const Eigen::VectorXd& row) {
  if (ap_by_col.size() != row.size()) {
    throw Error(ErrorCode::Usage, "ProxyAP inputs must have equal length");
  }
  check_row_sum(row.sum());
  double proxy = 0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (row[j] <= 0) continue;
    if (std::isnan(ap_by_col[j])) {
      throw Error(ErrorCode::ProxyUndefined,
                  "ProxyAP undefined: column " + std::to_string(j) +
                      " has positive mass but no defined AP");
    }
    proxy += row[j] * ap_by_col[j];
  }
  return proxy;
}

}  // namespace icon2
