#include "icon2/ranking.hpp"

#include <algorithm>
#include <set>

#include "icon2/conditional.hpp"
#include "icon2/errors.hpp"
#include "icon2/evaluation.hpp"
#include "icon2/spread.hpp"

namespace icon2 {

std::vector<RankingEntry> rank_confounders(
    const Dataset& dataset, ClassId class_id, std::string_view sensitive,
    const std::vector<std::string>& explanatory_set,
    const AnalysisConfig& cfg) {
  if (explanatory_set.empty()) {
    throw Error(ErrorCode::Usage, "explanatory attribute set is empty");
  }
  const AttributeSchema& sens = dataset.schema(sensitive);
  const int sens_idx = dataset.schema_index(sensitive);
  {
    std::set<std::int32_t> supported;
    for (std::size_t g = 0; g < dataset.ground_truth.size(); ++g) {
      if (dataset.ground_truth[g].class_id != class_id) continue;
      const std::int32_t a =
          dataset.instance_value(sens_idx, static_cast<std::int32_t>(g));
      if (a != kUnknownValue) supported.insert(a);
    }
    if (supported.size() < 2) {
      throw Error(ErrorCode::Usage,
                  "sensitive attribute '" + sens.name +
                      "' needs at least 2 values with support for class " +
                      std::to_string(class_id));
    }
  }

  std::vector<RankingEntry> entries;
  entries.reserve(explanatory_set.size());
  for (const std::string& attr : explanatory_set) {
    RankingEntry entry;
    entry.attribute = attr;
    try {
      const ApSweep sweep = attribute_ap_sweep(dataset, class_id, attr,
                                               cfg.eval);
      std::map<std::string, double> ap_by_value;
      for (const APResult& cell : sweep.cells) {
        ap_by_value[cell.value] = cell.ap;
      }
      const ConditionalDistribution dist =
          conditional_distribution(dataset, class_id, attr, sensitive);
      for (std::size_t i = 0; i < dist.row_labels.size(); ++i) {
        if (!dist.row_valid[i]) continue;  // zero-support sensitive value
        entry.proxy_by_sensitive[dist.row_labels[i]] =
            proxy_ap(ap_by_value, dist.row(i));
      }
      const SpreadStats spread =
          ap_spread(entry.proxy_by_sensitive, cfg.estimator);
      entry.spread_std = spread.std;
      entry.spread_variance = spread.variance;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UndefinedAp &&
          e.code() != ErrorCode::ProxyUndefined &&
          e.code() != ErrorCode::SpreadUndefined) {
        throw;  // config mistakes stay fatal
      }
      entry.flagged = true;
      entry.flag_reason = e.what();
      entry.spread_std = 0;
      entry.spread_variance = 0;
      entry.proxy_by_sensitive.clear();
    }
    entries.push_back(std::move(entry));
  }

  std::sort(entries.begin(), entries.end(),
            [](const RankingEntry& a, const RankingEntry& b) {
              if (a.flagged != b.flagged) return b.flagged;
              if (a.spread_variance != b.spread_variance) {
                return a.spread_variance > b.spread_variance;
              }
              return a.attribute < b.attribute;
            });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].rank = static_cast<int>(i) + 1;
  }
  return entries;
}

}  // namespace icon2
