#include "icon2/audit.hpp"

#include <algorithm>

#include "icon2/errors.hpp"
#include "icon2/ingest.hpp"

namespace icon2 {

Dataset rescope_derived(const Dataset& dataset, ClassId class_id) {
  Dataset copy = dataset;
  WarningSummary discard;
  for (const auto& [name, scope] : dataset.derived_scope) {
    if (scope && *scope == class_id) continue;
    if (name == "size") {
      derive_size_attribute(copy, class_id, discard);
    } else if (name == "aspect_ratio") {
      derive_aspect_ratio_attribute(copy, class_id, discard);
    } else if (name == "crowdedness") {
      derive_crowdedness_attribute(copy, class_id, discard);
    }
  }
  return copy;
}

namespace {

FairnessReport build_report(const Dataset& dataset,
                            const std::vector<ClassId>& class_ids,
                            std::string_view sensitive,
                            const std::vector<std::string>& explanatory_set,
                            const AnalysisConfig& cfg, bool rank_and_control) {
  if (class_ids.empty()) {
    throw Error(ErrorCode::Usage, "audit needs at least one class");
  }
  dataset.schema(sensitive);  // fail fast on a bad attribute name
  for (const std::string& attr : explanatory_set) {
    dataset.schema(attr);
  }

  FairnessReport report;
  report.sensitive = std::string(sensitive);
  report.explanatory = explanatory_set;
  report.config = cfg;

  std::vector<ClassId> ordered(class_ids);
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  for (ClassId class_id : ordered) {
    const Dataset scoped = rescope_derived(dataset, class_id);

    ClassAudit entry;
    entry.class_id = class_id;
    entry.class_name = scoped.class_name(class_id);
    try {
      entry.sensitive_sweep =
          attribute_ap_sweep(scoped, class_id, sensitive, cfg.eval);
    } catch (const UndefinedApError& e) {
      report.skipped.push_back({class_id, entry.class_name, e.what()});
      continue;
    }
    entry.overall = overall_ap(scoped, class_id, cfg.eval);

    std::map<std::string, double> ap_by_value;
    for (const APResult& cell : entry.sensitive_sweep.cells) {
      ap_by_value[cell.value] = cell.ap;
    }
    if (ap_by_value.size() >= 2) {
      entry.spread = ap_spread(ap_by_value, cfg.estimator);
      entry.spread_defined = true;
    } else {
      entry.spread_notice =
          "spread undefined: fewer than 2 sensitive values with defined AP";
    }

    if (rank_and_control) {
      try {
        entry.ranking = rank_confounders(scoped, class_id, sensitive,
                                         explanatory_set, cfg);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Usage) throw;
        entry.ranking_notice = e.what();
      }

      long budget = cfg.top_k < 0 ? static_cast<long>(entry.ranking.size())
                                  : cfg.top_k;
      for (const RankingEntry& ranked : entry.ranking) {
        if (budget <= 0) break;
        if (ranked.flagged) continue;
        if (!entry.spread_defined) break;  // no baseline to control against
        entry.controls.push_back(controlled_ap(scoped, class_id, sensitive,
                                               ranked.attribute, cfg));
        --budget;
      }
    }
    report.classes.push_back(std::move(entry));
  }

  if (!report.classes.empty()) {
    report.summary_defined = true;
    double ap_sum = 0;
    std::map<std::string, double> value_sums;
    std::map<std::string, long> value_counts;
    for (const ClassAudit& entry : report.classes) {
      ap_sum += entry.overall.ap;
      for (const APResult& cell : entry.sensitive_sweep.cells) {
        value_sums[cell.value] += cell.ap;
        ++value_counts[cell.value];
      }
    }
    report.mean_ap = ap_sum / static_cast<double>(report.classes.size());
    for (const auto& [value, sum] : value_sums) {
      report.mean_ap_by_value[value] =
          sum / static_cast<double>(value_counts[value]);
    }
    if (report.mean_ap_by_value.size() >= 2) {
      report.summary_spread =
          ap_spread(report.mean_ap_by_value, cfg.estimator);
      report.summary_spread_defined = true;
    }
  }
  return report;
}

}  // namespace

FairnessReport audit(const Dataset& dataset,
                     const std::vector<ClassId>& class_ids,
                     std::string_view sensitive,
                     const std::vector<std::string>& explanatory_set,
                     const AnalysisConfig& cfg) {
  if (explanatory_set.empty()) {
    throw Error(ErrorCode::Usage, "audit needs explanatory attributes");
  }
  return build_report(dataset, class_ids, sensitive, explanatory_set, cfg,
                      true);
}

FairnessReport sensitive_evaluation(const Dataset& dataset,
                                    const std::vector<ClassId>& class_ids,
                                    std::string_view sensitive,
                                    const AnalysisConfig& cfg) {
  return build_report(dataset, class_ids, sensitive, {}, cfg, false);
}

}  // namespace icon2
