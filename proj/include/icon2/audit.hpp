#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "icon2/config.hpp"
#include "icon2/control.hpp"
#include "icon2/evaluation.hpp"
#include "icon2/ranking.hpp"
#include "icon2/spread.hpp"
#include "icon2/types.hpp"

namespace icon2 {

/// Everything the audit produced for one class: the sensitive sweep with
/// its spread, the confounder ranking, and controlled-AP reports for the
/// top-ranked attributes.
struct ClassAudit {
  ClassId class_id = 0;
  std::string class_name;
  APResult overall;  // unfiltered class AP
  ApSweep sensitive_sweep;
  bool spread_defined = false;
  SpreadStats spread;
  std::string spread_notice;  // set when spread is undefined
  std::vector<RankingEntry> ranking;
  std::string ranking_notice;  // set when ranking could not run
  std::vector<ControlReport> controls;
};

struct SkippedClass {
  ClassId class_id = 0;
  std::string class_name;
  std::string reason;
};

struct FairnessReport {
  std::string sensitive;
  std::vector<std::string> explanatory;
  AnalysisConfig config;
  std::vector<ClassAudit> classes;  // ascending class id
  std::vector<SkippedClass> skipped;

  // Cross-class summary: mean AP over audited classes, per sensitive value
  // and overall, with the spread of the per-value means.
  bool summary_defined = false;
  double mean_ap = 0;
  std::map<std::string, double> mean_ap_by_value;
  bool summary_spread_defined = false;
  SpreadStats summary_spread;
};

/// Copy of the dataset with derive_* attributes whose recorded scope is not
/// `class_id` re-derived for it. Geometry attributes only shift for other
/// classes' instances; crowdedness genuinely depends on the scope.
Dataset rescope_derived(const Dataset& dataset, ClassId class_id);

/// Full audit over the given classes. Derived attributes are re-derived
/// with the audited class as scope (on an internal copy), so
/// e.g. crowdedness counts the class under audit. Classes whose sensitive
/// sweep is undefined are listed as skipped rather than failing the run.
FairnessReport audit(const Dataset& dataset,
                     const std::vector<ClassId>& class_ids,
                     std::string_view sensitive,
                     const std::vector<std::string>& explanatory_set,
                     const AnalysisConfig& cfg);

/// The audit's sweep-and-spread stage alone: per-class sensitive sweeps,
/// spreads and the cross-class summary, with no ranking or controls.
FairnessReport sensitive_evaluation(const Dataset& dataset,
                                    const std::vector<ClassId>& class_ids,
                                    std::string_view sensitive,
                                    const AnalysisConfig& cfg);

}  // namespace icon2
