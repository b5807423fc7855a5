#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icon2/config.hpp"
#include "icon2/evaluation.hpp"
#include "icon2/spread.hpp"
#include "icon2/types.hpp"

namespace icon2 {

/// One (sensitive value, explanatory value) cell of the controlled grid.
struct ControlCell {
  std::string sensitive_value;
  std::string explanatory_value;
  bool defined = false;  // has positives and at least one detection
  double ap = 0;         // valid iff defined
  long support = 0;      // positive instances in the cell
  long images_used = 0;
  bool reliable = false;  // support >= min_support
  std::optional<ConfidenceInterval> ci;
};

/// All sensitive cells within one explanatory value. Only strata whose
/// every cell is defined and reliable enter the controlled mean.
struct ControlStratum {
  std::string explanatory_value;
  double n_bar = 0;  // mean support over sensitive values with positives
  std::vector<ControlCell> cells;
  bool included = false;
  std::string exclusion_reason;  // set when not included
  bool spread_defined = false;   // >= 2 defined cells
  double spread_std = 0;
  double spread_variance = 0;
};

struct ControlReport {
  ClassId class_id = 0;
  std::string sensitive;
  std::string explanatory;
  SpreadStats baseline;  // sigma(AP_A) over the plain sensitive sweep
  std::vector<ControlStratum> strata;
  long included_strata = 0;
  /// Mean of per-stratum spread over included strata; NaN when none are.
  double mean_controlled_std = 0;
  /// baseline.std - mean_controlled_std, by that exact subtraction.
  double delta = 0;
};

/// Stratify the sensitive sweep by an explanatory attribute and measure how
/// much of the baseline spread survives within strata. The sensitive values
/// compared are the ones defined in the baseline sweep.
ControlReport controlled_ap(const Dataset& dataset, ClassId class_id,
                            std::string_view sensitive,
                            std::string_view explanatory,
                            const AnalysisConfig& cfg);

}  // namespace icon2
