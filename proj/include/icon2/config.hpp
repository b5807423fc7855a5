#pragma once

#include <cstdint>

namespace icon2 {

enum class Interpolation { AllPoints, Points101 };

struct MatchConfig {
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::AllPoints;
};

enum class Estimator { Population, Sample };

/// Everything a single AP evaluation needs. bootstrap_replicates == 0
/// disables confidence intervals.
struct EvalConfig {
  MatchConfig match;
  long min_support = 50;
  long bootstrap_replicates = 0;
  double bootstrap_level = 0.95;
  std::uint64_t seed = 0;
};

struct AnalysisConfig {
  EvalConfig eval;
  Estimator estimator = Estimator::Sample;
  long top_k = -1;  // control the top-k ranked attributes; -1 = all
};

const char* to_string(Interpolation interp);
const char* to_string(Estimator est);

}  // namespace icon2
