#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "icon2/types.hpp"

namespace icon2 {

/// One planted attribute. Values are drawn either from `marginals`
/// (independent of the sensitive attribute) or from `table`, whose rows
/// follow the sensitive values: table[i][j] = P(value_j | sensitive_i).
/// area_ranges, when present, ties box area to the drawn value.
struct AttributePlan {
  std::string name;
  AttributeLevel level = AttributeLevel::Instance;
  std::vector<std::string> values;
  std::vector<double> marginals;
  std::vector<std::vector<double>> table;
  std::vector<std::array<double, 2>> area_ranges;
};

/// Outcome-level pseudo-detector: an instance is found with probability
/// detect_prob of its driver-attribute value ("default" is the fallback
/// key); found boxes get jittered corners and a TP-range confidence, and
/// each image gains Poisson(clutter_fp_rate) clutter false positives.
struct DetectorModel {
  std::string driver;
  std::map<std::string, double> detect_prob;
  std::array<double, 2> tp_confidence{0.5, 1.0};
  std::array<double, 2> fp_confidence{0.0, 0.6};
  double jitter_px = 0;
  double clutter_fp_rate = 0;
};

struct ScenarioSpec {
  long num_images = 0;
  double image_width = 1280;
  double image_height = 720;
  std::uint64_t seed = 0;
  std::vector<std::string> classes;  // class ids are 1-based positions
  long min_instances = 1;
  long max_instances = 5;
  AttributePlan sensitive;  // image-level, marginals required
  std::vector<AttributePlan> explanatory;
  DetectorModel detector;
  std::array<double, 2> box_area{1024.0, 16384.0};  // px^2, uniform
  std::array<double, 2> box_aspect{0.5, 2.0};       // width / height
};

/// Throws Error(Spec) describing the first violated invariant.
void validate(const ScenarioSpec& spec);

ScenarioSpec scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec load_scenario(const std::string& path);

/// Deterministic per spec.seed; identical specs give identical datasets.
Dataset generate_scenario(const ScenarioSpec& spec);

/// Closed-form recall ceiling for a sensitive value:
/// sum_e P(e | a) * detect_prob(e) over the detector's driver attribute.
double expected_recall(const ScenarioSpec& spec,
                       std::string_view sensitive_value);

}  // namespace icon2
