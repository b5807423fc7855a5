#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icon2/binning.hpp"
#include "icon2/types.hpp"

namespace icon2 {

/// Structured warning counts keyed by warning type, e.g.
/// "degenerate_box_dropped" or "score_clamped".
struct WarningSummary {
  std::map<std::string, long> counts;

  void add(const std::string& key, long n = 1) { counts[key] += n; }
  void merge(const WarningSummary& other) {
    for (const auto& [key, n] : other.counts) counts[key] += n;
  }
  bool empty() const noexcept { return counts.empty(); }
};

inline constexpr std::array<double, 2> kDefaultSizeEdges{32.0 * 32.0,
                                                         96.0 * 96.0};
inline constexpr std::array<double, 2> kDefaultAspectRatioEdges{0.75, 1.33};
inline constexpr std::array<long, 2> kDefaultCrowdednessEdges{4, 10};

/// COCO-style annotation document: images, annotations (bbox as
/// [x, y, w, h]), categories. Degenerate boxes are dropped with a
/// "degenerate_box_dropped" warning.
Dataset load_ground_truth(const std::string& path, WarningSummary& warnings);

/// COCO-style results: a JSON array of {image_id, category_id, bbox, score}.
/// Scores outside [0, 1] are clamped with a "score_clamped" warning.
void load_detections(const std::string& path, Dataset& dataset,
                     WarningSummary& warnings);

struct SidecarRow {
  std::string id;
  std::string label;  // categorical value; empty when the row is numeric
  double number = 0;
};

/// Parsed attribute sidecar. `continuous` is true when every value is an
/// unquoted number; quoting a value forces it categorical.
struct SidecarAttributeFile {
  std::string name;
  AttributeLevel level = AttributeLevel::Image;
  std::optional<AttributeKind> kind;        // from the preamble, if any
  std::vector<std::string> declared_values;  // preamble value ordering
  std::vector<SidecarRow> rows;
  bool continuous = false;
};

/// CSV with header `id,value`, optionally preceded by a `# {...}` JSON
/// preamble declaring name/level/kind/values. Callers may override the
/// declared fields before attaching.
SidecarAttributeFile read_sidecar(const std::string& path);

/// Registers the sidecar as a new schema. Continuous files require a
/// BinningSpec (bins become the schema values); supplying one for a
/// categorical file is a usage error. Rows valued "unknown" and unreferenced
/// items stay unannotated.
void attach_attributes(Dataset& dataset, const SidecarAttributeFile& file,
                       AttributeKind kind,
                       const std::optional<BinningSpec>& binning,
                       WarningSummary& warnings);

/// Instance-level "size" attribute (small/medium/large) from box area in
/// px^2; an area equal to an edge goes to the upper bucket. With a class id,
/// other classes' instances stay unannotated.
void derive_size_attribute(
    Dataset& dataset, std::optional<ClassId> class_id, WarningSummary& warnings,
    const std::array<double, 2>& edges = kDefaultSizeEdges);

/// Instance-level "aspect_ratio" attribute: tall (< lo), square ([lo, hi]),
/// wide (> hi) from width/height.
void derive_aspect_ratio_attribute(
    Dataset& dataset, std::optional<ClassId> class_id, WarningSummary& warnings,
    const std::array<double, 2>& edges = kDefaultAspectRatioEdges);

/// Image-level "crowdedness" attribute (sparse/moderate/crowded) from the
/// per-image instance count of `class_id` (all classes when nullopt). Images
/// with zero instances stay unannotated.
void derive_crowdedness_attribute(
    Dataset& dataset, std::optional<ClassId> class_id, WarningSummary& warnings,
    const std::array<long, 2>& edges = kDefaultCrowdednessEdges);

}  // namespace icon2
