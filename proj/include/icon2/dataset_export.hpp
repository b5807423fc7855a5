#pragma once

#include <string>
#include <string_view>

#include "icon2/types.hpp"

namespace icon2 {

/// COCO-style annotation document (images, annotations, categories).
/// Reloading the text through load_ground_truth reproduces the dataset
/// exactly, including box corners.
std::string coco_ground_truth_json(const Dataset& dataset);

/// COCO-style results array (image_id, category_id, bbox, score).
std::string coco_detections_json(const Dataset& dataset);

/// Attribute sidecar CSV with a JSON preamble declaring name, level, kind
/// and value order. Every image (or instance) gets a row; unannotated ones
/// read "unknown". Numeric-looking labels are quoted to stay categorical.
std::string sidecar_csv(const Dataset& dataset, std::string_view attribute);

/// Writes ground_truth.json, detections.json, one sidecar per schema and a
/// manifest.json into `dir` (created if needed). Returns the manifest path.
std::string write_dataset(const Dataset& dataset, const std::string& dir);

}  // namespace icon2
