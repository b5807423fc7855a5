#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "icon2/config.hpp"
#include "icon2/types.hpp"

namespace icon2 {

/// Intersection-over-union of two boxes; 0 when disjoint.
double iou(const BBox& a, const BBox& b);

enum class DetectionLabel : std::uint8_t {
  TruePositive,
  FalsePositive,
  Ignored,
};

struct MatchedDetection {
  ImageId image_id = 0;
  double confidence = 0;
  BBox box;
  DetectionLabel label = DetectionLabel::FalsePositive;
  GtId matched_gt = -1;
};

/// Detections in canonical score order with TP/FP/ignored labels.
/// num_positives counts the non-ignored ground truths.
struct MatchResult {
  std::vector<MatchedDetection> detections;
  long num_positives = 0;
};

/// Canonical evaluation order: confidence descending, then image id, then
/// box corners. Intrinsic to the detection, so shuffling input order cannot
/// change any downstream result.
bool score_order(const MatchedDetection& a, const MatchedDetection& b);

/// Greedy matching over one class. Each detection, in canonical score order,
/// takes the highest-IoU unmatched ground truth of its image with
/// IoU >= cfg.iou_threshold, preferring non-ignored ground truths; a
/// detection whose only qualifying match is ignored is labeled ignored and
/// counts toward neither precision nor recall. IoU ties go to the smaller
/// gt_id. ignore_mask is parallel to gts (non-zero = ignore).
MatchResult match_detections(std::span<const GroundTruthInstance> gts,
                             std::span<const DetectionInstance> dets,
                             std::span<const std::uint8_t> ignore_mask,
                             const MatchConfig& cfg);

struct PRPoint {
  double recall = 0;
  long tp = 0;
  long fp = 0;
  double confidence = 0;
};

/// Cumulative TP/FP counts at each counted detection, score-ordered.
/// num_positives == 0 marks recall as undefined (AP errors downstream).
struct PRCurve {
  std::vector<PRPoint> points;
  long num_positives = 0;
};

PRCurve pr_curve(const MatchResult& match);

}  // namespace icon2
