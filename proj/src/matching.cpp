#include "icon2/matching.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_map>

#include "icon2/errors.hpp"

namespace icon2 {

double iou(const BBox& a, const BBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

bool score_order(const MatchedDetection& a, const MatchedDetection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  return std::tie(a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max) <
         std::tie(b.box.x_min, b.box.y_min, b.box.x_max, b.box.y_max);
}

MatchResult match_detections(std::span<const GroundTruthInstance> gts,
                             std::span<const DetectionInstance> dets,
                             std::span<const std::uint8_t> ignore_mask,
                             const MatchConfig& cfg) {
  if (cfg.iou_threshold <= 0 || cfg.iou_threshold > 1) {
    throw Error(ErrorCode::Usage, "iou_threshold must lie in (0, 1]");
  }
  if (!ignore_mask.empty() && ignore_mask.size() != gts.size()) {
    throw Error(ErrorCode::Usage,
                "ignore mask length does not match ground-truth count");
  }

  MatchResult result;
  result.detections.reserve(dets.size());
  for (const auto& det : dets) {
    result.detections.push_back({det.image_id, det.confidence, det.box,
                                 DetectionLabel::FalsePositive, -1});
  }
  std::sort(result.detections.begin(), result.detections.end(), score_order);

  std::unordered_map<ImageId, std::vector<std::size_t>> gts_of_image;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    gts_of_image[gts[g].image_id].push_back(g);
  }

  const auto ignored = [&](std::size_t g) {
    return !ignore_mask.empty() && ignore_mask[g] != 0;
  };

  std::vector<std::uint8_t> taken(gts.size(), 0);
  for (auto& det : result.detections) {
    auto it = gts_of_image.find(det.image_id);
    if (it == gts_of_image.end()) continue;

    // Best unmatched candidate, non-ignored ground truths first.
    std::size_t best = gts.size();
    double best_iou = 0;
    bool best_ignored = false;
    for (std::size_t g : it->second) {
      if (taken[g]) continue;
      const double overlap = iou(det.box, gts[g].box);
      if (overlap < cfg.iou_threshold) continue;
      const bool g_ignored = ignored(g);
      bool better;
      if (best == gts.size()) {
        better = true;
      } else if (g_ignored != best_ignored) {
        better = !g_ignored;
      } else if (overlap != best_iou) {
        better = overlap > best_iou;
      } else {
        better = gts[g].gt_id < gts[best].gt_id;
      }
      if (better) {
        best = g;
        best_iou = overlap;
        best_ignored = g_ignored;
      }
    }

    if (best == gts.size()) continue;  // stays a false positive
    taken[best] = 1;
    det.matched_gt = gts[best].gt_id;
    det.label =
        best_ignored ? DetectionLabel::Ignored : DetectionLabel::TruePositive;
  }

  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!ignored(g)) ++result.num_positives;
  }
  return result;
}

PRCurve pr_curve(const MatchResult& match) {
  PRCurve curve;
  curve.num_positives = match.num_positives;
  long tp = 0;
  long fp = 0;
  for (const auto& det : match.detections) {
    switch (det.label) {
      case DetectionLabel::Ignored:
        continue;  // contributes to neither count, no point emitted
      case DetectionLabel::TruePositive:
        ++tp;
        break;
      case DetectionLabel::FalsePositive:
        ++fp;
        break;
    }
    const double recall =
        match.num_positives > 0
            ? static_cast<double>(tp) / static_cast<double>(match.num_positives)
            : 0.0;
    curve.points.push_back({recall, tp, fp, det.confidence});
  }
  return curve;
}

}  // namespace icon2
