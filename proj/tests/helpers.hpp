#pragma once

// Shared fixtures: a compact dataset builder plus independent oracles
// (IoU, greedy matching, envelope-integrated normalized AP) that the
// suites compare the library against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "icon2/types.hpp"

namespace testutil {

using icon2::BBox;

inline BBox box(double x, double y, double w, double h) {
  return {x, y, x + w, y + h};
}

// ------------------------------------------------------------------ builder

struct SceneBuilder {
  icon2::Dataset ds;
  icon2::GtId next_gt = 1;

  SceneBuilder& image(icon2::ImageId id, double w = 640, double h = 480) {
    ds.images.push_back({id, w, h});
    return *this;
  }

  SceneBuilder& cls(icon2::ClassId id, const std::string& name) {
    ds.class_table[id] = name;
    return *this;
  }

  icon2::GtId gt(icon2::ImageId image, icon2::ClassId class_id, BBox b) {
    if (ds.class_table.count(class_id) == 0) {
      ds.class_table[class_id] = "class_" + std::to_string(class_id);
    }
    ds.ground_truth.push_back({next_gt, image, class_id, b});
    return next_gt++;
  }

  SceneBuilder& det(icon2::ImageId image, icon2::ClassId class_id, BBox b,
                    double confidence) {
    ds.detections.push_back({image, class_id, b, confidence});
    return *this;
  }

  /// Categorical attribute column. `labels` is parallel to the images
  /// (image level) or the ground truths (instance level); "" or "unknown"
  /// leaves the row unannotated. Call after all rows exist.
  SceneBuilder& attr(const std::string& name, icon2::AttributeKind kind,
                     icon2::AttributeLevel level,
                     std::vector<std::string> values,
                     const std::vector<std::string>& labels) {
    icon2::AttributeSchema schema{name, kind, level, std::move(values)};
    std::vector<std::int32_t> column(labels.size(), icon2::kUnknownValue);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!labels[i].empty()) column[i] = schema.value_index(labels[i]);
    }
    ds.schemas.push_back(std::move(schema));
    ds.assignments.push_back(std::move(column));
    return *this;
  }

  icon2::Dataset finish() {
    ds.finalize();
    return ds;
  }
};

// ------------------------------------------------------------------ oracles

inline double oracle_iou(const BBox& a, const BBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0 || h <= 0) return 0;
  const double inter = w * h;
  const double area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min);
  const double area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min);
  return inter / (area_a + area_b - inter);
}

/// One evaluation universe for a single class: images referenced by small
/// integers, ground truths optionally ignored.
struct TinyScene {
  struct Gt {
    int image = 0;
    BBox box;
    bool ignored = false;
  };
  struct Det {
    int image = 0;
    BBox box;
    double score = 0;
  };
  std::vector<Gt> gts;
  std::vector<Det> dets;
};

struct OracleFlags {
  std::vector<std::pair<double, bool>> flags;  // (score, is_tp), score order
  long positives = 0;
};

/// Greedy matcher written from scratch against the documented contract:
/// detections in score order (ties: image, then box corners), each taking
/// the best unmatched qualifying ground truth of its image, real ones
/// before ignored ones, IoU ties to the earlier ground truth. Detections
/// whose match is ignored disappear; the rest flag TP/FP.
inline OracleFlags oracle_match(const TinyScene& scene, double thr) {
  std::vector<std::size_t> order(scene.dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& da = scene.dets[a];
    const auto& db = scene.dets[b];
    if (da.score != db.score) return da.score > db.score;
    if (da.image != db.image) return da.image < db.image;
    return std::tie(da.box.x_min, da.box.y_min, da.box.x_max, da.box.y_max) <
           std::tie(db.box.x_min, db.box.y_min, db.box.x_max, db.box.y_max);
  });

  std::vector<char> taken(scene.gts.size(), 0);
  OracleFlags out;
  for (const std::size_t d : order) {
    const auto& det = scene.dets[d];
    std::size_t best = scene.gts.size();
    double best_iou = -1;
    bool best_ignored = false;
    for (std::size_t g = 0; g < scene.gts.size(); ++g) {
      if (taken[g] || scene.gts[g].image != det.image) continue;
      const double overlap = oracle_iou(det.box, scene.gts[g].box);
      if (overlap < thr) continue;
      bool better = false;
      if (best == scene.gts.size()) {
        better = true;
      } else if (scene.gts[g].ignored != best_ignored) {
        better = !scene.gts[g].ignored;
      } else if (overlap > best_iou) {
        better = true;
      }
      if (better) {
        best = g;
        best_iou = overlap;
        best_ignored = scene.gts[g].ignored;
      }
    }
    if (best == scene.gts.size()) {
      out.flags.emplace_back(det.score, false);
    } else {
      taken[best] = 1;
      if (!best_ignored) out.flags.emplace_back(det.score, true);
    }
  }
  for (const auto& gt : scene.gts) {
    if (!gt.ignored) ++out.positives;
  }
  return out;
}

/// Normalized AP straight from the definition: walk the distinct complete
/// score cuts, at each compute recall and P_N = R*n_bar / (R*n_bar + F),
/// take the running right-max as the precision envelope and integrate
/// (step sum for all-points, the 101-recall grid otherwise).
inline double oracle_normalized_ap(const OracleFlags& of, double n_bar,
                                   bool all_points) {
  std::vector<double> recall;
  std::vector<double> precision;
  long tp = 0;
  long fp = 0;
  for (std::size_t i = 0; i < of.flags.size(); ++i) {
    (of.flags[i].second ? tp : fp) += 1;
    const bool cut = i + 1 == of.flags.size() ||
                     of.flags[i + 1].first != of.flags[i].first;
    if (!cut) continue;
    const double r =
        static_cast<double>(tp) / static_cast<double>(of.positives);
    const double mass = r * n_bar;
    recall.push_back(r);
    precision.push_back(mass <= 0 ? 0.0
                                  : mass / (mass + static_cast<double>(fp)));
  }
  for (std::size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  if (all_points) {
    double area = 0;
    double prev = 0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
      area += (recall[k] - prev) * precision[k];
      prev = recall[k];
    }
    return area;
  }
  double sum = 0;
  for (int i = 0; i <= 100; ++i) {
    const double t = static_cast<double>(i) / 100.0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
      if (recall[k] >= t) {
        sum += precision[k];
        break;
      }
    }
  }
  return sum / 101.0;
}

/// Random tiny scene: a few images, clustered or free boxes, scores
/// optionally quantized so equal-confidence runs occur.
inline TinyScene random_scene(std::mt19937_64& rng, bool quantize_scores) {
  std::uniform_int_distribution<int> image_count(1, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TinyScene scene;
  const int images = image_count(rng);
  for (int img = 0; img < images; ++img) {
    std::uniform_int_distribution<int> gt_count(0, 6);
    std::uniform_int_distribution<int> det_count(0, 8);
    const int gts = gt_count(rng);
    for (int g = 0; g < gts; ++g) {
      const double x = unit(rng) * 400;
      const double y = unit(rng) * 300;
      const double w = 20 + unit(rng) * 60;
      const double h = 20 + unit(rng) * 60;
      scene.gts.push_back({img, box(x, y, w, h), false});
    }
    const int dets = det_count(rng);
    for (int d = 0; d < dets; ++d) {
      double score = unit(rng);
      if (quantize_scores) score = std::round(score * 10.0) / 10.0;
      BBox b;
      if (!scene.gts.empty() && unit(rng) < 0.7) {
        // jitter an existing ground truth of some image
        const auto& target =
            scene.gts[static_cast<std::size_t>(unit(rng) *
                                               scene.gts.size()) %
                      scene.gts.size()];
        const double dx = (unit(rng) - 0.5) * 30;
        const double dy = (unit(rng) - 0.5) * 30;
        b = {target.box.x_min + dx, target.box.y_min + dy,
             target.box.x_max + dx, target.box.y_max + dy};
        scene.dets.push_back({target.image, b, score});
      } else {
        const double x = unit(rng) * 400;
        const double y = unit(rng) * 300;
        b = box(x, y, 20 + unit(rng) * 60, 20 + unit(rng) * 60);
        scene.dets.push_back({img, b, score});
      }
    }
  }
  return scene;
}

/// Ensure at least one positive so AP is defined.
inline TinyScene random_positive_scene(std::mt19937_64& rng,
                                       bool quantize_scores) {
  for (;;) {
    TinyScene scene = random_scene(rng, quantize_scores);
    if (scene.gts.empty()) continue;
    const OracleFlags of = oracle_match(scene, 0.5);
    if (of.positives > 0 && !of.flags.empty()) return scene;
  }
}

/// Mirror a TinyScene into a Dataset (one class, image ids 1-based,
/// gt insertion order preserved so gt_id order == index order).
inline icon2::Dataset scene_dataset(const TinyScene& scene) {
  SceneBuilder b;
  int max_image = 0;
  for (const auto& gt : scene.gts) max_image = std::max(max_image, gt.image);
  for (const auto& det : scene.dets) {
    max_image = std::max(max_image, det.image);
  }
  for (int img = 0; img <= max_image; ++img) b.image(img + 1);
  b.cls(1, "thing");
  for (const auto& gt : scene.gts) b.gt(gt.image + 1, 1, gt.box);
  for (const auto& det : scene.dets) b.det(det.image + 1, 1, det.box, det.score);
  return b.finish();
}

}  // namespace testutil
