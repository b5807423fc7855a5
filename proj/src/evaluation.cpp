#include "icon2/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "icon2/errors.hpp"
#include "icon2/rng.hpp"

namespace icon2 {

namespace {

/// Indices of the last point of each equal-confidence run: complete score
/// cuts. Interior points of a run are partial cuts and never enter the
/// envelope.
std::vector<std::size_t> cut_points(const PRCurve& curve) {
  std::vector<std::size_t> cuts;
  cuts.reserve(curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (i + 1 == curve.points.size() ||
        curve.points[i + 1].confidence != curve.points[i].confidence) {
      cuts.push_back(i);
    }
  }
  return cuts;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted.front();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::uint64_t bootstrap_seed(const EvalConfig& cfg, ClassId class_id,
                             std::string_view attr, std::string_view value,
                             std::string_view stratum) {
  return mix_seed(cfg.seed,
                  {static_cast<std::uint64_t>(class_id), hash_string(attr),
                   hash_string(value), hash_string(stratum)});
}

double normalized_precision(double recall, double n_bar,
                            double false_positives) {
  if (n_bar <= 0) throw Error(ErrorCode::Usage, "n_bar must be positive");
  if (recall < 0 || recall > 1) {
    throw Error(ErrorCode::Usage, "recall must lie in [0, 1]");
  }
  if (false_positives < 0) {
    throw Error(ErrorCode::Usage, "false-positive count must be >= 0");
  }
  const double scaled = recall * n_bar;
  if (scaled <= 0) return false_positives > 0 ? 0.0 : 1.0;
  if (false_positives <= 0) return 1.0;
  return scaled / (scaled + false_positives);
}

double average_precision(const PRCurve& curve, double n_bar,
                         const MatchConfig& cfg) {
  if (n_bar <= 0) throw Error(ErrorCode::Usage, "n_bar must be positive");
  if (curve.num_positives <= 0) {
    throw UndefinedApError("AP undefined: no positive instances",
                           curve.num_positives);
  }
  if (curve.points.empty()) {
    throw UndefinedApError("AP undefined: empty precision-recall curve",
                           curve.num_positives);
  }

  // Scaled true-positive count tp * (n_bar / N) rather than recall * n_bar:
  // algebraically identical, and exactly tp when n_bar == N, which keeps
  // normalized AP bit-equal to standard AP for equal group sizes.
  const double ratio = n_bar / static_cast<double>(curve.num_positives);
  const auto cuts = cut_points(curve);

  std::vector<double> recall(cuts.size());
  std::vector<double> envelope(cuts.size());
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const PRPoint& pt = curve.points[cuts[k]];
    recall[k] = pt.recall;
    const double scaled_tp = static_cast<double>(pt.tp) * ratio;
    envelope[k] = scaled_tp <= 0
                      ? 0.0
                      : scaled_tp / (scaled_tp + static_cast<double>(pt.fp));
  }
  for (std::size_t k = cuts.size(); k-- > 1;) {
    envelope[k - 1] = std::max(envelope[k - 1], envelope[k]);
  }

  if (cfg.interpolation == Interpolation::AllPoints) {
    double ap = 0;
    double prev_recall = 0;
    for (std::size_t k = 0; k < cuts.size(); ++k) {
      if (recall[k] > prev_recall) {
        ap += (recall[k] - prev_recall) * envelope[k];
        prev_recall = recall[k];
      }
    }
    return ap;
  }

  double sum = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = static_cast<double>(i) / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) {
      sum += envelope[static_cast<std::size_t>(it - recall.begin())];
    }
  }
  return sum / 101.0;
}

double average_precision(const PRCurve& curve, const MatchConfig& cfg) {
  if (curve.num_positives <= 0) {
    throw UndefinedApError("AP undefined: no positive instances",
                           curve.num_positives);
  }
  return average_precision(curve, static_cast<double>(curve.num_positives),
                           cfg);
}

CellData build_cell(const Dataset& dataset, ClassId class_id,
                    const CellFilter& filter, const MatchConfig& cfg) {
  std::vector<CellFilter::Term> image_terms;
  std::vector<CellFilter::Term> instance_terms;
  for (const auto& term : filter.terms) {
    const auto& schema = dataset.schemas[static_cast<std::size_t>(term.schema_index)];
    (schema.level == AttributeLevel::Image ? image_terms : instance_terms)
        .push_back(term);
  }

  CellData cell;
  std::vector<GroundTruthInstance> gts;
  std::vector<DetectionInstance> dets;
  std::vector<std::uint8_t> ignore;

  for (std::size_t row = 0; row < dataset.images.size(); ++row) {
    const auto irow = static_cast<std::int32_t>(row);

    bool keep = true;
    for (const auto& term : image_terms) {
      if (dataset.image_value(term.schema_index, irow) != term.value_index) {
        keep = false;
        break;
      }
    }
    if (!keep) continue;

    gts.clear();
    ignore.clear();
    for (std::int32_t g : dataset.gts_by_image[row]) {
      const auto& gt = dataset.ground_truth[static_cast<std::size_t>(g)];
      if (gt.class_id != class_id) continue;
      std::uint8_t ignored = 0;
      for (const auto& term : instance_terms) {
        if (dataset.instance_value(term.schema_index, g) != term.value_index) {
          ignored = 1;
          break;
        }
      }
      gts.push_back(gt);
      ignore.push_back(ignored);
    }
    if (gts.empty()) continue;  // image has no ground truth of this class

    dets.clear();
    for (std::int32_t d : dataset.dets_by_image[row]) {
      const auto& det = dataset.detections[static_cast<std::size_t>(d)];
      if (det.class_id == class_id) dets.push_back(det);
    }

    MatchResult match = match_detections(gts, dets, ignore, cfg);
    cell.num_positives += match.num_positives;
    cell.image_rows.push_back(irow);
    cell.per_image.push_back(std::move(match));
  }
  return cell;
}

PRCurve merged_curve(const CellData& cell,
                     std::span<const std::size_t> slots) {
  MatchResult merged;
  if (slots.empty()) {
    merged.num_positives = cell.num_positives;
    std::size_t total = 0;
    for (const auto& m : cell.per_image) total += m.detections.size();
    merged.detections.reserve(total);
    for (const auto& m : cell.per_image) {
      merged.detections.insert(merged.detections.end(), m.detections.begin(),
                               m.detections.end());
    }
  } else {
    for (std::size_t slot : slots) {
      const auto& m = cell.per_image[slot];
      merged.num_positives += m.num_positives;
      merged.detections.insert(merged.detections.end(), m.detections.begin(),
                               m.detections.end());
    }
  }
  std::sort(merged.detections.begin(), merged.detections.end(), score_order);
  return pr_curve(merged);
}

double cell_ap(const CellData& cell, double n_bar, const MatchConfig& cfg) {
  return average_precision(merged_curve(cell, {}), n_bar, cfg);
}

std::optional<ConfidenceInterval> cell_bootstrap(const CellData& cell,
                                                 double n_bar,
                                                 const MatchConfig& cfg,
                                                 long replicates, double level,
                                                 std::uint64_t seed,
                                                 double point_ap) {
  const std::size_t num_images = cell.image_rows.size();
  if (num_images < 10) return std::nullopt;
  if (replicates < 100) {
    throw Error(ErrorCode::Usage, "bootstrap needs at least 100 replicates");
  }
  if (level <= 0 || level >= 1) {
    throw Error(ErrorCode::Usage, "bootstrap level must lie in (0, 1)");
  }

  std::vector<double> aps;
  aps.reserve(static_cast<std::size_t>(replicates));
  std::vector<std::size_t> slots(num_images);
  for (long r = 0; r < replicates; ++r) {
    Rng rng(seed + static_cast<std::uint64_t>(r));
    for (auto& slot : slots) {
      slot = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<long>(num_images) - 1));
    }
    PRCurve curve = merged_curve(cell, slots);
    if (curve.num_positives == 0) continue;  // resample lost every positive
    // A resample with positives but no detections scores 0.
    aps.push_back(curve.points.empty()
                      ? 0.0
                      : average_precision(curve, n_bar, cfg));
  }
  if (aps.empty()) return std::nullopt;

  std::sort(aps.begin(), aps.end());
  ConfidenceInterval ci;
  ci.level = level;
  ci.low = std::min(quantile_sorted(aps, (1.0 - level) / 2.0), point_ap);
  ci.high = std::max(quantile_sorted(aps, (1.0 + level) / 2.0), point_ap);
  return ci;
}

namespace {

struct ResolvedAttr {
  int schema_index;
  const AttributeSchema* schema;
};

ResolvedAttr resolve_attr(const Dataset& dataset, std::string_view attr) {
  int idx = dataset.schema_index(attr);
  if (idx < 0) {
    throw Error(ErrorCode::SchemaNotFound,
                "attribute '" + std::string(attr) + "' is not registered");
  }
  return {idx, &dataset.schemas[static_cast<std::size_t>(idx)]};
}

std::int32_t resolve_value(const AttributeSchema& schema,
                           std::string_view value) {
  const std::int32_t idx = schema.value_index(value);
  if (idx == kUnknownValue) {
    throw Error(ErrorCode::Usage,
                "'" + std::string(value) + "' is not a value of attribute '" +
                    schema.name + "' (unknown-valued items are excluded)");
  }
  return idx;
}

APResult finish_cell(const CellData& cell, ClassId class_id,
                     std::string attr, std::string value, double n_bar,
                     const EvalConfig& cfg, std::string_view stratum = {}) {
  APResult result;
  result.class_id = class_id;
  result.attribute = std::move(attr);
  result.value = std::move(value);
  result.n_i = cell.num_positives;
  result.n_bar = n_bar;
  result.images_used = static_cast<long>(cell.image_rows.size());
  result.ap = cell_ap(cell, n_bar, cfg.match);
  result.reliable = cell.num_positives >= cfg.min_support;
  if (cfg.bootstrap_replicates > 0) {
    result.ci = cell_bootstrap(
        cell, n_bar, cfg.match, cfg.bootstrap_replicates, cfg.bootstrap_level,
        bootstrap_seed(cfg, class_id, result.attribute, result.value, stratum),
        result.ap);
  }
  return result;
}

}  // namespace

APResult group_ap(const Dataset& dataset, ClassId class_id,
                  std::string_view attr, std::string_view value,
                  const EvalConfig& cfg, double n_bar) {
  if (n_bar <= 0) throw Error(ErrorCode::Usage, "n_bar must be positive");
  const auto resolved = resolve_attr(dataset, attr);
  const std::int32_t value_idx = resolve_value(*resolved.schema, value);

  CellFilter filter;
  filter.terms.push_back({resolved.schema_index, value_idx});
  CellData cell = build_cell(dataset, class_id, filter, cfg.match);
  if (cell.num_positives == 0) {
    throw UndefinedApError("AP undefined for " + std::string(attr) + "=" +
                               std::string(value) + ": no positive instances",
                           0);
  }
  return finish_cell(cell, class_id, std::string(attr), std::string(value),
                     n_bar, cfg);
}

ApSweep attribute_ap_sweep(const Dataset& dataset, ClassId class_id,
                           std::string_view attr, const EvalConfig& cfg) {
  const auto resolved = resolve_attr(dataset, attr);

  ApSweep sweep;
  sweep.class_id = class_id;
  sweep.attribute = std::string(attr);

  std::vector<CellData> cells;
  cells.reserve(resolved.schema->values.size());
  double positive_sum = 0;
  long values_with_positives = 0;
  for (std::size_t v = 0; v < resolved.schema->values.size(); ++v) {
    CellFilter filter;
    filter.terms.push_back(
        {resolved.schema_index, static_cast<std::int32_t>(v)});
    cells.push_back(build_cell(dataset, class_id, filter, cfg.match));
    if (cells.back().num_positives > 0) {
      positive_sum += static_cast<double>(cells.back().num_positives);
      ++values_with_positives;
    }
  }
  if (values_with_positives == 0) {
    throw UndefinedApError("attribute '" + sweep.attribute +
                               "' has no value with positive instances for "
                               "class " +
                               std::to_string(class_id),
                           0);
  }
  sweep.n_bar = positive_sum / static_cast<double>(values_with_positives);

  for (std::size_t v = 0; v < cells.size(); ++v) {
    const std::string& value = resolved.schema->values[v];
    if (cells[v].num_positives == 0) {
      sweep.undefined.push_back({value, "no positive instances"});
      continue;
    }
    try {
      sweep.cells.push_back(finish_cell(cells[v], class_id, sweep.attribute,
                                        value, sweep.n_bar, cfg));
    } catch (const UndefinedApError&) {
      sweep.undefined.push_back({value, "no detections"});
    }
  }
  if (sweep.cells.empty()) {
    throw UndefinedApError("attribute '" + sweep.attribute +
                               "' has no value with a defined AP for class " +
                               std::to_string(class_id),
                           0);
  }
  return sweep;
}

APResult overall_ap(const Dataset& dataset, ClassId class_id,
                    const EvalConfig& cfg) {
  CellData cell = build_cell(dataset, class_id, {}, cfg.match);
  if (cell.num_positives == 0) {
    throw UndefinedApError("AP undefined for class " +
                               std::to_string(class_id) +
                               ": no positive instances",
                           0);
  }
  return finish_cell(cell, class_id, "all", "all",
                     static_cast<double>(cell.num_positives), cfg);
}

std::optional<ConfidenceInterval> bootstrap_ci(
    const Dataset& dataset, ClassId class_id, std::string_view attr,
    std::string_view value, const EvalConfig& cfg, long replicates,
    double level, std::uint64_t seed, std::optional<double> n_bar) {
  const auto resolved = resolve_attr(dataset, attr);
  const std::int32_t value_idx = resolve_value(*resolved.schema, value);

  if (!n_bar) {
    // Recompute the owning sweep's normalization constant.
    double positive_sum = 0;
    long values_with_positives = 0;
    for (std::size_t v = 0; v < resolved.schema->values.size(); ++v) {
      CellFilter filter;
      filter.terms.push_back(
          {resolved.schema_index, static_cast<std::int32_t>(v)});
      const CellData c = build_cell(dataset, class_id, filter, cfg.match);
      if (c.num_positives > 0) {
        positive_sum += static_cast<double>(c.num_positives);
        ++values_with_positives;
      }
    }
    if (values_with_positives == 0) {
      throw UndefinedApError("attribute '" + std::string(attr) +
                                 "' has no value with positive instances",
                             0);
    }
    n_bar = positive_sum / static_cast<double>(values_with_positives);
  }

  CellFilter filter;
  filter.terms.push_back({resolved.schema_index, value_idx});
  CellData cell = build_cell(dataset, class_id, filter, cfg.match);
  if (cell.num_positives == 0) {
    throw UndefinedApError("AP undefined for " + std::string(attr) + "=" +
                               std::string(value) + ": no positive instances",
                           0);
  }
  const double point_ap = cell_ap(cell, *n_bar, cfg.match);
  return cell_bootstrap(cell, *n_bar, cfg.match, replicates, level, seed,
                        point_ap);
}

}  // namespace icon2
