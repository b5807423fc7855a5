#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icon2/config.hpp"
#include "icon2/matching.hpp"
#include "icon2/types.hpp"

namespace icon2 {

/// Count-normalized precision: recall * n_bar / (recall * n_bar + fp).
/// 0 when recall is 0 with false positives present, 1 when there are none.
double normalized_precision(double recall, double n_bar,
                            double false_positives);

/// Normalized AP: precision at every curve point uses n_bar in place of the
/// curve's positive count, then the precision envelope is integrated per
/// cfg.interpolation. Equal-confidence runs are collapsed to their last
/// point, so only complete score cuts enter the envelope.
/// Throws UndefinedApError when the curve has no positives or no points.
double average_precision(const PRCurve& curve, double n_bar,
                         const MatchConfig& cfg);

/// Standard AP (n_bar = the curve's own positive count).
double average_precision(const PRCurve& curve, const MatchConfig& cfg);

struct ConfidenceInterval {
  double low = 0;
  double high = 0;
  double level = 0;
};

/// Normalized AP for one (class, attribute, value) cell.
struct APResult {
  ClassId class_id = 0;
  std::string attribute;  // "all" for the unfiltered per-class AP
  std::string value;
  double ap = 0;       // fraction in [0,1]; reports render pp = 100*ap
  long n_i = 0;        // positive instances in the cell
  double n_bar = 0;    // normalization constant used
  long images_used = 0;
  bool reliable = true;  // n_i >= min_support
  std::optional<ConfidenceInterval> ci;
};

// -- internal cell machinery (shared by group/sweep/control/bootstrap) -----

/// Conjunction of attribute constraints defining a cell.
struct CellFilter {
  struct Term {
    int schema_index = -1;
    std::int32_t value_index = kUnknownValue;
  };
  std::vector<Term> terms;
};

/// A cell's evaluation-ready state: the image rows that survive the
/// image-level constraints (and contain the class), plus one MatchResult per
/// image with instance-level constraints applied as ignore masks. Matching
/// is per-image, so bootstrap resampling just re-merges these.
struct CellData {
  std::vector<std::int32_t> image_rows;
  std::vector<MatchResult> per_image;
  long num_positives = 0;
};

CellData build_cell(const Dataset& dataset, ClassId class_id,
                    const CellFilter& filter, const MatchConfig& cfg);

/// Merge the (multiset of) per-image results named by `slots` into one
/// score-ordered curve. Empty `slots` means every image once.
PRCurve merged_curve(const CellData& cell, std::span<const std::size_t> slots);

double cell_ap(const CellData& cell, double n_bar, const MatchConfig& cfg);

std::optional<ConfidenceInterval> cell_bootstrap(const CellData& cell,
                                                 double n_bar,
                                                 const MatchConfig& cfg,
                                                 long replicates, double level,
                                                 std::uint64_t seed,
                                                 double point_ap);

/// Base seed for a cell's bootstrap stream, mixed from the run seed and the
/// cell's identity so evaluation order never matters. Replicate r then uses
/// seed + r.
std::uint64_t bootstrap_seed(const EvalConfig& cfg, ClassId class_id,
                             std::string_view attr, std::string_view value,
                             std::string_view stratum = {});

// -- public per-cell / per-attribute operations ----------------------------

/// Normalized AP for one attribute value. Image-level attributes restrict
/// the image set to images carrying the value (and at least one ground
/// truth of the class); instance-level attributes keep every class-positive
/// image and ignore out-of-value ground truths.
APResult group_ap(const Dataset& dataset, ClassId class_id,
                  std::string_view attr, std::string_view value,
                  const EvalConfig& cfg, double n_bar);

struct UndefinedCell {
  std::string value;
  std::string reason;
};

struct ApSweep {
  ClassId class_id = 0;
  std::string attribute;
  double n_bar = 0;
  std::vector<APResult> cells;  // defined cells, schema value order
  std::vector<UndefinedCell> undefined;
};

/// One AP per attribute value, all normalized with the shared
/// n_bar = mean positive count over values that have positives.
/// Computes confidence intervals when cfg.bootstrap_replicates > 0.
ApSweep attribute_ap_sweep(const Dataset& dataset, ClassId class_id,
                           std::string_view attr, const EvalConfig& cfg);

/// Unfiltered per-class AP (attribute "all"), standard normalization.
APResult overall_ap(const Dataset& dataset, ClassId class_id,
                    const EvalConfig& cfg);

/// Percentile bootstrap over the cell's image set. n_bar defaults to the
/// owning sweep's value (recomputed if not supplied) and stays fixed across
/// replicates. Returns nullopt when the cell has fewer than 10 images.
std::optional<ConfidenceInterval> bootstrap_ci(
    const Dataset& dataset, ClassId class_id, std::string_view attr,
    std::string_view value, const EvalConfig& cfg, long replicates,
    double level, std::uint64_t seed,
    std::optional<double> n_bar = std::nullopt);

}  // namespace icon2
