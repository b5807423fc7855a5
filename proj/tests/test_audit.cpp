#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "icon2/audit.hpp"
#include "icon2/errors.hpp"
#include "icon2/ingest.hpp"
#include "helpers.hpp"

using namespace icon2;
using testutil::SceneBuilder;
using testutil::box;

namespace {

/// Class 1 follows the usual confounded construction; class 2 gets one
/// instance per image, detected only when `detect_second` is set.
Dataset two_class_dataset(std::uint64_t seed, bool detect_second) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneBuilder b;
  b.cls(1, "car").cls(2, "bicycle");
  std::vector<std::string> region;
  std::vector<std::string> occ;
  std::vector<std::string> color;
  for (int i = 1; i <= 80; ++i) {
    b.image(i, 2000, 2000);
    const bool south = i % 2 == 0;
    region.push_back(south ? "south" : "north");
    const double p_heavy = south ? 0.75 : 0.25;
    const int n = 3 + static_cast<int>(rng() % 2);
    for (int g = 0; g < n; ++g) {
      const BBox gt = box(150.0 * g + 10, 40, 60, 60);
      b.gt(i, 1, gt);
      const bool heavy = unit(rng) < p_heavy;
      occ.push_back(heavy ? "heavy" : "none");
      color.push_back(unit(rng) < 0.5 ? "red" : "blue");
      if (unit(rng) < (heavy ? 0.5 : 0.95)) {
        b.det(i, 1, box(gt.x_min + unit(rng) * 4, gt.y_min + unit(rng) * 4, 60, 60),
              heavy ? 0.4 + 0.4 * unit(rng) : 0.65 + 0.35 * unit(rng));
      }
    }
    const BBox second = box(10, 300, 80, 80);
    b.gt(i, 2, second);
    occ.push_back(unit(rng) < 0.5 ? "heavy" : "none");
    color.push_back(unit(rng) < 0.5 ? "red" : "blue");
    if (detect_second && unit(rng) < 0.8) {
      b.det(i, 2, box(second.x_min + unit(rng) * 4, second.y_min + unit(rng) * 4,
                      80, 80),
            0.5 + 0.5 * unit(rng));
    }
    b.det(i, 1, box(1800, 1800, 50, 50), 0.3 * unit(rng));
  }
  b.attr("region", AttributeKind::Sensitive, AttributeLevel::Image,
         {"north", "south"}, region);
  b.attr("occ", AttributeKind::Explanatory, AttributeLevel::Instance,
         {"none", "heavy"}, occ);
  b.attr("color", AttributeKind::Explanatory, AttributeLevel::Instance,
         {"red", "blue"}, color);
  return b.finish();
}

AnalysisConfig base_config() {
  AnalysisConfig cfg;
  cfg.eval.min_support = 1;
  return cfg;
}

}  // namespace

TEST_CASE("classes audit in ascending order once each") {
  const Dataset ds = two_class_dataset(601, true);
  const FairnessReport report =
      audit(ds, {2, 1, 1, 2}, "region", {"occ", "color"}, base_config());
  REQUIRE(report.classes.size() == 2);
  CHECK(report.classes[0].class_id == 1);
  CHECK(report.classes[0].class_name == "car");
  CHECK(report.classes[1].class_id == 2);
  CHECK(report.classes[1].class_name == "bicycle");
  CHECK(report.skipped.empty());
  CHECK(report.sensitive == "region");
  CHECK(report.explanatory == std::vector<std::string>{"occ", "color"});
  for (const ClassAudit& entry : report.classes) {
    CHECK(entry.overall.attribute == "all");
    CHECK(entry.spread_defined);
    CHECK(entry.ranking.size() == 2);
    CHECK(entry.ranking_notice.empty());
  }
}

TEST_CASE("an unevaluable class is skipped, not fatal") {
  const Dataset ds = two_class_dataset(602, false);
  const FairnessReport report =
      audit(ds, {1, 2}, "region", {"occ"}, base_config());
  REQUIRE(report.classes.size() == 1);
  CHECK(report.classes[0].class_id == 1);
  REQUIRE(report.skipped.size() == 1);
  CHECK(report.skipped[0].class_id == 2);
  CHECK(report.skipped[0].class_name == "bicycle");
  CHECK(!report.skipped[0].reason.empty());
  // the summary covers the audited classes only
  CHECK(report.summary_defined);
  CHECK(report.mean_ap == report.classes[0].overall.ap);
}

TEST_CASE("top_k bounds the number of controlled reports") {
  const Dataset ds = two_class_dataset(603, true);
  AnalysisConfig cfg = base_config();

  cfg.top_k = 0;
  FairnessReport none = audit(ds, {1}, "region", {"occ", "color"}, cfg);
  CHECK(none.classes[0].controls.empty());
  CHECK(none.classes[0].ranking.size() == 2);

  cfg.top_k = 1;
  FairnessReport one = audit(ds, {1}, "region", {"occ", "color"}, cfg);
  REQUIRE(one.classes[0].controls.size() == 1);
  CHECK(one.classes[0].controls[0].explanatory ==
        one.classes[0].ranking[0].attribute);

  cfg.top_k = -1;
  FairnessReport all = audit(ds, {1}, "region", {"occ", "color"}, cfg);
  REQUIRE(all.classes[0].controls.size() == 2);
  for (std::size_t i = 0; i < all.classes[0].controls.size(); ++i) {
    CHECK(all.classes[0].controls[i].explanatory ==
          all.classes[0].ranking[i].attribute);
    CHECK(all.classes[0].controls[i].sensitive == "region");
  }
}

TEST_CASE("flagged ranking entries never consume the budget") {
  // "occ" becomes unscorable when southern instances lose their labels
  Dataset ds = two_class_dataset(604, true);
  const int occ_idx = ds.schema_index("occ");
  REQUIRE(occ_idx >= 0);
  const int region_idx = ds.schema_index("region");
  for (std::size_t g = 0; g < ds.ground_truth.size(); ++g) {
    const auto row = static_cast<std::int32_t>(g);
    const std::int32_t region_value = ds.instance_value(region_idx, row);
    if (ds.schemas[static_cast<std::size_t>(region_idx)]
            .values[static_cast<std::size_t>(region_value)] == "south") {
      ds.assignments[static_cast<std::size_t>(occ_idx)]
                    [static_cast<std::size_t>(g)] = kUnknownValue;
    }
  }
  AnalysisConfig cfg = base_config();
  cfg.top_k = -1;
  const FairnessReport report =
      audit(ds, {1}, "region", {"occ", "color"}, cfg);
  const ClassAudit& entry = report.classes[0];
  REQUIRE(entry.ranking.size() == 2);
  CHECK(entry.ranking[1].attribute == "occ");
  CHECK(entry.ranking[1].flagged);
  REQUIRE(entry.controls.size() == 1);
  CHECK(entry.controls[0].explanatory == "color");
}

TEST_CASE("the summary averages over audited classes") {
  const Dataset ds = two_class_dataset(605, true);
  const AnalysisConfig cfg = base_config();
  const FairnessReport report =
      audit(ds, {1, 2}, "region", {"occ"}, cfg);
  REQUIRE(report.classes.size() == 2);
  CHECK(report.summary_defined);
  CHECK(report.mean_ap ==
        (report.classes[0].overall.ap + report.classes[1].overall.ap) / 2.0);
  for (const auto& [value, mean] : report.mean_ap_by_value) {
    double sum = 0;
    long count = 0;
    for (const ClassAudit& entry : report.classes) {
      for (const APResult& cell : entry.sensitive_sweep.cells) {
        if (cell.value == value) {
          sum += cell.ap;
          ++count;
        }
      }
    }
    REQUIRE(count > 0);
    CHECK(mean == sum / static_cast<double>(count));
  }
  REQUIRE(report.summary_spread_defined);
  CHECK(report.summary_spread.std ==
        ap_spread(report.mean_ap_by_value, cfg.estimator).std);
}

TEST_CASE("sensitive evaluation stops after sweeps and spreads") {
  const Dataset ds = two_class_dataset(606, true);
  AnalysisConfig cfg = base_config();
  cfg.eval.seed = 42;
  const FairnessReport report = sensitive_evaluation(ds, {1, 2}, "region", cfg);
  CHECK(report.explanatory.empty());
  CHECK(report.config.eval.seed == 42);
  for (const ClassAudit& entry : report.classes) {
    CHECK(entry.ranking.empty());
    CHECK(entry.controls.empty());
    CHECK(!entry.sensitive_sweep.cells.empty());
    CHECK(entry.spread_defined);
  }
  const FairnessReport full =
      audit(ds, {1, 2}, "region", {"occ"}, cfg);
  // the sweep stage is byte-for-byte the same in both entry points
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    CHECK(report.classes[c].overall.ap == full.classes[c].overall.ap);
    CHECK(report.classes[c].spread.std == full.classes[c].spread.std);
  }
}

TEST_CASE("derived attributes rescope to the audited class") {
  SceneBuilder b;
  b.cls(1, "car").cls(2, "bicycle");
  std::vector<std::string> dummy;
  for (int i = 1; i <= 20; ++i) {
    b.image(i, 2000, 2000);
    const int cars = i <= 10 ? 5 : 1;  // first half crowded with cars
    for (int g = 0; g < cars; ++g) {
      const BBox gt = box(150.0 * g + 10, 40, 60, 60);
      b.gt(i, 1, gt);
      b.det(i, 1, gt, 0.9 - 0.01 * g);
      dummy.push_back(g % 2 == 0 ? "x" : "y");
    }
    const BBox second = box(10, 300, 80, 80);
    b.gt(i, 2, second);
    b.det(i, 2, second, 0.8);
    dummy.push_back(i % 2 == 0 ? "x" : "y");
  }
  b.attr("dummy", AttributeKind::Explanatory, AttributeLevel::Instance,
         {"x", "y"}, dummy);
  Dataset ds = b.finish();
  WarningSummary warnings;
  derive_crowdedness_attribute(ds, 1, warnings);
  REQUIRE(ds.derived_scope.at("crowdedness") == std::optional<ClassId>(1));

  const int idx = ds.schema_index("crowdedness");
  REQUIRE(idx >= 0);
  // counted for class 1: five cars is moderate, one is sparse
  CHECK(ds.image_value(idx, ds.image_row(1)) ==
        ds.schema("crowdedness").value_index("moderate"));
  CHECK(ds.image_value(idx, ds.image_row(11)) ==
        ds.schema("crowdedness").value_index("sparse"));

  const Dataset rescoped = rescope_derived(ds, 2);
  REQUIRE(rescoped.derived_scope.at("crowdedness") ==
          std::optional<ClassId>(2));
  const int ridx = rescoped.schema_index("crowdedness");
  CHECK(rescoped.image_value(ridx, rescoped.image_row(1)) ==
        rescoped.schema("crowdedness").value_index("sparse"));
  CHECK(rescoped.image_value(ridx, rescoped.image_row(11)) ==
        rescoped.schema("crowdedness").value_index("sparse"));
  // already scoped to the requested class: nothing changes
  const Dataset same = rescope_derived(ds, 1);
  CHECK(same.image_value(idx, same.image_row(1)) ==
        ds.image_value(idx, ds.image_row(1)));

  // the audit sees per-class crowdedness: every bicycle image is sparse,
  // so class 2 has a single sensitive value and only a notice
  AnalysisConfig cfg = base_config();
  const FairnessReport report =
      audit(ds, {1, 2}, "crowdedness", {"dummy"}, cfg);
  REQUIRE(report.classes.size() == 2);
  CHECK(report.classes[0].spread_defined);
  CHECK(!report.classes[1].spread_defined);
  CHECK(!report.classes[1].spread_notice.empty());
  CHECK(!report.classes[1].ranking_notice.empty());
  CHECK(report.classes[1].controls.empty());
}

TEST_CASE("bad audit inputs are fatal") {
  const Dataset ds = two_class_dataset(607, true);
  const AnalysisConfig cfg = base_config();
  CHECK_THROWS_AS(audit(ds, {}, "region", {"occ"}, cfg), Error);
  CHECK_THROWS_AS(audit(ds, {1}, "region", {}, cfg), Error);
  CHECK_THROWS_AS(audit(ds, {1}, "nope", {"occ"}, cfg), Error);
  CHECK_THROWS_AS(audit(ds, {1}, "region", {"nope"}, cfg), Error);
  try {
    audit(ds, {1}, "region", {"nope"}, cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaNotFound);
  }
}
