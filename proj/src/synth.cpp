#include "icon2/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "icon2/errors.hpp"
#include "icon2/rng.hpp"

namespace icon2 {

namespace {

using ordered_json = nlohmann::ordered_json;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::Spec, what);
}

void check_stochastic(const std::vector<double>& row,
                      std::size_t len, const std::string& what) {
  require(row.size() == len, what + " must have " + std::to_string(len) +
                                 " entries");
  double sum = 0;
  for (double p : row) {
    require(p >= 0, what + " entries must be non-negative");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-9, what + " must sum to 1");
}

void check_box_fits(double max_area, const std::array<double, 2>& aspect,
                    const ScenarioSpec& spec, const std::string& what) {
  const double max_w = std::sqrt(max_area * aspect[1]);
  const double max_h = std::sqrt(max_area / aspect[0]);
  require(max_w <= spec.image_width && max_h <= spec.image_height,
          what + ": boxes can exceed the image bounds");
}

void check_plan(const AttributePlan& plan, std::size_t sensitive_values,
                const ScenarioSpec& spec) {
  const std::string what = "attribute '" + plan.name + "'";
  require(!plan.name.empty(), "attribute plan without a name");
  require(plan.values.size() >= 1, what + " needs values");
  for (const auto& v : plan.values) {
    require(!v.empty() && v != kUnknownLabel, what + " uses a reserved value");
  }
  require(plan.marginals.empty() != plan.table.empty(),
          what + " needs exactly one of marginals or table");
  if (!plan.marginals.empty()) {
    check_stochastic(plan.marginals, plan.values.size(), what + " marginals");
  }
  if (!plan.table.empty()) {
    require(plan.table.size() == sensitive_values,
            what + " table needs one row per sensitive value");
    for (const auto& row : plan.table) {
      check_stochastic(row, plan.values.size(), what + " table row");
    }
  }
  if (!plan.area_ranges.empty()) {
    require(plan.level == AttributeLevel::Instance,
            what + ": area_ranges need an instance-level attribute");
    require(plan.area_ranges.size() == plan.values.size(),
            what + " needs one area range per value");
    for (const auto& range : plan.area_ranges) {
      require(range[0] > 0 && range[0] <= range[1],
              what + " area ranges must be positive and ascending");
      check_box_fits(range[1], spec.box_aspect, spec, what);
    }
  }
}

}  // namespace

void validate(const ScenarioSpec& spec) {
  require(spec.num_images >= 1, "num_images must be >= 1");
  require(spec.image_width > 0 && spec.image_height > 0,
          "image dimensions must be positive");
  require(!spec.classes.empty(), "at least one class required");
  require(spec.min_instances >= 0 &&
              spec.min_instances <= spec.max_instances,
          "instances per image must satisfy 0 <= min <= max");

  require(spec.sensitive.level == AttributeLevel::Image,
          "the sensitive attribute must be image-level");
  require(spec.sensitive.table.empty(),
          "the sensitive attribute takes marginals, not a table");
  check_plan(spec.sensitive, 0, spec);

  for (const auto& plan : spec.explanatory) {
    require(plan.name != spec.sensitive.name,
            "explanatory attribute reuses the sensitive name");
    check_plan(plan, spec.sensitive.values.size(), spec);
  }
  long with_ranges = 0;
  for (const auto& plan : spec.explanatory) {
    if (!plan.area_ranges.empty()) ++with_ranges;
  }
  require(with_ranges <= 1, "at most one attribute may carry area_ranges");

  require(spec.box_area[0] > 0 && spec.box_area[0] <= spec.box_area[1],
          "box_area must be positive and ascending");
  require(spec.box_aspect[0] > 0 && spec.box_aspect[0] <= spec.box_aspect[1],
          "box_aspect must be positive and ascending");
  check_box_fits(spec.box_area[1], spec.box_aspect, spec, "box_area");

  const auto driver =
      std::find_if(spec.explanatory.begin(), spec.explanatory.end(),
                   [&](const AttributePlan& p) {
                     return p.name == spec.detector.driver;
                   });
  require(driver != spec.explanatory.end(),
          "detector driver '" + spec.detector.driver +
              "' is not an explanatory attribute");
  for (const auto& [value, p] : spec.detector.detect_prob) {
    require(p >= 0 && p <= 1, "detect_prob values must lie in [0, 1]");
  }
  const bool has_default = spec.detector.detect_prob.count("default") > 0;
  for (const auto& value : driver->values) {
    require(has_default || spec.detector.detect_prob.count(value),
            "detect_prob missing for driver value '" + value + "'");
  }
  require(spec.detector.tp_confidence[0] <= spec.detector.tp_confidence[1] &&
              spec.detector.fp_confidence[0] <=
                  spec.detector.fp_confidence[1],
          "confidence ranges must be ascending");
  for (double c : {spec.detector.tp_confidence[0],
                   spec.detector.tp_confidence[1],
                   spec.detector.fp_confidence[0],
                   spec.detector.fp_confidence[1]}) {
    require(c >= 0 && c <= 1, "confidence bounds must lie in [0, 1]");
  }
  require(spec.detector.jitter_px >= 0, "jitter_px must be >= 0");
  require(spec.detector.clutter_fp_rate >= 0,
          "clutter_fp_rate must be >= 0");
}

namespace {

AttributePlan plan_from_json(const ordered_json& node) {
  AttributePlan plan;
  plan.name = node.at("name").get<std::string>();
  if (node.contains("level")) {
    plan.level = attribute_level_from(node.at("level").get<std::string>());
  }
  plan.values = node.at("values").get<std::vector<std::string>>();
  if (node.contains("marginals")) {
    plan.marginals = node.at("marginals").get<std::vector<double>>();
  }
  if (node.contains("table")) {
    plan.table = node.at("table").get<std::vector<std::vector<double>>>();
  }
  if (node.contains("area_ranges")) {
    for (const auto& range : node.at("area_ranges")) {
      plan.area_ranges.push_back(
          {range.at(0).get<double>(), range.at(1).get<double>()});
    }
  }
  return plan;
}

ordered_json plan_to_json(const AttributePlan& plan) {
  ordered_json node;
  node["name"] = plan.name;
  node["level"] = to_string(plan.level);
  node["values"] = plan.values;
  if (!plan.marginals.empty()) node["marginals"] = plan.marginals;
  if (!plan.table.empty()) node["table"] = plan.table;
  if (!plan.area_ranges.empty()) {
    ordered_json ranges = ordered_json::array();
    for (const auto& range : plan.area_ranges) {
      ranges.push_back({range[0], range[1]});
    }
    node["area_ranges"] = ranges;
  }
  return node;
}

}  // namespace

ScenarioSpec scenario_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("scenario: ") + e.what());
  }
  ScenarioSpec spec;
  try {
    spec.num_images = doc.at("num_images").get<long>();
    if (doc.contains("image_width")) {
      spec.image_width = doc.at("image_width").get<double>();
    }
    if (doc.contains("image_height")) {
      spec.image_height = doc.at("image_height").get<double>();
    }
    spec.seed = doc.value("seed", 0ull);
    spec.classes = doc.at("classes").get<std::vector<std::string>>();
    if (doc.contains("instances_per_image")) {
      spec.min_instances = doc.at("instances_per_image").at("min").get<long>();
      spec.max_instances = doc.at("instances_per_image").at("max").get<long>();
    }
    spec.sensitive = plan_from_json(doc.at("sensitive"));
    spec.sensitive.level = AttributeLevel::Image;
    for (const auto& node : doc.at("explanatory")) {
      spec.explanatory.push_back(plan_from_json(node));
    }
    const auto& det = doc.at("detector");
    spec.detector.driver = det.at("driver").get<std::string>();
    for (const auto& [key, value] : det.at("detect_prob").items()) {
      spec.detector.detect_prob[key] = value.get<double>();
    }
    auto range = [](const ordered_json& node) {
      return std::array<double, 2>{node.at(0).get<double>(),
                                   node.at(1).get<double>()};
    };
    if (det.contains("tp_confidence")) {
      spec.detector.tp_confidence = range(det.at("tp_confidence"));
    }
    if (det.contains("fp_confidence")) {
      spec.detector.fp_confidence = range(det.at("fp_confidence"));
    }
    spec.detector.jitter_px = det.value("jitter_px", 0.0);
    spec.detector.clutter_fp_rate = det.value("clutter_fp_rate", 0.0);
    if (doc.contains("box_area")) spec.box_area = range(doc.at("box_area"));
    if (doc.contains("box_aspect")) {
      spec.box_aspect = range(doc.at("box_aspect"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("scenario: ") + e.what());
  }
  validate(spec);
  return spec;
}

std::string scenario_to_json(const ScenarioSpec& spec) {
  ordered_json doc;
  doc["num_images"] = spec.num_images;
  doc["image_width"] = spec.image_width;
  doc["image_height"] = spec.image_height;
  doc["seed"] = spec.seed;
  doc["classes"] = spec.classes;
  doc["instances_per_image"] = {{"min", spec.min_instances},
                                {"max", spec.max_instances}};
  doc["sensitive"] = plan_to_json(spec.sensitive);
  doc["explanatory"] = ordered_json::array();
  for (const auto& plan : spec.explanatory) {
    doc["explanatory"].push_back(plan_to_json(plan));
  }
  ordered_json det;
  det["driver"] = spec.detector.driver;
  det["detect_prob"] = spec.detector.detect_prob;
  det["tp_confidence"] = spec.detector.tp_confidence;
  det["fp_confidence"] = spec.detector.fp_confidence;
  det["jitter_px"] = spec.detector.jitter_px;
  det["clutter_fp_rate"] = spec.detector.clutter_fp_rate;
  doc["detector"] = det;
  doc["box_area"] = spec.box_area;
  doc["box_aspect"] = spec.box_aspect;
  return doc.dump(2) + "\n";
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return scenario_from_json(text);
}

namespace {

double detect_prob_for(const DetectorModel& det, const std::string& value) {
  auto it = det.detect_prob.find(value);
  if (it == det.detect_prob.end()) it = det.detect_prob.find("default");
  return it->second;
}

}  // namespace

Dataset generate_scenario(const ScenarioSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);

  Dataset ds;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    ds.class_table[static_cast<ClassId>(c + 1)] = spec.classes[c];
  }

  const std::size_t num_attrs = spec.explanatory.size() + 1;
  ds.schemas.reserve(num_attrs);
  ds.assignments.resize(num_attrs);
  AttributeSchema sens_schema{spec.sensitive.name, AttributeKind::Sensitive,
                              AttributeLevel::Image, spec.sensitive.values};
  ds.schemas.push_back(sens_schema);
  for (const auto& plan : spec.explanatory) {
    ds.schemas.push_back(AttributeSchema{plan.name,
                                         AttributeKind::Explanatory,
                                         plan.level, plan.values});
  }

  const AttributePlan* area_plan = nullptr;
  std::size_t area_plan_idx = 0;
  for (std::size_t e = 0; e < spec.explanatory.size(); ++e) {
    if (!spec.explanatory[e].area_ranges.empty()) {
      area_plan = &spec.explanatory[e];
      area_plan_idx = e;
    }
  }
  std::size_t driver_idx = 0;
  for (std::size_t e = 0; e < spec.explanatory.size(); ++e) {
    if (spec.explanatory[e].name == spec.detector.driver) driver_idx = e;
  }
  const AttributePlan& driver = spec.explanatory[driver_idx];

  auto draw_box = [&](const std::array<double, 2>& area_range) {
    const double area = rng.uniform(area_range[0], area_range[1]);
    const double aspect = rng.uniform(spec.box_aspect[0], spec.box_aspect[1]);
    const double w = std::sqrt(area * aspect);
    const double h = std::sqrt(area / aspect);
    const double x = rng.uniform(0.0, spec.image_width - w);
    const double y = rng.uniform(0.0, spec.image_height - h);
    return BBox{x, y, x + w, y + h};
  };
  auto draw_value = [&](const AttributePlan& plan, std::int32_t sens_value) {
    const auto& probs = plan.table.empty()
                            ? plan.marginals
                            : plan.table[static_cast<std::size_t>(sens_value)];
    return static_cast<std::int32_t>(rng.categorical(probs));
  };

  GtId next_gt = 1;
  for (long i = 0; i < spec.num_images; ++i) {
    const ImageId image_id = i + 1;
    ds.images.push_back({image_id, spec.image_width, spec.image_height});

    const auto sens_value =
        static_cast<std::int32_t>(rng.categorical(spec.sensitive.marginals));
    ds.assignments[0].push_back(sens_value);

    std::vector<std::int32_t> image_values(spec.explanatory.size(),
                                           kUnknownValue);
    for (std::size_t e = 0; e < spec.explanatory.size(); ++e) {
      if (spec.explanatory[e].level == AttributeLevel::Image) {
        image_values[e] = draw_value(spec.explanatory[e], sens_value);
        ds.assignments[e + 1].push_back(image_values[e]);
      }
    }

    const long count = rng.uniform_int(spec.min_instances,
                                       spec.max_instances);
    for (long k = 0; k < count; ++k) {
      const auto class_pos = static_cast<std::size_t>(rng.uniform_int(
          0, static_cast<long>(spec.classes.size()) - 1));

      std::vector<std::int32_t> values(spec.explanatory.size(),
                                       kUnknownValue);
      for (std::size_t e = 0; e < spec.explanatory.size(); ++e) {
        values[e] = spec.explanatory[e].level == AttributeLevel::Image
                        ? image_values[e]
                        : draw_value(spec.explanatory[e], sens_value);
      }

      GroundTruthInstance gt;
      gt.gt_id = next_gt++;
      gt.image_id = image_id;
      gt.class_id = static_cast<ClassId>(class_pos + 1);
      gt.box = draw_box(
          area_plan ? area_plan->area_ranges[static_cast<std::size_t>(
                          values[area_plan_idx])]
                    : spec.box_area);
      ds.ground_truth.push_back(gt);
      for (std::size_t e = 0; e < spec.explanatory.size(); ++e) {
        if (spec.explanatory[e].level == AttributeLevel::Instance) {
          ds.assignments[e + 1].push_back(values[e]);
        }
      }

      const std::string& driver_value =
          driver.values[static_cast<std::size_t>(values[driver_idx])];
      if (rng.uniform() < detect_prob_for(spec.detector, driver_value)) {
        BBox box = gt.box;
        if (spec.detector.jitter_px > 0) {
          BBox jittered{
              box.x_min + rng.normal(0, spec.detector.jitter_px),
              box.y_min + rng.normal(0, spec.detector.jitter_px),
              box.x_max + rng.normal(0, spec.detector.jitter_px),
              box.y_max + rng.normal(0, spec.detector.jitter_px)};
          if (jittered.valid()) box = jittered;
        }
        ds.detections.push_back(
            {image_id, gt.class_id, box,
             rng.uniform(spec.detector.tp_confidence[0],
                         spec.detector.tp_confidence[1])});
      }
    }

    const long clutter = rng.poisson(spec.detector.clutter_fp_rate);
    for (long f = 0; f < clutter; ++f) {
      const auto class_pos = static_cast<std::size_t>(rng.uniform_int(
          0, static_cast<long>(spec.classes.size()) - 1));
      ds.detections.push_back(
          {image_id, static_cast<ClassId>(class_pos + 1),
           draw_box(spec.box_area),
           rng.uniform(spec.detector.fp_confidence[0],
                       spec.detector.fp_confidence[1])});
    }
  }

  ds.finalize();
  return ds;
}

double expected_recall(const ScenarioSpec& spec,
                       std::string_view sensitive_value) {
  validate(spec);
  const auto sens_it =
      std::find(spec.sensitive.values.begin(), spec.sensitive.values.end(),
                sensitive_value);
  if (sens_it == spec.sensitive.values.end()) {
    throw Error(ErrorCode::Usage, "unknown sensitive value '" +
                                      std::string(sensitive_value) + "'");
  }
  const auto row_idx =
      static_cast<std::size_t>(sens_it - spec.sensitive.values.begin());

  const auto driver =
      std::find_if(spec.explanatory.begin(), spec.explanatory.end(),
                   [&](const AttributePlan& p) {
                     return p.name == spec.detector.driver;
                   });
  const std::vector<double>& probs =
      driver->table.empty() ? driver->marginals : driver->table[row_idx];

  double recall = 0;
  for (std::size_t j = 0; j < driver->values.size(); ++j) {
    recall += probs[j] * detect_prob_for(spec.detector, driver->values[j]);
  }
  return recall;
}

}  // namespace icon2
