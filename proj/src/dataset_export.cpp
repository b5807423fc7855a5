#include "icon2/dataset_export.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "icon2/errors.hpp"

namespace icon2 {

namespace {

using ordered_json = nlohmann::ordered_json;

/// Width such that the loader's x_min + w reproduces x_max exactly. The
/// naive x_max - x_min can land one ulp off after the reload addition, so
/// nudge until the round trip closes.
double span_for(double lo, double hi) {
  double w = hi - lo;
  for (int i = 0; i < 64 && lo + w != hi; ++i) {
    w = std::nextafter(w, lo + w < hi ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity());
  }
  return w;
}

ordered_json bbox_xywh(const BBox& box) {
  return ordered_json::array({box.x_min, box.y_min,
                              span_for(box.x_min, box.x_max),
                              span_for(box.y_min, box.y_max)});
}

bool looks_numeric(const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  (void)v;
  return end == text.c_str() + text.size() && !text.empty();
}

std::string csv_value(const std::string& text) {
  const bool needs_quotes =
      looks_numeric(text) ||
      text.find_first_of(",\"\r\n") != std::string::npos || text.empty();
  if (!needs_quotes) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  }
  out << text;
  if (!out) {
    throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
  }
}

std::string sanitized(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

}  // namespace

std::string coco_ground_truth_json(const Dataset& dataset) {
  ordered_json doc;
  doc["images"] = ordered_json::array();
  for (const auto& img : dataset.images) {
    doc["images"].push_back({{"id", img.image_id},
                             {"width", img.width},
                             {"height", img.height}});
  }
  doc["annotations"] = ordered_json::array();
  for (const auto& gt : dataset.ground_truth) {
    doc["annotations"].push_back({{"id", gt.gt_id},
                                  {"image_id", gt.image_id},
                                  {"category_id", gt.class_id},
                                  {"bbox", bbox_xywh(gt.box)}});
  }
  doc["categories"] = ordered_json::array();
  for (const auto& [id, name] : dataset.class_table) {
    doc["categories"].push_back({{"id", id}, {"name", name}});
  }
  return doc.dump(2) + "\n";
}

std::string coco_detections_json(const Dataset& dataset) {
  ordered_json doc = ordered_json::array();
  for (const auto& det : dataset.detections) {
    doc.push_back({{"image_id", det.image_id},
                   {"category_id", det.class_id},
                   {"bbox", bbox_xywh(det.box)},
                   {"score", det.confidence}});
  }
  return doc.dump(2) + "\n";
}

std::string sidecar_csv(const Dataset& dataset, std::string_view attribute) {
  const int idx = dataset.schema_index(attribute);
  if (idx < 0) {
    throw Error(ErrorCode::SchemaNotFound,
                "attribute '" + std::string(attribute) + "' is not registered");
  }
  const AttributeSchema& schema =
      dataset.schemas[static_cast<std::size_t>(idx)];
  const auto& column = dataset.assignments[static_cast<std::size_t>(idx)];

  ordered_json preamble;
  preamble["name"] = schema.name;
  preamble["level"] = to_string(schema.level);
  preamble["kind"] = to_string(schema.kind);
  preamble["values"] = schema.values;

  std::string out = "# " + preamble.dump() + "\r\n";
  out += "id,value\r\n";
  auto emit = [&](std::int64_t id, std::int32_t value) {
    out += std::to_string(id);
    out += ',';
    out += value == kUnknownValue
               ? kUnknownLabel
               : csv_value(schema.values[static_cast<std::size_t>(value)]);
    out += "\r\n";
  };
  if (schema.level == AttributeLevel::Image) {
    for (std::size_t i = 0; i < dataset.images.size(); ++i) {
      emit(dataset.images[i].image_id, column[i]);
    }
  } else {
    for (std::size_t g = 0; g < dataset.ground_truth.size(); ++g) {
      emit(dataset.ground_truth[g].gt_id, column[g]);
    }
  }
  return out;
}

std::string write_dataset(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::Io, "cannot create '" + dir + "': " + ec.message());
  }

  write_file(fs::path(dir) / "ground_truth.json",
             coco_ground_truth_json(dataset));
  write_file(fs::path(dir) / "detections.json", coco_detections_json(dataset));

  ordered_json manifest;
  manifest["schema_version"] = "1.0";
  manifest["ground_truth"] = "ground_truth.json";
  manifest["detections"] = "detections.json";
  manifest["attributes"] = ordered_json::object();
  for (const auto& schema : dataset.schemas) {
    const std::string file = "attr_" + sanitized(schema.name) + ".csv";
    write_file(fs::path(dir) / file, sidecar_csv(dataset, schema.name));
    ordered_json entry;
    entry["file"] = file;
    entry["level"] = to_string(schema.level);
    entry["kind"] = to_string(schema.kind);
    if (auto it = dataset.derived_scope.find(schema.name);
        it != dataset.derived_scope.end()) {
      entry["derived_for_class"] =
          it->second ? ordered_json(*it->second) : ordered_json(nullptr);
    }
    manifest["attributes"][schema.name] = entry;
  }

  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  write_file(manifest_path, manifest.dump(2) + "\n");
  return manifest_path.string();
}

}  // namespace icon2
