#include "icon2/types.hpp"

#include <sstream>

#include "icon2/config.hpp"
#include "icon2/errors.hpp"

namespace icon2 {

const char* to_string(Interpolation interp) {
  return interp == Interpolation::AllPoints ? "all" : "101";
}

const char* to_string(Estimator est) {
  return est == Estimator::Sample ? "sample" : "population";
}

const char* Error::category() const noexcept {
  switch (code()) {
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::Integrity: return "integrity";
    case ErrorCode::Usage: return "usage";
    case ErrorCode::Format: return "format";
    case ErrorCode::SchemaNotFound: return "schema-not-found";
    case ErrorCode::Binning: return "binning";
    case ErrorCode::UndefinedAp: return "undefined-ap";
    case ErrorCode::SpreadUndefined: return "spread-undefined";
    case ErrorCode::ProxyUndefined: return "proxy-undefined";
    case ErrorCode::Spec: return "spec";
  }
  return "unknown";
}

const char* to_string(AttributeKind kind) {
  return kind == AttributeKind::Sensitive ? "sensitive" : "explanatory";
}

const char* to_string(AttributeLevel level) {
  return level == AttributeLevel::Image ? "image" : "instance";
}

AttributeKind attribute_kind_from(std::string_view text) {
  if (text == "sensitive") return AttributeKind::Sensitive;
  if (text == "explanatory") return AttributeKind::Explanatory;
  throw Error(ErrorCode::Usage,
              "attribute kind must be 'sensitive' or 'explanatory', got '" +
                  std::string(text) + "'");
}

AttributeLevel attribute_level_from(std::string_view text) {
  if (text == "image") return AttributeLevel::Image;
  if (text == "instance") return AttributeLevel::Instance;
  throw Error(ErrorCode::Usage,
              "attribute level must be 'image' or 'instance', got '" +
                  std::string(text) + "'");
}

std::int32_t AttributeSchema::value_index(std::string_view label) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == label) return static_cast<std::int32_t>(i);
  }
  return kUnknownValue;
}

void Dataset::finalize() {
  image_rows.clear();
  image_rows.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    if (img.width <= 0 || img.height <= 0) {
      throw Error(ErrorCode::Integrity,
                  "image " + std::to_string(img.image_id) +
                      " has non-positive dimensions");
    }
    auto [it, inserted] =
        image_rows.emplace(img.image_id, static_cast<std::int32_t>(i));
    if (!inserted) {
      throw Error(ErrorCode::Integrity,
                  "duplicate image id " + std::to_string(img.image_id));
    }
  }

  gt_rows.clear();
  gt_rows.reserve(ground_truth.size());
  gts_by_image.assign(images.size(), {});
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const auto& gt = ground_truth[i];
    auto img = image_rows.find(gt.image_id);
    if (img == image_rows.end()) {
      throw Error(ErrorCode::Integrity,
                  "ground truth " + std::to_string(gt.gt_id) +
                      " references missing image " +
                      std::to_string(gt.image_id));
    }
    auto [it, inserted] =
        gt_rows.emplace(gt.gt_id, static_cast<std::int32_t>(i));
    if (!inserted) {
      throw Error(ErrorCode::Integrity,
                  "duplicate ground-truth id " + std::to_string(gt.gt_id));
    }
    gts_by_image[img->second].push_back(static_cast<std::int32_t>(i));
  }

  dets_by_image.assign(images.size(), {});
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& det = detections[i];
    auto img = image_rows.find(det.image_id);
    if (img == image_rows.end()) {
      throw Error(ErrorCode::Integrity,
                  "detection references missing image " +
                      std::to_string(det.image_id));
    }
    dets_by_image[img->second].push_back(static_cast<std::int32_t>(i));
  }

  for (std::size_t s = 0; s < schemas.size(); ++s) {
    const std::size_t expect = schemas[s].level == AttributeLevel::Image
                                   ? images.size()
                                   : ground_truth.size();
    if (assignments.size() <= s || assignments[s].size() != expect) {
      throw Error(ErrorCode::Integrity,
                  "attribute '" + schemas[s].name +
                      "' assignment column has wrong length");
    }
    for (std::size_t n = s + 1; n < schemas.size(); ++n) {
      if (schemas[n].name == schemas[s].name) {
        throw Error(ErrorCode::Integrity,
                    "duplicate attribute schema '" + schemas[s].name + "'");
      }
    }
  }
}

int Dataset::schema_index(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    if (schemas[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const AttributeSchema& Dataset::schema(std::string_view name) const {
  int idx = schema_index(name);
  if (idx < 0) {
    throw Error(ErrorCode::SchemaNotFound,
                "attribute '" + std::string(name) + "' is not registered");
  }
  return schemas[static_cast<std::size_t>(idx)];
}

std::int32_t Dataset::image_row(ImageId id) const {
  auto it = image_rows.find(id);
  if (it == image_rows.end()) {
    throw Error(ErrorCode::Integrity,
                "unknown image id " + std::to_string(id));
  }
  return it->second;
}

std::int32_t Dataset::image_value(int schema_idx, std::int32_t row) const {
  return assignments[static_cast<std::size_t>(schema_idx)]
                    [static_cast<std::size_t>(row)];
}

std::int32_t Dataset::instance_value(int schema_idx,
                                     std::int32_t gt_row) const {
  const auto& schema = schemas[static_cast<std::size_t>(schema_idx)];
  if (schema.level == AttributeLevel::Instance) {
    return assignments[static_cast<std::size_t>(schema_idx)]
                      [static_cast<std::size_t>(gt_row)];
  }
  const auto& gt = ground_truth[static_cast<std::size_t>(gt_row)];
  return image_value(schema_idx, image_rows.at(gt.image_id));
}

std::string Dataset::class_name(ClassId id) const {
  auto it = class_table.find(id);
  return it == class_table.end() ? std::to_string(id) : it->second;
}

std::string resolve_attribute(const Dataset& dataset, std::string_view attr,
                              const GroundTruthInstance& gt) {
  int schema_idx = dataset.schema_index(attr);
  if (schema_idx < 0) {
    throw Error(ErrorCode::SchemaNotFound,
                "attribute '" + std::string(attr) + "' is not registered");
  }
  auto row = dataset.gt_rows.find(gt.gt_id);
  if (row == dataset.gt_rows.end()) {
    throw Error(ErrorCode::Integrity,
                "ground truth " + std::to_string(gt.gt_id) +
                    " is not part of the dataset");
  }
  std::int32_t value = dataset.instance_value(schema_idx, row->second);
  if (value == kUnknownValue) return kUnknownLabel;
  return dataset.schemas[static_cast<std::size_t>(schema_idx)]
      .values[static_cast<std::size_t>(value)];
}

}  // namespace icon2
