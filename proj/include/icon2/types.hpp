#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace icon2 {

using ImageId = std::int64_t;
using GtId = std::int64_t;
using ClassId = std::int64_t;

/// Axis-aligned box in pixel coordinates, corner form. Zero-area boxes are
/// rejected at ingest, so valid() holds for every box inside a Dataset.
struct BBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double aspect_ratio() const { return width() / height(); }
  bool valid() const { return x_max > x_min && y_max > y_min; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ImageRecord {
  ImageId image_id = 0;
  double width = 0;
  double height = 0;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct GroundTruthInstance {
  GtId gt_id = 0;
  ImageId image_id = 0;
  ClassId class_id = 0;
  BBox box;

  friend bool operator==(const GroundTruthInstance&,
                         const GroundTruthInstance&) = default;
};

struct DetectionInstance {
  ImageId image_id = 0;
  ClassId class_id = 0;
  BBox box;
  double confidence = 0;

  friend bool operator==(const DetectionInstance&,
                         const DetectionInstance&) = default;
};

enum class AttributeKind { Sensitive, Explanatory };
enum class AttributeLevel { Image, Instance };

/// Value index used for items without an annotation. Items carrying it are
/// excluded from any analysis over that attribute, never bucketed.
inline constexpr std::int32_t kUnknownValue = -1;
inline constexpr const char* kUnknownLabel = "unknown";

struct AttributeSchema {
  std::string name;
  AttributeKind kind = AttributeKind::Explanatory;
  AttributeLevel level = AttributeLevel::Image;
  std::vector<std::string> values;

  /// Index of `label` in values, or kUnknownValue if absent.
  std::int32_t value_index(std::string_view label) const;

  friend bool operator==(const AttributeSchema&,
                         const AttributeSchema&) = default;
};

const char* to_string(AttributeKind kind);
const char* to_string(AttributeLevel level);
AttributeKind attribute_kind_from(std::string_view text);
AttributeLevel attribute_level_from(std::string_view text);

/// In-memory dataset. Attribute assignments are stored columnar: one vector
/// per schema, indexed by image row (image-level) or ground-truth row
/// (instance-level), holding value indices into schema.values (kUnknownValue
/// for unannotated items). Immutable once ingestion finishes; analyses only
/// read it.
struct Dataset {
  std::vector<ImageRecord> images;
  std::vector<GroundTruthInstance> ground_truth;
  std::vector<DetectionInstance> detections;
  std::vector<AttributeSchema> schemas;
  std::vector<std::vector<std::int32_t>> assignments;  // parallel to schemas
  std::map<ClassId, std::string> class_table;

  /// Attributes produced by derive_* ops, with their class scope
  /// (nullopt = class-independent). Lets audit refresh per-class derivations.
  std::map<std::string, std::optional<ClassId>> derived_scope;

  // Lookup structures, rebuilt by finalize().
  std::unordered_map<ImageId, std::int32_t> image_rows;
  std::unordered_map<GtId, std::int32_t> gt_rows;
  std::vector<std::vector<std::int32_t>> gts_by_image;
  std::vector<std::vector<std::int32_t>> dets_by_image;

  /// Rebuilds indices and enforces referential integrity (unique ids, every
  /// instance pointing at an existing image). Throws Error(Integrity).
  void finalize();

  int schema_index(std::string_view name) const noexcept;  // -1 if absent
  const AttributeSchema& schema(std::string_view name) const;  // throws
  std::int32_t image_row(ImageId id) const;                    // throws

  /// Value index an instance carries for a schema; image-level attributes
  /// broadcast to every instance in the image.
  std::int32_t instance_value(int schema_idx, std::int32_t gt_row) const;
  std::int32_t image_value(int schema_idx, std::int32_t image_row) const;

  std::string class_name(ClassId id) const;
};

/// Label an instance carries for `attr` (image-level attributes broadcast),
/// or "unknown" when unannotated. Throws Error(SchemaNotFound) for an
/// unregistered attribute name.
std::string resolve_attribute(const Dataset& dataset, std::string_view attr,
                              const GroundTruthInstance& gt);

}  // namespace icon2
