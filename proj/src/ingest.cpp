#include "icon2/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "icon2/errors.hpp"

namespace icon2 {

namespace {

using nlohmann::json;

json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

const json& member(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::Parse, ctx + " must be an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::Parse,
                ctx + " is missing field '" + std::string(key) + "'");
  }
  return *it;
}

std::int64_t int_field(const json& obj, const char* key,
                       const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw Error(ErrorCode::Parse,
                ctx + "." + key + " must be an integer");
  }
  return v.get<std::int64_t>();
}

double num_field(const json& obj, const char* key, const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (!v.is_number()) {
    throw Error(ErrorCode::Parse, ctx + "." + key + " must be a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw Error(ErrorCode::Parse, ctx + "." + key + " must be finite");
  }
  return d;
}

std::string string_field(const json& obj, const char* key,
                         const std::string& ctx) {
  const json& v = member(obj, key, ctx);
  if (!v.is_string()) {
    throw Error(ErrorCode::Parse, ctx + "." + key + " must be a string");
  }
  return v.get<std::string>();
}

/// COCO bbox [x, y, w, h] to corner form. Returns false for degenerate
/// (w <= 0 or h <= 0) boxes.
bool corner_box(const json& obj, const std::string& ctx, BBox& out) {
  const json& arr = member(obj, "bbox", ctx);
  if (!arr.is_array() || arr.size() != 4) {
    throw Error(ErrorCode::Parse, ctx + ".bbox must be [x, y, w, h]");
  }
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!arr[i].is_number()) {
      throw Error(ErrorCode::Parse, ctx + ".bbox must hold numbers");
    }
    v[i] = arr[i].get<double>();
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::Parse, ctx + ".bbox must be finite");
    }
  }
  if (v[2] <= 0 || v[3] <= 0) return false;
  out = BBox{v[0], v[1], v[0] + v[2], v[1] + v[3]};
  return true;
}

void list_offenders(const char* what, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return;
  std::ostringstream msg;
  msg << what << " at rows";
  const std::size_t show = std::min<std::size_t>(rows.size(), 5);
  for (std::size_t i = 0; i < show; ++i) msg << ' ' << rows[i];
  if (rows.size() > show) msg << " and " << rows.size() - show << " more";
  throw Error(ErrorCode::Integrity, msg.str());
}

}  // namespace

Dataset load_ground_truth(const std::string& path, WarningSummary& warnings) {
  const json doc = parse_json_file(path);
  const json& images = member(doc, "images", path);
  const json& annotations = member(doc, "annotations", path);
  const json& categories = member(doc, "categories", path);
  for (const json* arr : {&images, &annotations, &categories}) {
    if (!arr->is_array()) {
      throw Error(ErrorCode::Parse,
                  path + ": images/annotations/categories must be arrays");
    }
  }

  Dataset ds;
  ds.images.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ctx = "images[" + std::to_string(i) + "]";
    ImageRecord rec;
    rec.image_id = int_field(images[i], "id", ctx);
    rec.width = num_field(images[i], "width", ctx);
    rec.height = num_field(images[i], "height", ctx);
    ds.images.push_back(rec);
  }

  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string ctx = "categories[" + std::to_string(i) + "]";
    const ClassId id = int_field(categories[i], "id", ctx);
    auto [it, inserted] =
        ds.class_table.emplace(id, string_field(categories[i], "name", ctx));
    if (!inserted) {
      throw Error(ErrorCode::Integrity,
                  "duplicate category id " + std::to_string(id));
    }
  }

  std::vector<std::size_t> bad_category;
  ds.ground_truth.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string ctx = "annotations[" + std::to_string(i) + "]";
    GroundTruthInstance gt;
    gt.gt_id = int_field(annotations[i], "id", ctx);
    gt.image_id = int_field(annotations[i], "image_id", ctx);
    gt.class_id = int_field(annotations[i], "category_id", ctx);
    if (!corner_box(annotations[i], ctx, gt.box)) {
      warnings.add("degenerate_box_dropped");
      continue;
    }
    if (!ds.class_table.count(gt.class_id)) bad_category.push_back(i);
    ds.ground_truth.push_back(gt);
  }
  list_offenders("annotations reference unknown categories", bad_category);

  ds.finalize();
  return ds;
}

void load_detections(const std::string& path, Dataset& dataset,
                     WarningSummary& warnings) {
  json doc = parse_json_file(path);
  if (doc.is_object()) {
    // Some exporters wrap the results array.
    for (const char* key : {"detections", "annotations"}) {
      if (auto it = doc.find(key); it != doc.end()) {
        doc = std::move(*it);
        break;
      }
    }
  }
  if (!doc.is_array()) {
    throw Error(ErrorCode::Parse,
                path + ": results must be a JSON array of detections");
  }

  std::vector<std::size_t> bad_image;
  std::vector<std::size_t> bad_category;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string ctx = "detections[" + std::to_string(i) + "]";
    DetectionInstance det;
    det.image_id = int_field(doc[i], "image_id", ctx);
    det.class_id = int_field(doc[i], "category_id", ctx);
    det.confidence = num_field(doc[i], "score", ctx);
    if (det.confidence < 0 || det.confidence > 1) {
      det.confidence = std::clamp(det.confidence, 0.0, 1.0);
      warnings.add("score_clamped");
    }
    if (!corner_box(doc[i], ctx, det.box)) {
      warnings.add("degenerate_box_dropped");
      continue;
    }
    if (!dataset.image_rows.count(det.image_id)) {
      bad_image.push_back(i);
      continue;
    }
    if (!dataset.class_table.count(det.class_id)) {
      bad_category.push_back(i);
      continue;
    }
    dataset.detections.push_back(det);
  }
  list_offenders("detections reference unknown images", bad_image);
  list_offenders("detections reference unknown categories", bad_category);

  dataset.finalize();
}

namespace {

struct CsvField {
  std::string text;
  bool quoted = false;
};

struct CsvRecord {
  std::vector<CsvField> fields;
  std::size_t line = 0;
};

struct CsvDocument {
  std::vector<std::string> comments;  // leading '#' lines, marker stripped
  std::vector<CsvRecord> records;
};

CsvDocument scan_csv(const std::string& content, const std::string& path) {
  CsvDocument doc;
  std::size_t pos = 0;
  std::size_t line = 1;
  const std::size_t n = content.size();

  auto at_newline = [&] {
    return pos < n && (content[pos] == '\n' || content[pos] == '\r');
  };
  auto eat_newline = [&] {
    if (content[pos] == '\r' && pos + 1 < n && content[pos + 1] == '\n') ++pos;
    ++pos;
    ++line;
  };

  while (pos < n) {
    if (content[pos] == '#') {
      std::size_t end = content.find_first_of("\r\n", pos);
      if (end == std::string::npos) end = n;
      std::size_t start = pos + 1;
      while (start < end && content[start] == ' ') ++start;
      doc.comments.push_back(content.substr(start, end - start));
      pos = end;
      if (at_newline()) eat_newline();
      continue;
    }
    if (at_newline()) {  // blank line
      eat_newline();
      continue;
    }

    CsvRecord record;
    record.line = line;
    while (true) {
      CsvField field;
      if (pos < n && content[pos] == '"') {
        field.quoted = true;
        ++pos;
        while (true) {
          if (pos >= n) {
            throw Error(ErrorCode::Parse,
                        path + ":" + std::to_string(line) +
                            ": unterminated quoted field");
          }
          if (content[pos] == '"') {
            if (pos + 1 < n && content[pos + 1] == '"') {
              field.text += '"';
              pos += 2;
              continue;
            }
            ++pos;
            break;
          }
          if (content[pos] == '\n') ++line;
          field.text += content[pos++];
        }
        if (pos < n && content[pos] != ',' && !at_newline()) {
          throw Error(ErrorCode::Parse,
                      path + ":" + std::to_string(line) +
                          ": stray text after closing quote");
        }
      } else {
        while (pos < n && content[pos] != ',' && !at_newline()) {
          field.text += content[pos++];
        }
      }
      record.fields.push_back(std::move(field));
      if (pos < n && content[pos] == ',') {
        ++pos;
        continue;
      }
      break;
    }
    if (at_newline()) eat_newline();
    doc.records.push_back(std::move(record));
  }
  return doc;
}

bool parse_number(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool is_missing(const CsvField& field) {
  return field.text.empty() || field.text == kUnknownLabel;
}

void apply_preamble(const std::string& text, SidecarAttributeFile& file,
                    const std::string& path) {
  json pre;
  try {
    pre = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, path + ": bad preamble: " + e.what());
  }
  if (!pre.is_object()) {
    throw Error(ErrorCode::Parse, path + ": preamble must be a JSON object");
  }
  if (auto it = pre.find("name"); it != pre.end()) {
    file.name = it->get<std::string>();
  }
  if (auto it = pre.find("level"); it != pre.end()) {
    file.level = attribute_level_from(it->get<std::string>());
  }
  if (auto it = pre.find("kind"); it != pre.end()) {
    file.kind = attribute_kind_from(it->get<std::string>());
  }
  if (auto it = pre.find("values"); it != pre.end()) {
    if (!it->is_array()) {
      throw Error(ErrorCode::Parse, path + ": preamble values must be a list");
    }
    for (const auto& v : *it) {
      file.declared_values.push_back(v.get<std::string>());
    }
  }
}

}  // namespace

SidecarAttributeFile read_sidecar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const CsvDocument doc = scan_csv(buffer.str(), path);

  SidecarAttributeFile file;
  for (const auto& comment : doc.comments) {
    if (!comment.empty() && comment.front() == '{') {
      apply_preamble(comment, file, path);
      break;
    }
  }

  if (doc.records.empty()) {
    throw Error(ErrorCode::Parse, path + ": missing 'id,value' header");
  }
  const auto& header = doc.records.front().fields;
  if (header.size() != 2 || header[0].text != "id" ||
      header[1].text != "value") {
    throw Error(ErrorCode::Parse, path + ": header must be 'id,value'");
  }

  bool saw_numeric = false;
  bool saw_categorical = false;
  std::vector<double> numbers(doc.records.size(), 0.0);
  for (std::size_t r = 1; r < doc.records.size(); ++r) {
    const CsvRecord& rec = doc.records[r];
    if (rec.fields.size() != 2) {
      throw Error(ErrorCode::Parse,
                  path + ":" + std::to_string(rec.line) +
                      ": expected 2 fields, got " +
                      std::to_string(rec.fields.size()));
    }
    const CsvField& value = rec.fields[1];
    if (is_missing(value)) continue;
    if (!value.quoted && parse_number(value.text, numbers[r])) {
      saw_numeric = true;
    } else {
      saw_categorical = true;
    }
  }
  if (saw_numeric && saw_categorical) {
    throw Error(ErrorCode::Format,
                path + " mixes continuous and categorical values");
  }
  file.continuous = saw_numeric;

  file.rows.reserve(doc.records.size() - 1);
  for (std::size_t r = 1; r < doc.records.size(); ++r) {
    const CsvRecord& rec = doc.records[r];
    SidecarRow row;
    row.id = rec.fields[0].text;
    if (is_missing(rec.fields[1])) {
      row.label = kUnknownLabel;
    } else if (file.continuous) {
      row.number = numbers[r];
    } else {
      row.label = rec.fields[1].text;
    }
    file.rows.push_back(std::move(row));
  }
  return file;
}

namespace {

std::int32_t sidecar_row_index(const Dataset& ds, const SidecarRow& row,
                               AttributeLevel level, const std::string& name) {
  std::int64_t id = 0;
  const char* first = row.id.data();
  const char* last = first + row.id.size();
  auto [ptr, ec] = std::from_chars(first, last, id);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::Parse, "attribute '" + name + "': id '" + row.id +
                                      "' is not an integer");
  }
  if (level == AttributeLevel::Image) {
    auto it = ds.image_rows.find(id);
    if (it == ds.image_rows.end()) {
      throw Error(ErrorCode::Integrity,
                  "attribute '" + name + "' references missing image " +
                      row.id);
    }
    return it->second;
  }
  auto it = ds.gt_rows.find(id);
  if (it == ds.gt_rows.end()) {
    throw Error(ErrorCode::Integrity,
                "attribute '" + name + "' references missing instance " +
                    row.id);
  }
  return it->second;
}

void register_schema(Dataset& ds, AttributeSchema schema,
                     std::vector<std::int32_t> column,
                     WarningSummary& warnings) {
  const int existing = ds.schema_index(schema.name);
  ds.derived_scope.erase(schema.name);
  if (existing >= 0) {
    warnings.add("schema_replaced");
    ds.schemas[static_cast<std::size_t>(existing)] = std::move(schema);
    ds.assignments[static_cast<std::size_t>(existing)] = std::move(column);
  } else {
    ds.schemas.push_back(std::move(schema));
    ds.assignments.push_back(std::move(column));
  }
  ds.finalize();
}

}  // namespace

void attach_attributes(Dataset& dataset, const SidecarAttributeFile& file,
                       AttributeKind kind,
                       const std::optional<BinningSpec>& binning,
                       WarningSummary& warnings) {
  if (file.name.empty()) {
    throw Error(ErrorCode::Usage,
                "attribute sidecar has no name (preamble or flag required)");
  }
  if (file.name == "all" || file.name == kUnknownLabel) {
    throw Error(ErrorCode::Usage,
                "attribute name '" + file.name + "' is reserved");
  }

  AttributeSchema schema;
  schema.name = file.name;
  schema.kind = kind;
  schema.level = file.level;

  const std::size_t column_size = file.level == AttributeLevel::Image
                                      ? dataset.images.size()
                                      : dataset.ground_truth.size();
  std::vector<std::int32_t> column(column_size, kUnknownValue);
  std::unordered_set<std::int32_t> seen;

  auto target = [&](const SidecarRow& row) {
    const std::int32_t idx =
        sidecar_row_index(dataset, row, file.level, file.name);
    if (!seen.insert(idx).second) {
      throw Error(ErrorCode::Integrity, "attribute '" + file.name +
                                            "' assigns id " + row.id +
                                            " more than once");
    }
    return idx;
  };

  if (file.continuous) {
    if (!binning) {
      throw Error(ErrorCode::Usage, "attribute '" + file.name +
                                        "' is continuous and needs a binning "
                                        "spec");
    }
    std::vector<double> values;
    values.reserve(file.rows.size());
    for (const auto& row : file.rows) {
      if (row.label != kUnknownLabel) values.push_back(row.number);
    }
    const BinningResult bins = bin_continuous(values, *binning);
    if (bins.imbalanced) warnings.add("binning_population_imbalance");
    schema.values = default_bin_labels(binning->num_bins);

    std::size_t next = 0;
    for (const auto& row : file.rows) {
      const std::int32_t idx = target(row);
      if (row.label == kUnknownLabel) continue;
      column[static_cast<std::size_t>(idx)] = bins.assignment[next++];
    }
  } else {
    if (binning) {
      throw Error(ErrorCode::Usage, "attribute '" + file.name +
                                        "' is categorical; binning does not "
                                        "apply");
    }
    const bool declared = !file.declared_values.empty();
    if (declared) {
      schema.values = file.declared_values;
      for (const auto& v : schema.values) {
        if (v == kUnknownLabel || v.empty()) {
          throw Error(ErrorCode::Format, "attribute '" + file.name +
                                             "' declares reserved value '" +
                                             v + "'");
        }
        if (std::count(schema.values.begin(), schema.values.end(), v) != 1) {
          throw Error(ErrorCode::Format, "attribute '" + file.name +
                                             "' declares duplicate value '" +
                                             v + "'");
        }
      }
    }
    for (const auto& row : file.rows) {
      const std::int32_t idx = target(row);
      if (row.label == kUnknownLabel) continue;
      std::int32_t value = schema.value_index(row.label);
      if (value == kUnknownValue) {
        if (declared) {
          throw Error(ErrorCode::Format,
                      "attribute '" + file.name + "': value '" + row.label +
                          "' is not among the declared values");
        }
        value = static_cast<std::int32_t>(schema.values.size());
        schema.values.push_back(row.label);
      }
      column[static_cast<std::size_t>(idx)] = value;
    }
  }

  register_schema(dataset, std::move(schema), std::move(column), warnings);
}

void derive_size_attribute(Dataset& dataset, std::optional<ClassId> class_id,
                           WarningSummary& warnings,
                           const std::array<double, 2>& edges) {
  if (!(edges[0] > 0 && edges[0] < edges[1])) {
    throw Error(ErrorCode::Usage, "size edges must be ascending and positive");
  }
  std::vector<std::int32_t> column(dataset.ground_truth.size(), kUnknownValue);
  for (std::size_t g = 0; g < dataset.ground_truth.size(); ++g) {
    const auto& gt = dataset.ground_truth[g];
    if (class_id && gt.class_id != *class_id) continue;
    column[g] = bin_of(edges, gt.box.area());
  }
  AttributeSchema schema{"size", AttributeKind::Explanatory,
                         AttributeLevel::Instance,
                         {"small", "medium", "large"}};
  register_schema(dataset, std::move(schema), std::move(column), warnings);
  dataset.derived_scope["size"] = class_id;
}

void derive_aspect_ratio_attribute(Dataset& dataset,
                                   std::optional<ClassId> class_id,
                                   WarningSummary& warnings,
                                   const std::array<double, 2>& edges) {
  if (!(edges[0] > 0 && edges[0] < edges[1])) {
    throw Error(ErrorCode::Usage,
                "aspect-ratio edges must be ascending and positive");
  }
  std::vector<std::int32_t> column(dataset.ground_truth.size(), kUnknownValue);
  for (std::size_t g = 0; g < dataset.ground_truth.size(); ++g) {
    const auto& gt = dataset.ground_truth[g];
    if (class_id && gt.class_id != *class_id) continue;
    const double ratio = gt.box.aspect_ratio();
    // Both edges belong to the square bucket.
    column[g] = ratio < edges[0] ? 0 : (ratio <= edges[1] ? 1 : 2);
  }
  AttributeSchema schema{"aspect_ratio", AttributeKind::Explanatory,
                         AttributeLevel::Instance, {"tall", "square", "wide"}};
  register_schema(dataset, std::move(schema), std::move(column), warnings);
  dataset.derived_scope["aspect_ratio"] = class_id;
}

void derive_crowdedness_attribute(Dataset& dataset,
                                  std::optional<ClassId> class_id,
                                  WarningSummary& warnings,
                                  const std::array<long, 2>& edges) {
  if (!(edges[0] > 0 && edges[0] < edges[1])) {
    throw Error(ErrorCode::Usage,
                "crowdedness edges must be ascending and positive");
  }
  std::vector<long> counts(dataset.images.size(), 0);
  for (const auto& gt : dataset.ground_truth) {
    if (class_id && gt.class_id != *class_id) continue;
    ++counts[static_cast<std::size_t>(dataset.image_rows.at(gt.image_id))];
  }
  std::vector<std::int32_t> column(dataset.images.size(), kUnknownValue);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;  // no instances: excluded, not "sparse"
    column[i] = counts[i] < edges[0] ? 0 : (counts[i] < edges[1] ? 1 : 2);
  }
  AttributeSchema schema{"crowdedness", AttributeKind::Explanatory,
                         AttributeLevel::Image,
                         {"sparse", "moderate", "crowded"}};
  register_schema(dataset, std::move(schema), std::move(column), warnings);
  dataset.derived_scope["crowdedness"] = class_id;
}

}  // namespace icon2
