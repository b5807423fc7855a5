#include "icon2/schema.hpp"

#include <fstream>

#include "icon2/errors.hpp"

namespace icon2 {

namespace {

using nlohmann::json;

bool type_matches(const json& inst, const std::string& name) {
  if (name == "string") return inst.is_string();
  if (name == "integer") return inst.is_number_integer();
  if (name == "number") return inst.is_number();
  if (name == "boolean") return inst.is_boolean();
  if (name == "array") return inst.is_array();
  if (name == "object") return inst.is_object();
  if (name == "null") return inst.is_null();
  return false;
}

std::string type_name(const json& inst) {
  if (inst.is_string()) return "string";
  if (inst.is_number_integer()) return "integer";
  if (inst.is_number()) return "number";
  if (inst.is_boolean()) return "boolean";
  if (inst.is_array()) return "array";
  if (inst.is_object()) return "object";
  if (inst.is_null()) return "null";
  return "unknown";
}

struct Validator {
  const json& root;
  std::vector<SchemaIssue> issues;

  void fail(const std::string& path, std::string message) {
    issues.push_back({path, std::move(message)});
  }

  const json* resolve(const json& schema, const std::string& path) {
    const std::string ref = schema.at("$ref").get<std::string>();
    if (ref.empty() || ref[0] != '#') {
      fail(path, "unsupported $ref: " + ref);
      return nullptr;
    }
    try {
      return &root.at(json::json_pointer(ref.substr(1)));
    } catch (const json::exception&) {
      fail(path, "unresolvable $ref: " + ref);
      return nullptr;
    }
  }

  void check_type(const json& schema, const json& inst,
                  const std::string& path) {
    const json& type = schema.at("type");
    if (type.is_string()) {
      if (!type_matches(inst, type.get<std::string>())) {
        fail(path, "expected " + type.get<std::string>() + ", got " +
                       type_name(inst));
      }
      return;
    }
    for (const json& name : type) {
      if (type_matches(inst, name.get<std::string>())) return;
    }
    fail(path, "expected one of " + type.dump() + ", got " + type_name(inst));
  }

  void check_object(const json& schema, const json& inst,
                    const std::string& path) {
    if (schema.contains("required")) {
      for (const json& key : schema.at("required")) {
        if (!inst.contains(key.get<std::string>())) {
          fail(path, "missing required member: " + key.get<std::string>());
        }
      }
    }
    const json* props =
        schema.contains("properties") ? &schema.at("properties") : nullptr;
    for (const auto& [key, value] : inst.items()) {
      const std::string child = path + "/" + key;
      if (props != nullptr && props->contains(key)) {
        check(props->at(key), value, child);
      } else if (schema.contains("additionalProperties")) {
        const json& extra = schema.at("additionalProperties");
        if (extra.is_boolean()) {
          if (!extra.get<bool>()) fail(path, "unexpected member: " + key);
        } else {
          check(extra, value, child);
        }
      }
    }
  }

  void check_array(const json& schema, const json& inst,
                   const std::string& path) {
    if (schema.contains("minItems") &&
        inst.size() < schema.at("minItems").get<size_t>()) {
      fail(path, "fewer than " + schema.at("minItems").dump() + " items");
    }
    if (schema.contains("maxItems") &&
        inst.size() > schema.at("maxItems").get<size_t>()) {
      fail(path, "more than " + schema.at("maxItems").dump() + " items");
    }
    if (schema.contains("items")) {
      const json& items = schema.at("items");
      for (size_t i = 0; i < inst.size(); ++i) {
        check(items, inst[i], path + "/" + std::to_string(i));
      }
    }
  }

  void check(const json& schema, const json& inst, const std::string& path) {
    if (schema.contains("$ref")) {
      if (const json* target = resolve(schema, path)) {
        check(*target, inst, path);
      }
      return;
    }
    if (schema.contains("type")) check_type(schema, inst, path);
    if (schema.contains("enum")) {
      bool hit = false;
      for (const json& candidate : schema.at("enum")) {
        if (candidate == inst) {
          hit = true;
          break;
        }
      }
      if (!hit) fail(path, "value " + inst.dump() + " not in enum");
    }
    if (inst.is_number()) {
      if (schema.contains("minimum") &&
          inst.get<double>() < schema.at("minimum").get<double>()) {
        fail(path, "below minimum " + schema.at("minimum").dump());
      }
      if (schema.contains("maximum") &&
          inst.get<double>() > schema.at("maximum").get<double>()) {
        fail(path, "above maximum " + schema.at("maximum").dump());
      }
    }
    if (inst.is_object()) check_object(schema, inst, path);
    if (inst.is_array()) check_array(schema, inst, path);
  }
};

}  // namespace

std::vector<SchemaIssue> validate_schema(const nlohmann::json& schema,
                                         const nlohmann::json& instance) {
  Validator v{schema, {}};
  v.check(schema, instance, "");
  return v.issues;
}

nlohmann::json load_json_schema(const std::string& document_kind,
                                const std::filesystem::path& schema_dir) {
  std::string stem = document_kind;
  if (const auto dot = stem.rfind('.'); dot != std::string::npos) {
    stem = stem.substr(dot + 1);
  }
  const std::filesystem::path path = schema_dir / (stem + ".schema.json");
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open schema file: " + path.string());
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse,
                "invalid schema file " + path.string() + ": " + e.what());
  }
}

}  // namespace icon2
