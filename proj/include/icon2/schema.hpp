#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace icon2 {

struct SchemaIssue {
  std::string path;  // JSON pointer into the instance, "" for the root
  std::string message;
};

/// Validate an instance against a schema. Supported keywords: type (name or
/// array of names), enum, minimum, maximum, required, properties,
/// additionalProperties (bool or schema), items, minItems, maxItems, and
/// local "$ref" into "#/$defs/...". Everything the report documents need,
/// nothing more.
std::vector<SchemaIssue> validate_schema(const nlohmann::json& schema,
                                         const nlohmann::json& instance);

/// Load the schema file for a document kind such as "icon2.audit" from
/// schema_dir ("icon2.audit" -> audit.schema.json). Throws Error(Io) when
/// the file is absent and Error(Parse) when it is not valid JSON.
nlohmann::json load_json_schema(const std::string& document_kind,
                                const std::filesystem::path& schema_dir);

}  // namespace icon2
