#pragma once

#include <string>

#include <json.hpp>

namespace icon2 {

/// Render one of the report documents (ap_by_group, ranking, control, audit)
/// to markdown. The document is the single source of truth: nothing in the
/// output comes from anywhere else, so regenerating from the saved JSON
/// reproduces the report byte for byte. Throws Error(Format) for documents
/// whose "schema" field is not one of the four known kinds.
std::string render_markdown(const nlohmann::ordered_json& doc);

}  // namespace icon2
