#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "icon2/audit.hpp"
#include "icon2/control.hpp"
#include "icon2/ingest.hpp"

namespace icon2 {

/// All report documents are versioned ("schema", "schema_version"), carry a
/// full config echo, contain no timestamps, and serialize deterministically.
/// AP / spread fields are fractions; *_pp fields are percentage points.

nlohmann::ordered_json ap_by_group_document(const FairnessReport& report);

nlohmann::ordered_json ranking_document(const FairnessReport& report);

nlohmann::ordered_json control_document(const ControlReport& report,
                                        const std::string& class_name,
                                        const AnalysisConfig& cfg);

nlohmann::ordered_json audit_document(const FairnessReport& report,
                                      const WarningSummary& warnings);

/// RFC-4180 CSV (CRLF, header row): one row per evaluated cell, the
/// unfiltered per-class AP first (attribute "all"). CI columns are empty
/// when no interval was computed.
std::string ap_by_group_csv(const FairnessReport& report);

/// Long-format grid points for external plotting; defined cells only.
std::string controlled_ap_points_csv(
    const std::vector<const ControlReport*>& reports,
    const Dataset& dataset);

/// True when the report contains anything flagged: unreliable or undefined
/// cells, flagged ranking rows, excluded strata, or skipped classes.
/// Drives the CLI's exit-code-1 contract.
bool has_flagged_findings(const FairnessReport& report);
bool has_flagged_findings(const ControlReport& report);

std::string dump_json(const nlohmann::ordered_json& doc);

}  // namespace icon2
