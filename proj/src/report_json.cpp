#include "icon2/report_json.hpp"

#include <cmath>

namespace icon2 {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json number_or_null(double v) {
  return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v);
}

ordered_json pp_or_null(double v) {
  return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v * 100.0);
}

ordered_json config_echo(const AnalysisConfig& cfg) {
  ordered_json c;
  c["iou_threshold"] = cfg.eval.match.iou_threshold;
  c["interpolation"] = to_string(cfg.eval.match.interpolation);
  c["estimator"] = to_string(cfg.estimator);
  c["min_support"] = cfg.eval.min_support;
  c["bootstrap_replicates"] = cfg.eval.bootstrap_replicates;
  c["bootstrap_level"] = cfg.eval.bootstrap_level;
  c["seed"] = cfg.eval.seed;
  c["top_k"] = cfg.top_k;
  return c;
}

ordered_json ci_json(const std::optional<ConfidenceInterval>& ci) {
  if (!ci) return nullptr;
  ordered_json c;
  c["low"] = ci->low;
  c["high"] = ci->high;
  c["level"] = ci->level;
  return c;
}

ordered_json cell_json(const APResult& r) {
  ordered_json c;
  c["attribute"] = r.attribute;
  c["value"] = r.value;
  c["ap"] = r.ap;
  c["ap_pp"] = r.ap * 100.0;
  c["n_i"] = r.n_i;
  c["n_bar"] = r.n_bar;
  c["images_used"] = r.images_used;
  c["reliable"] = r.reliable;
  c["ci"] = ci_json(r.ci);
  return c;
}

ordered_json spread_json(const SpreadStats& s) {
  ordered_json o;
  o["defined"] = true;
  o["estimator"] = to_string(s.estimator);
  o["mean"] = s.mean;
  o["mean_pp"] = s.mean * 100.0;
  o["variance"] = s.variance;
  o["std"] = s.std;
  o["std_pp"] = s.std * 100.0;
  ordered_json values = ordered_json::object();
  for (const auto& [value, ap] : s.values) values[value] = ap;
  o["values"] = values;
  return o;
}

ordered_json spread_or_notice(bool defined, const SpreadStats& s,
                              const std::string& notice) {
  if (defined) return spread_json(s);
  ordered_json o;
  o["defined"] = false;
  o["notice"] = notice;
  return o;
}

ordered_json class_block(const ClassAudit& a) {
  ordered_json c;
  c["class_id"] = a.class_id;
  c["class_name"] = a.class_name;
  c["overall"] = cell_json(a.overall);
  c["n_bar"] = a.sensitive_sweep.n_bar;
  c["cells"] = ordered_json::array();
  for (const APResult& cell : a.sensitive_sweep.cells) {
    c["cells"].push_back(cell_json(cell));
  }
  c["undefined"] = ordered_json::array();
  for (const UndefinedCell& u : a.sensitive_sweep.undefined) {
    c["undefined"].push_back({{"value", u.value}, {"reason", u.reason}});
  }
  c["spread"] = spread_or_notice(a.spread_defined, a.spread, a.spread_notice);
  return c;
}

ordered_json skipped_json(const FairnessReport& report) {
  ordered_json arr = ordered_json::array();
  for (const SkippedClass& s : report.skipped) {
    arr.push_back({{"class_id", s.class_id},
                   {"class_name", s.class_name},
                   {"reason", s.reason}});
  }
  return arr;
}

ordered_json summary_json(const FairnessReport& report) {
  ordered_json s;
  s["defined"] = report.summary_defined;
  if (!report.summary_defined) return s;
  s["classes_audited"] = static_cast<long>(report.classes.size());
  s["mean_ap"] = report.mean_ap;
  s["mean_ap_pp"] = report.mean_ap * 100.0;
  ordered_json by_value = ordered_json::object();
  for (const auto& [value, ap] : report.mean_ap_by_value) by_value[value] = ap;
  s["ap_by_value"] = by_value;
  s["spread"] = spread_or_notice(
      report.summary_spread_defined, report.summary_spread,
      "spread undefined: fewer than 2 sensitive values with defined AP");
  return s;
}

ordered_json ranking_json(const std::vector<RankingEntry>& ranking) {
  ordered_json arr = ordered_json::array();
  for (const RankingEntry& entry : ranking) {
    ordered_json e;
    e["rank"] = entry.rank;
    e["attribute"] = entry.attribute;
    e["spread_std"] = entry.spread_std;
    e["spread_std_pp"] = entry.spread_std * 100.0;
    e["spread_variance"] = entry.spread_variance;
    e["flagged"] = entry.flagged;
    e["flag_reason"] =
        entry.flagged ? ordered_json(entry.flag_reason) : ordered_json(nullptr);
    ordered_json proxy = ordered_json::object();
    for (const auto& [value, ap] : entry.proxy_by_sensitive) {
      proxy[value] = ap;
    }
    e["proxy_ap"] = proxy;
    arr.push_back(std::move(e));
  }
  return arr;
}

ordered_json control_body(const ControlReport& r,
                          const std::string& class_name) {
  ordered_json c;
  c["class_id"] = r.class_id;
  c["class_name"] = class_name;
  c["sensitive"] = r.sensitive;
  c["explanatory"] = r.explanatory;
  c["baseline"] = spread_json(r.baseline);
  c["strata"] = ordered_json::array();
  for (const ControlStratum& stratum : r.strata) {
    ordered_json s;
    s["explanatory_value"] = stratum.explanatory_value;
    s["n_bar"] = stratum.n_bar;
    s["included"] = stratum.included;
    s["exclusion_reason"] = stratum.included
                                ? ordered_json(nullptr)
                                : ordered_json(stratum.exclusion_reason);
    ordered_json spread;
    spread["defined"] = stratum.spread_defined;
    if (stratum.spread_defined) {
      spread["std"] = stratum.spread_std;
      spread["std_pp"] = stratum.spread_std * 100.0;
      spread["variance"] = stratum.spread_variance;
    }
    s["spread"] = spread;
    s["cells"] = ordered_json::array();
    for (const ControlCell& cell : stratum.cells) {
      ordered_json cj;
      cj["sensitive_value"] = cell.sensitive_value;
      cj["defined"] = cell.defined;
      cj["ap"] = cell.defined ? ordered_json(cell.ap) : ordered_json(nullptr);
      cj["ap_pp"] =
          cell.defined ? ordered_json(cell.ap * 100.0) : ordered_json(nullptr);
      cj["support"] = cell.support;
      cj["images_used"] = cell.images_used;
      cj["reliable"] = cell.reliable;
      cj["ci"] = ci_json(cell.ci);
      s["cells"].push_back(std::move(cj));
    }
    c["strata"].push_back(std::move(s));
  }
  c["included_strata"] = r.included_strata;
  c["mean_controlled_std"] = number_or_null(r.mean_controlled_std);
  c["mean_controlled_std_pp"] = pp_or_null(r.mean_controlled_std);
  c["delta"] = number_or_null(r.delta);
  c["delta_pp"] = pp_or_null(r.delta);
  return c;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

/// Shortest round-trip decimal, identical to the JSON rendering.
std::string csv_number(double v) { return nlohmann::json(v).dump(); }

}  // namespace

nlohmann::ordered_json ap_by_group_document(const FairnessReport& report) {
  ordered_json doc;
  doc["schema"] = "icon2.ap_by_group";
  doc["schema_version"] = "1.0";
  doc["config"] = config_echo(report.config);
  doc["sensitive"] = report.sensitive;
  doc["classes"] = ordered_json::array();
  for (const ClassAudit& entry : report.classes) {
    doc["classes"].push_back(class_block(entry));
  }
  doc["skipped"] = skipped_json(report);
  doc["summary"] = summary_json(report);
  return doc;
}

nlohmann::ordered_json ranking_document(const FairnessReport& report) {
  ordered_json doc;
  doc["schema"] = "icon2.ranking";
  doc["schema_version"] = "1.0";
  doc["config"] = config_echo(report.config);
  doc["sensitive"] = report.sensitive;
  doc["explanatory"] = report.explanatory;
  doc["classes"] = ordered_json::array();
  for (const ClassAudit& entry : report.classes) {
    ordered_json c;
    c["class_id"] = entry.class_id;
    c["class_name"] = entry.class_name;
    c["ranking"] = ranking_json(entry.ranking);
    c["notice"] = entry.ranking_notice.empty()
                      ? ordered_json(nullptr)
                      : ordered_json(entry.ranking_notice);
    doc["classes"].push_back(std::move(c));
  }
  doc["skipped"] = skipped_json(report);
  return doc;
}

nlohmann::ordered_json control_document(const ControlReport& report,
                                        const std::string& class_name,
                                        const AnalysisConfig& cfg) {
  ordered_json doc;
  doc["schema"] = "icon2.control";
  doc["schema_version"] = "1.0";
  doc["config"] = config_echo(cfg);
  doc.update(control_body(report, class_name));
  return doc;
}

nlohmann::ordered_json audit_document(const FairnessReport& report,
                                      const WarningSummary& warnings) {
  ordered_json doc;
  doc["schema"] = "icon2.audit";
  doc["schema_version"] = "1.0";
  doc["config"] = config_echo(report.config);
  doc["sensitive"] = report.sensitive;
  doc["explanatory"] = report.explanatory;
  ordered_json warn = ordered_json::object();
  for (const auto& [key, count] : warnings.counts) warn[key] = count;
  doc["warnings"] = warn;
  doc["classes"] = ordered_json::array();
  for (const ClassAudit& entry : report.classes) {
    ordered_json c = class_block(entry);
    c["ranking"] = ranking_json(entry.ranking);
    c["ranking_notice"] = entry.ranking_notice.empty()
                              ? ordered_json(nullptr)
                              : ordered_json(entry.ranking_notice);
    c["controls"] = ordered_json::array();
    for (const ControlReport& control : entry.controls) {
      c["controls"].push_back(control_body(control, entry.class_name));
    }
    doc["classes"].push_back(std::move(c));
  }
  doc["skipped"] = skipped_json(report);
  doc["summary"] = summary_json(report);
  return doc;
}

std::string ap_by_group_csv(const FairnessReport& report) {
  std::string out =
      "class_id,class_name,attribute,value,ap,ap_pp,n_i,n_bar,images_used,"
      "reliable,ci_low,ci_high,ci_level\r\n";
  auto emit = [&](const ClassAudit& entry, const APResult& cell) {
    out += std::to_string(entry.class_id);
    out += ',' + csv_field(entry.class_name);
    out += ',' + csv_field(cell.attribute);
    out += ',' + csv_field(cell.value);
    out += ',' + csv_number(cell.ap);
    out += ',' + csv_number(cell.ap * 100.0);
    out += ',' + std::to_string(cell.n_i);
    out += ',' + csv_number(cell.n_bar);
    out += ',' + std::to_string(cell.images_used);
    out += cell.reliable ? ",true" : ",false";
    if (cell.ci) {
      out += ',' + csv_number(cell.ci->low);
      out += ',' + csv_number(cell.ci->high);
      out += ',' + csv_number(cell.ci->level);
    } else {
      out += ",,,";
    }
    out += "\r\n";
  };
  for (const ClassAudit& entry : report.classes) {
    emit(entry, entry.overall);
    for (const APResult& cell : entry.sensitive_sweep.cells) {
      emit(entry, cell);
    }
  }
  return out;
}

std::string controlled_ap_points_csv(
    const std::vector<const ControlReport*>& reports,
    const Dataset& dataset) {
  std::string out =
      "class,sensitive_value,explanatory_value,ap,ci_low,ci_high,support,"
      "reliable\r\n";
  for (const ControlReport* report : reports) {
    const std::string class_name = dataset.class_name(report->class_id);
    for (const ControlStratum& stratum : report->strata) {
      for (const ControlCell& cell : stratum.cells) {
        if (!cell.defined) continue;
        out += csv_field(class_name);
        out += ',' + csv_field(cell.sensitive_value);
        out += ',' + csv_field(cell.explanatory_value);
        out += ',' + csv_number(cell.ap);
        if (cell.ci) {
          out += ',' + csv_number(cell.ci->low);
          out += ',' + csv_number(cell.ci->high);
        } else {
          out += ",,";
        }
        out += ',' + std::to_string(cell.support);
        out += cell.reliable ? ",true" : ",false";
        out += "\r\n";
      }
    }
  }
  return out;
}

bool has_flagged_findings(const ControlReport& report) {
  for (const ControlStratum& stratum : report.strata) {
    if (!stratum.included) return true;
    for (const ControlCell& cell : stratum.cells) {
      if (!cell.defined || !cell.reliable) return true;
    }
  }
  return false;
}

bool has_flagged_findings(const FairnessReport& report) {
  if (!report.skipped.empty()) return true;
  for (const ClassAudit& entry : report.classes) {
    if (!entry.overall.reliable) return true;
    if (!entry.sensitive_sweep.undefined.empty()) return true;
    for (const APResult& cell : entry.sensitive_sweep.cells) {
      if (!cell.reliable) return true;
    }
    for (const RankingEntry& ranked : entry.ranking) {
      if (ranked.flagged) return true;
    }
    for (const ControlReport& control : entry.controls) {
      if (has_flagged_findings(control)) return true;
    }
  }
  return false;
}

std::string dump_json(const nlohmann::ordered_json& doc) {
  return doc.dump(2) + "\n";
}

}  // namespace icon2
