#include "icon2/report_render.hpp"

#include <cstdio>
#include <string>

#include "icon2/errors.hpp"

namespace icon2 {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

/// Numeric field rendered at fixed precision; nulls become "n/a".
std::string num(const ordered_json& v, int digits = 2) {
  if (v.is_null()) return "n/a";
  return fixed(v.get<double>(), digits);
}

std::string integer(const ordered_json& v) {
  if (v.is_null()) return "n/a";
  return std::to_string(v.get<long long>());
}

std::string yes_no(const ordered_json& v) {
  return v.get<bool>() ? "yes" : "no";
}

std::string ci_text(const ordered_json& ci) {
  if (ci.is_null()) return "";
  return "[" + fixed(ci.at("low").get<double>() * 100.0, 2) + ", " +
         fixed(ci.at("high").get<double>() * 100.0, 2) + "]";
}

std::string code(const std::string& s) { return "`" + s + "`"; }

void config_section(std::string& out, const ordered_json& cfg) {
  out += "## Configuration\n\n";
  out += "| setting | value |\n| --- | --- |\n";
  for (const auto& [key, value] : cfg.items()) {
    out += "| " + key + " | ";
    if (value.is_string()) {
      out += value.get<std::string>();
    } else {
      out += value.dump();
    }
    out += " |\n";
  }
  out += "\n";
}

void spread_line(std::string& out, const ordered_json& spread,
                 const std::string& label) {
  out += label + ": ";
  if (!spread.at("defined").get<bool>()) {
    out += spread.at("notice").get<std::string>();
    out += "\n\n";
    return;
  }
  out += "mean AP " + num(spread.at("mean_pp")) + " pp, std " +
         num(spread.at("std_pp")) + " pp (" +
         spread.at("estimator").get<std::string>() + " estimator)\n\n";
}

void cells_table(std::string& out, const ordered_json& cells) {
  out += "| value | AP (pp) | support | n_bar | images | reliable | CI (pp) "
         "|\n";
  out += "| --- | --- | --- | --- | --- | --- | --- |\n";
  for (const ordered_json& cell : cells) {
    out += "| " + code(cell.at("value").get<std::string>()) + " | " +
           num(cell.at("ap_pp")) + " | " + integer(cell.at("n_i")) + " | " +
           num(cell.at("n_bar")) + " | " + integer(cell.at("images_used")) +
           " | " + yes_no(cell.at("reliable")) + " | " +
           ci_text(cell.at("ci")) + " |\n";
  }
  out += "\n";
}

void undefined_list(std::string& out, const ordered_json& undefined) {
  if (undefined.empty()) return;
  out += "Undefined values:\n\n";
  for (const ordered_json& u : undefined) {
    out += "- " + code(u.at("value").get<std::string>()) + ": " +
           u.at("reason").get<std::string>() + "\n";
  }
  out += "\n";
}

void ranking_table(std::string& out, const ordered_json& ranking,
                   const ordered_json& notice) {
  if (!notice.is_null()) {
    out += notice.get<std::string>();
    out += "\n\n";
    return;
  }
  out += "| rank | attribute | spread std (pp) | flagged | reason |\n";
  out += "| --- | --- | --- | --- | --- |\n";
  for (const ordered_json& entry : ranking) {
    const ordered_json& reason = entry.at("flag_reason");
    out += "| " + integer(entry.at("rank")) + " | " +
           code(entry.at("attribute").get<std::string>()) + " | " +
           num(entry.at("spread_std_pp")) + " | " +
           yes_no(entry.at("flagged")) + " | " +
           (reason.is_null() ? std::string() : reason.get<std::string>()) +
           " |\n";
  }
  out += "\n";
}

void control_section(std::string& out, const ordered_json& control,
                     int heading_level) {
  const std::string marks(static_cast<size_t>(heading_level), '#');
  out += marks + " Controlled AP: " +
         control.at("explanatory").get<std::string>() + "\n\n";
  out += "Baseline std " +
         num(control.at("baseline").at("std_pp")) + " pp; controlled mean "
         "std " + num(control.at("mean_controlled_std_pp")) + " pp; delta " +
         num(control.at("delta_pp")) + " pp; strata included " +
         integer(control.at("included_strata")) + "/" +
         std::to_string(control.at("strata").size()) + ".\n\n";
  out += "| stratum | sensitive value | AP (pp) | support | reliable | CI "
         "(pp) |\n";
  out += "| --- | --- | --- | --- | --- | --- |\n";
  for (const ordered_json& stratum : control.at("strata")) {
    const std::string name =
        code(stratum.at("explanatory_value").get<std::string>());
    for (const ordered_json& cell : stratum.at("cells")) {
      out += "| " + name + " | " +
             code(cell.at("sensitive_value").get<std::string>()) + " | " +
             num(cell.at("ap_pp")) + " | " + integer(cell.at("support")) +
             " | " + yes_no(cell.at("reliable")) + " | " +
             ci_text(cell.at("ci")) + " |\n";
    }
  }
  out += "\n";
  bool any_excluded = false;
  for (const ordered_json& stratum : control.at("strata")) {
    if (stratum.at("included").get<bool>()) continue;
    if (!any_excluded) {
      out += "Excluded strata:\n\n";
      any_excluded = true;
    }
    out += "- " + code(stratum.at("explanatory_value").get<std::string>()) +
           ": " + stratum.at("exclusion_reason").get<std::string>() + "\n";
  }
  if (any_excluded) out += "\n";
}

void skipped_section(std::string& out, const ordered_json& skipped) {
  if (skipped.empty()) return;
  out += "## Skipped classes\n\n";
  for (const ordered_json& s : skipped) {
    out += "- " + code(s.at("class_name").get<std::string>()) + " (id " +
           integer(s.at("class_id")) + "): " +
           s.at("reason").get<std::string>() + "\n";
  }
  out += "\n";
}

void summary_section(std::string& out, const ordered_json& summary) {
  out += "## Summary\n\n";
  if (!summary.at("defined").get<bool>()) {
    out += "No class produced a defined evaluation.\n";
    return;
  }
  out += "Mean AP over " + integer(summary.at("classes_audited")) +
         " classes: " + num(summary.at("mean_ap_pp")) + " pp\n\n";
  out += "| sensitive value | mean AP (pp) |\n| --- | --- |\n";
  for (const auto& [value, ap] : summary.at("ap_by_value").items()) {
    out += "| " + code(value) + " | " + fixed(ap.get<double>() * 100.0, 2) +
           " |\n";
  }
  out += "\n";
  spread_line(out, summary.at("spread"), "Cross-class spread");
}

void class_heading(std::string& out, const ordered_json& entry) {
  out += "## Class: " + entry.at("class_name").get<std::string>() + " (id " +
         integer(entry.at("class_id")) + ")\n\n";
  const ordered_json& overall = entry.at("overall");
  out += "Overall AP " + num(overall.at("ap_pp")) + " pp over " +
         integer(overall.at("n_i")) + " instances in " +
         integer(overall.at("images_used")) + " images.\n\n";
}

void group_sections(std::string& out, const ordered_json& entry) {
  cells_table(out, entry.at("cells"));
  undefined_list(out, entry.at("undefined"));
  spread_line(out, entry.at("spread"), "Spread");
}

void warnings_section(std::string& out, const ordered_json& warnings) {
  out += "## Ingest warnings\n\n";
  if (warnings.empty()) {
    out += "None.\n\n";
    return;
  }
  out += "| warning | count |\n| --- | --- |\n";
  for (const auto& [key, count] : warnings.items()) {
    out += "| " + key + " | " + std::to_string(count.get<long long>()) +
           " |\n";
  }
  out += "\n";
}

void header(std::string& out, const ordered_json& doc,
            const std::string& title) {
  out += "# " + title + "\n\n";
  out += "Sensitive attribute: " +
         code(doc.at("sensitive").get<std::string>()) + "\n";
  if (doc.contains("explanatory") && doc.at("explanatory").is_array()) {
    out += "Explanatory attributes:";
    if (doc.at("explanatory").empty()) out += " none";
    for (const ordered_json& name : doc.at("explanatory")) {
      out += " " + code(name.get<std::string>());
    }
    out += "\n";
  }
  out += "\n";
  config_section(out, doc.at("config"));
}

std::string render_ap_by_group(const ordered_json& doc) {
  std::string out;
  header(out, doc, "Group AP report");
  for (const ordered_json& entry : doc.at("classes")) {
    class_heading(out, entry);
    group_sections(out, entry);
  }
  skipped_section(out, doc.at("skipped"));
  summary_section(out, doc.at("summary"));
  return out;
}

std::string render_ranking(const ordered_json& doc) {
  std::string out;
  header(out, doc, "Confounder ranking");
  for (const ordered_json& entry : doc.at("classes")) {
    out += "## Class: " + entry.at("class_name").get<std::string>() +
           " (id " + integer(entry.at("class_id")) + ")\n\n";
    ranking_table(out, entry.at("ranking"), entry.at("notice"));
  }
  skipped_section(out, doc.at("skipped"));
  return out;
}

std::string render_control(const ordered_json& doc) {
  std::string out;
  out += "# Controlled AP report\n\n";
  out += "Class: " + code(doc.at("class_name").get<std::string>()) + " (id " +
         integer(doc.at("class_id")) + ")\n";
  out += "Sensitive attribute: " +
         code(doc.at("sensitive").get<std::string>()) + "\n\n";
  config_section(out, doc.at("config"));
  control_section(out, doc, 2);
  return out;
}

std::string render_audit(const ordered_json& doc) {
  std::string out;
  header(out, doc, "Fairness audit");
  warnings_section(out, doc.at("warnings"));
  for (const ordered_json& entry : doc.at("classes")) {
    class_heading(out, entry);
    group_sections(out, entry);
    out += "### Confounder ranking\n\n";
    ranking_table(out, entry.at("ranking"), entry.at("ranking_notice"));
    for (const ordered_json& control : entry.at("controls")) {
      control_section(out, control, 3);
    }
  }
  skipped_section(out, doc.at("skipped"));
  summary_section(out, doc.at("summary"));
  return out;
}

}  // namespace

std::string render_markdown(const nlohmann::ordered_json& doc) {
  const std::string kind = doc.at("schema").get<std::string>();
  if (kind == "icon2.ap_by_group") return render_ap_by_group(doc);
  if (kind == "icon2.ranking") return render_ranking(doc);
  if (kind == "icon2.control") return render_control(doc);
  if (kind == "icon2.audit") return render_audit(doc);
  throw Error(ErrorCode::Format, "unknown report document kind: " + kind);
}

}  // namespace icon2
