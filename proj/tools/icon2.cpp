#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icon2/audit.hpp"
#include "icon2/control.hpp"
#include "icon2/dataset_export.hpp"
#include "icon2/errors.hpp"
#include "icon2/ingest.hpp"
#include "icon2/report_json.hpp"
#include "icon2/report_render.hpp"
#include "icon2/synth.hpp"

namespace fs = std::filesystem;

using icon2::AnalysisConfig;
using icon2::ClassAudit;
using icon2::ClassId;
using icon2::ControlReport;
using icon2::Dataset;
using icon2::Error;
using icon2::ErrorCode;
using icon2::FairnessReport;
using icon2::WarningSummary;

namespace {

struct Palette {
  const char* green = "";
  const char* yellow = "";
  const char* red = "";
  const char* reset = "";
};

Palette palette() {
  if (std::getenv("ICON2_NO_COLOR") != nullptr) return {};
  if (isatty(fileno(stdout)) == 0) return {};
  return {"\x1b[32m", "\x1b[33m", "\x1b[31m", "\x1b[0m"};
}

std::string fixed_pp(double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

struct AttrFlag {
  std::string name;
  std::string path;
  icon2::AttributeLevel level = icon2::AttributeLevel::Image;
  icon2::AttributeKind kind = icon2::AttributeKind::Explanatory;
  std::optional<long> bins;
};

/// Parses `name=path:level:kind[:bins=k]`.
AttrFlag parse_attr_flag(const std::string& text) {
  const auto usage = [&](const std::string& why) {
    return Error(ErrorCode::Usage,
                 "--attr " + text + ": " + why +
                     " (expected name=path:level:kind[:bins=k])");
  };
  const size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw usage("missing name=");
  AttrFlag flag;
  flag.name = text.substr(0, eq);

  std::vector<std::string> parts;
  size_t start = eq + 1;
  while (true) {
    const size_t colon = text.find(':', start);
    if (colon == std::string::npos) {
      parts.push_back(text.substr(start));
      break;
    }
    parts.push_back(text.substr(start, colon - start));
    start = colon + 1;
  }
  if (parts.size() < 3 || parts.size() > 4) {
    throw usage("expected 3 or 4 ':'-separated fields after the path");
  }
  flag.path = parts[0];
  if (flag.path.empty()) throw usage("empty path");
  try {
    flag.level = icon2::attribute_level_from(parts[1]);
    flag.kind = icon2::attribute_kind_from(parts[2]);
  } catch (const Error& e) {
    throw usage(e.what());
  }
  if (parts.size() == 4) {
    if (parts[3].rfind("bins=", 0) != 0) throw usage("expected bins=k");
    const std::string count = parts[3].substr(5);
    char* end = nullptr;
    const long bins = std::strtol(count.c_str(), &end, 10);
    if (end == count.c_str() || *end != '\0' || bins < 1) {
      throw usage("bins must be a positive integer");
    }
    flag.bins = bins;
  }
  return flag;
}

struct CommonOpts {
  std::string gt;
  std::string dets;
  std::string out = "icon2_out";
  std::vector<std::string> attr_flags;
  std::string sensitive;
  std::vector<std::string> explanatory;
  std::vector<long long> classes;
  std::string interp = "all";
  std::string estimator = "sample";
  AnalysisConfig cfg;
  bool lenient = false;
};

void add_data_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--gt", o.gt, "Ground-truth annotations (COCO-style JSON)")
      ->required();
  cmd->add_option("--dets", o.dets, "Detections (COCO-style results JSON)")
      ->required();
  cmd->add_option("--attr", o.attr_flags,
                  "Attribute sidecar: name=path:level:kind[:bins=k]; "
                  "level in {image,instance}, kind in "
                  "{sensitive,explanatory}");
}

void add_analysis_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--sensitive", o.sensitive, "Sensitive attribute name")
      ->required();
  cmd->add_option("--explanatory", o.explanatory,
                  "Explanatory attribute names (repeatable)")
      ->delimiter(',');
  cmd->add_option("--classes", o.classes,
                  "Class ids to audit (default: all in the ground truth)")
      ->delimiter(',');
  cmd->add_option("--iou", o.cfg.eval.match.iou_threshold,
                  "IoU threshold for matching")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--interp", o.interp, "AP interpolation")
      ->check(CLI::IsMember({"all", "101"}))
      ->capture_default_str();
  cmd->add_option("--estimator", o.estimator, "Spread variance estimator")
      ->check(CLI::IsMember({"sample", "population"}))
      ->capture_default_str();
  cmd->add_option("--boot-reps", o.cfg.eval.bootstrap_replicates,
                  "Bootstrap replicates (0 disables intervals)")
      ->capture_default_str();
  cmd->add_option("--boot-level", o.cfg.eval.bootstrap_level,
                  "Bootstrap confidence level")
      ->capture_default_str();
  cmd->add_option("--seed", o.cfg.eval.seed, "Top-level random seed")
      ->capture_default_str();
  cmd->add_option("--min-support", o.cfg.eval.min_support,
                  "Positives needed before a cell counts as reliable")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--top-k", o.cfg.top_k,
                  "Ranked attributes to control in audit (-1 = all)")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_flag("--lenient", o.lenient,
                "Exit 0 even when findings are flagged");
}

void finish_config(CommonOpts& o) {
  o.cfg.eval.match.interpolation = o.interp == "101"
                                       ? icon2::Interpolation::Points101
                                       : icon2::Interpolation::AllPoints;
  o.cfg.estimator = o.estimator == "population" ? icon2::Estimator::Population
                                                : icon2::Estimator::Sample;
}

/// Attribute names the CLI can derive from geometry when a requested name
/// has no sidecar behind it.
bool derive_if_known(Dataset& ds, const std::string& name,
                     WarningSummary& warnings) {
  if (ds.schema_index(name) >= 0) return true;
  if (name == "size") {
    icon2::derive_size_attribute(ds, std::nullopt, warnings);
  } else if (name == "aspect_ratio") {
    icon2::derive_aspect_ratio_attribute(ds, std::nullopt, warnings);
  } else if (name == "crowdedness") {
    icon2::derive_crowdedness_attribute(ds, std::nullopt, warnings);
  } else {
    return false;
  }
  return true;
}

Dataset build_dataset(const CommonOpts& o, WarningSummary& warnings) {
  Dataset ds = icon2::load_ground_truth(o.gt, warnings);
  icon2::load_detections(o.dets, ds, warnings);
  for (const std::string& text : o.attr_flags) {
    const AttrFlag flag = parse_attr_flag(text);
    icon2::SidecarAttributeFile file = icon2::read_sidecar(flag.path);
    file.name = flag.name;
    file.level = flag.level;
    std::optional<icon2::BinningSpec> binning;
    if (flag.bins) {
      binning = icon2::BinningSpec{static_cast<int>(*flag.bins),
                                   icon2::BinningStrategy::EqualCount,
                                   {}};
    }
    icon2::attach_attributes(ds, file, flag.kind, binning, warnings);
  }
  if (!o.sensitive.empty()) derive_if_known(ds, o.sensitive, warnings);
  for (const std::string& name : o.explanatory) {
    derive_if_known(ds, name, warnings);
  }
  return ds;
}

std::vector<ClassId> resolve_classes(const CommonOpts& o, const Dataset& ds) {
  std::vector<ClassId> ids;
  if (o.classes.empty()) {
    for (const auto& [id, name] : ds.class_table) ids.push_back(id);
  } else {
    for (const long long id : o.classes) {
      ids.push_back(static_cast<ClassId>(id));
    }
  }
  return ids;
}

fs::path ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    throw Error(ErrorCode::Io,
                "cannot create output directory " + out + ": " + ec.message());
  }
  return {out};
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!keep) c = '_';
  }
  return out;
}

void print_warnings(const WarningSummary& warnings, const Palette& p) {
  if (warnings.empty()) return;
  std::cout << p.yellow << "warnings:" << p.reset;
  for (const auto& [key, n] : warnings.counts) {
    std::cout << " " << key << "=" << n;
  }
  std::cout << "\n";
}

void print_classes(const FairnessReport& report, const Palette& p) {
  for (const ClassAudit& entry : report.classes) {
    std::cout << "  " << entry.class_name << ": AP "
              << fixed_pp(entry.overall.ap) << " pp";
    if (entry.spread_defined) {
      std::cout << ", spread std " << fixed_pp(entry.spread.std) << " pp";
    }
    if (!entry.ranking.empty() && !entry.ranking.front().flagged) {
      std::cout << ", top confounder " << entry.ranking.front().attribute;
    }
    std::cout << "\n";
  }
  for (const icon2::SkippedClass& skipped : report.skipped) {
    std::cout << "  " << p.yellow << "skipped " << skipped.class_name << ": "
              << skipped.reason << p.reset << "\n";
  }
}

int finish(const CommonOpts& o, bool flagged, const Palette& p) {
  if (!flagged) {
    std::cout << p.green << "clean: no flagged findings" << p.reset << "\n";
    return 0;
  }
  if (o.lenient) {
    std::cout << p.yellow << "flagged findings present (lenient: exit 0)"
              << p.reset << "\n";
    return 0;
  }
  std::cout << p.red << "flagged findings present" << p.reset << "\n";
  return 1;
}

int cmd_evaluate(const CommonOpts& o) {
  const Palette p = palette();
  WarningSummary warnings;
  const Dataset ds = build_dataset(o, warnings);
  const FairnessReport report = icon2::sensitive_evaluation(
      ds, resolve_classes(o, ds), o.sensitive, o.cfg);
  const auto doc = icon2::ap_by_group_document(report);
  const fs::path dir = ensure_out_dir(o.out);
  write_file(dir / "ap_by_group.json", icon2::dump_json(doc));
  write_file(dir / "ap_by_group.csv", icon2::ap_by_group_csv(report));
  write_file(dir / "report.md", icon2::render_markdown(doc));
  print_classes(report, p);
  print_warnings(warnings, p);
  return finish(o, icon2::has_flagged_findings(report), p);
}

int cmd_rank(const CommonOpts& o) {
  const Palette p = palette();
  if (o.explanatory.empty()) {
    throw Error(ErrorCode::Usage, "rank needs at least one --explanatory");
  }
  WarningSummary warnings;
  const Dataset ds = build_dataset(o, warnings);
  AnalysisConfig cfg = o.cfg;
  cfg.top_k = 0;  // ranking only, no controlled grids
  const FairnessReport report =
      icon2::audit(ds, resolve_classes(o, ds), o.sensitive, o.explanatory,
                   cfg);
  const auto doc = icon2::ranking_document(report);
  const fs::path dir = ensure_out_dir(o.out);
  write_file(dir / "ranking.json", icon2::dump_json(doc));
  write_file(dir / "report.md", icon2::render_markdown(doc));
  print_classes(report, p);
  print_warnings(warnings, p);
  return finish(o, icon2::has_flagged_findings(report), p);
}

int cmd_control(const CommonOpts& o) {
  const Palette p = palette();
  if (o.explanatory.empty()) {
    throw Error(ErrorCode::Usage, "control needs at least one --explanatory");
  }
  WarningSummary warnings;
  const Dataset ds = build_dataset(o, warnings);
  const std::vector<ClassId> classes = resolve_classes(o, ds);

  std::vector<ControlReport> reports;
  bool any_skipped = false;
  std::string last_skip_reason;
  for (const ClassId class_id : classes) {
    const Dataset scoped = icon2::rescope_derived(ds, class_id);
    for (const std::string& attr : o.explanatory) {
      try {
        reports.push_back(
            icon2::controlled_ap(scoped, class_id, o.sensitive, attr, o.cfg));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UndefinedAp &&
            e.code() != ErrorCode::SpreadUndefined) {
          throw;
        }
        any_skipped = true;
        last_skip_reason = e.what();
        std::cout << "  " << p.yellow << "skipped " << ds.class_name(class_id)
                  << " x " << attr << ": " << e.what() << p.reset << "\n";
      }
    }
  }
  if (reports.empty()) {
    throw Error(ErrorCode::UndefinedAp,
                "no controlled grid could be computed: " + last_skip_reason);
  }

  const fs::path dir = ensure_out_dir(o.out);
  std::string markdown;
  std::vector<const ControlReport*> pointers;
  bool flagged = any_skipped;
  for (const ControlReport& report : reports) {
    const std::string class_name = ds.class_name(report.class_id);
    const auto doc = icon2::control_document(report, class_name, o.cfg);
    write_file(dir / ("control_" + sanitize(class_name) + "_" +
                      sanitize(report.explanatory) + ".json"),
               icon2::dump_json(doc));
    if (!markdown.empty()) markdown += "\n";
    markdown += icon2::render_markdown(doc);
    pointers.push_back(&report);
    flagged = flagged || icon2::has_flagged_findings(report);
    std::cout << "  " << class_name << " x " << report.explanatory
              << ": baseline std " << fixed_pp(report.baseline.std)
              << " pp, delta " << fixed_pp(report.delta) << " pp\n";
  }
  write_file(dir / "controlled_ap_points.csv",
             icon2::controlled_ap_points_csv(pointers, ds));
  write_file(dir / "report.md", markdown);
  print_warnings(warnings, p);
  return finish(o, flagged, p);
}

int cmd_audit(const CommonOpts& o) {
  const Palette p = palette();
  if (o.explanatory.empty()) {
    throw Error(ErrorCode::Usage, "audit needs at least one --explanatory");
  }
  WarningSummary warnings;
  const Dataset ds = build_dataset(o, warnings);
  const FairnessReport report = icon2::audit(ds, resolve_classes(o, ds),
                                             o.sensitive, o.explanatory,
                                             o.cfg);
  const auto doc = icon2::audit_document(report, warnings);
  const fs::path dir = ensure_out_dir(o.out);
  write_file(dir / "audit.json", icon2::dump_json(doc));
  write_file(dir / "report.md", icon2::render_markdown(doc));
  print_classes(report, p);
  print_warnings(warnings, p);
  return finish(o, icon2::has_flagged_findings(report), p);
}

int cmd_synth(const std::string& spec_path, const std::string& out) {
  const icon2::ScenarioSpec spec = icon2::load_scenario(spec_path);
  const Dataset ds = icon2::generate_scenario(spec);
  const fs::path dir = ensure_out_dir(out);
  icon2::write_dataset(ds, dir.string());
  std::cout << "wrote " << (dir / "manifest.json").string() << "\n";
  write_file(dir / "scenario.json", icon2::scenario_to_json(spec));
  std::cout << "generated " << ds.images.size() << " images, "
            << ds.ground_truth.size() << " instances, "
            << ds.detections.size() << " detections\n";
  return 0;
}

void emit_error(const std::string& category, const std::string& message) {
  nlohmann::ordered_json doc;
  doc["error"]["category"] = category;
  doc["error"]["message"] = message;
  std::cerr << doc.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-normalized fairness auditing for object detection"};
  app.require_subcommand(1);

  CommonOpts o;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Per-group normalized AP with spread statistics");
  add_data_flags(evaluate, o);
  add_analysis_flags(evaluate, o);

  CLI::App* rank = app.add_subcommand(
      "rank", "Rank explanatory attributes as confounder candidates");
  add_data_flags(rank, o);
  add_analysis_flags(rank, o);

  CLI::App* control = app.add_subcommand(
      "control", "Stratified AP controlled for explanatory attributes");
  add_data_flags(control, o);
  add_analysis_flags(control, o);

  CLI::App* audit = app.add_subcommand(
      "audit", "Evaluate, rank, and control in one consolidated report");
  add_data_flags(audit, o);
  add_analysis_flags(audit, o);

  std::string spec_path;
  CLI::App* synth = app.add_subcommand(
      "synth", "Materialize a synthetic scenario to ingest formats");
  synth->add_option("--spec", spec_path, "Scenario spec JSON")->required();
  synth->add_option("--out", o.out, "Output directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    finish_config(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (rank->parsed()) return cmd_rank(o);
    if (control->parsed()) return cmd_control(o);
    if (audit->parsed()) return cmd_audit(o);
    if (synth->parsed()) return cmd_synth(spec_path, o.out);
    return 2;
  } catch (const Error& e) {
    emit_error(e.category(), e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 2;
  }
}
