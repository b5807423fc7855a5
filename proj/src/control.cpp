#include "icon2/control.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "icon2/errors.hpp"

namespace icon2 {

ControlReport controlled_ap(const Dataset& dataset, ClassId class_id,
                            std::string_view sensitive,
                            std::string_view explanatory,
                            const AnalysisConfig& cfg) {
  const ApSweep baseline_sweep =
      attribute_ap_sweep(dataset, class_id, sensitive, cfg.eval);
  std::map<std::string, double> baseline_ap;
  for (const APResult& cell : baseline_sweep.cells) {
    baseline_ap[cell.value] = cell.ap;
  }

  ControlReport report;
  report.class_id = class_id;
  report.sensitive = std::string(sensitive);
  report.explanatory = std::string(explanatory);
  report.baseline = ap_spread(baseline_ap, cfg.estimator);

  const int sens_idx = dataset.schema_index(sensitive);
  const AttributeSchema& sens = dataset.schemas[static_cast<std::size_t>(sens_idx)];
  const AttributeSchema& expl = dataset.schema(explanatory);
  const int expl_idx = dataset.schema_index(explanatory);

  // The comparison set: sensitive values the baseline could evaluate.
  std::vector<std::int32_t> sens_values;
  for (const APResult& cell : baseline_sweep.cells) {
    sens_values.push_back(sens.value_index(cell.value));
  }

  double spread_sum = 0;
  for (std::size_t e = 0; e < expl.values.size(); ++e) {
    ControlStratum stratum;
    stratum.explanatory_value = expl.values[e];

    std::vector<CellData> data;
    data.reserve(sens_values.size());
    double support_sum = 0;
    long with_positives = 0;
    for (std::int32_t a : sens_values) {
      CellFilter filter;
      filter.terms.push_back({sens_idx, a});
      filter.terms.push_back({expl_idx, static_cast<std::int32_t>(e)});
      data.push_back(build_cell(dataset, class_id, filter, cfg.eval.match));
      if (data.back().num_positives > 0) {
        support_sum += static_cast<double>(data.back().num_positives);
        ++with_positives;
      }
    }
    stratum.n_bar =
        with_positives > 0 ? support_sum / static_cast<double>(with_positives)
                           : 0.0;

    std::map<std::string, double> defined_ap;
    for (std::size_t k = 0; k < sens_values.size(); ++k) {
      ControlCell cell;
      cell.sensitive_value =
          sens.values[static_cast<std::size_t>(sens_values[k])];
      cell.explanatory_value = stratum.explanatory_value;
      cell.support = data[k].num_positives;
      cell.images_used = static_cast<long>(data[k].image_rows.size());
      cell.reliable = cell.support >= cfg.eval.min_support;
      if (cell.support > 0) {
        try {
          cell.ap = cell_ap(data[k], stratum.n_bar, cfg.eval.match);
          cell.defined = true;
          defined_ap[cell.sensitive_value] = cell.ap;
          if (cfg.eval.bootstrap_replicates > 0) {
            const std::string salt =
                report.explanatory + "=" + stratum.explanatory_value;
            cell.ci = cell_bootstrap(
                data[k], stratum.n_bar, cfg.eval.match,
                cfg.eval.bootstrap_replicates, cfg.eval.bootstrap_level,
                bootstrap_seed(cfg.eval, class_id, report.sensitive,
                               cell.sensitive_value, salt),
                cell.ap);
          }
        } catch (const UndefinedApError&) {
          cell.defined = false;  // positives but no detections at all
        }
      }
      stratum.cells.push_back(std::move(cell));
    }

    if (defined_ap.size() >= 2) {
      const SpreadStats spread = ap_spread(defined_ap, cfg.estimator);
      stratum.spread_defined = true;
      stratum.spread_std = spread.std;
      stratum.spread_variance = spread.variance;
    }

    if (with_positives == 0) {
      stratum.exclusion_reason = "no positive instances";
    } else {
      for (const ControlCell& cell : stratum.cells) {
        if (!cell.defined) {
          stratum.exclusion_reason =
              "undefined cell: " + cell.sensitive_value;
          break;
        }
        if (!cell.reliable) {
          stratum.exclusion_reason =
              "unreliable cell: " + cell.sensitive_value;
          break;
        }
      }
    }
    if (stratum.exclusion_reason.empty() && !stratum.spread_defined) {
      stratum.exclusion_reason = "fewer than 2 defined cells";
    }
    if (stratum.exclusion_reason.empty()) {
      stratum.included = true;
      ++report.included_strata;
      spread_sum += stratum.spread_std;
    }
    report.strata.push_back(std::move(stratum));
  }

  if (report.included_strata > 0) {
    report.mean_controlled_std =
        spread_sum / static_cast<double>(report.included_strata);
    report.delta = report.baseline.std - report.mean_controlled_std;
  } else {
    report.mean_controlled_std = std::numeric_limits<double>::quiet_NaN();
    report.delta = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace icon2
