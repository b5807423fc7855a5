#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "icon2/config.hpp"
#include "icon2/types.hpp"

namespace icon2 {

/// One explanatory attribute's ranking row. Flagged entries (proxy or
/// spread undefined) sort after every unflagged one and keep the reason.
struct RankingEntry {
  std::string attribute;
  std::map<std::string, double> proxy_by_sensitive;  // fractions
  double spread_std = 0;
  double spread_variance = 0;
  int rank = 0;
  bool flagged = false;
  std::string flag_reason;
};

/// For each candidate: per-value AP sweep, P(E|a), ProxyAP per sensitive
/// value, spread of ProxyAP across sensitive values; sorted descending by
/// spread, ties broken alphabetically, flagged entries last.
std::vector<RankingEntry> rank_confounders(
    const Dataset& dataset, ClassId class_id, std::string_view sensitive,
    const std::vector<std::string>& explanatory_set,
    const AnalysisConfig& cfg);

}  // namespace icon2
