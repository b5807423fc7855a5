#include "icon2/binning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "icon2/errors.hpp"

namespace icon2 {

std::int32_t bin_of(std::span<const double> edges, double value) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), value);
  return static_cast<std::int32_t>(it - edges.begin());
}

std::vector<std::string> default_bin_labels(int num_bins) {
  if (num_bins == 1) return {"all"};
  if (num_bins == 2) return {"low", "high"};
  if (num_bins == 3) return {"low", "middle", "high"};
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(num_bins));
  for (int k = 1; k <= num_bins; ++k) {
    labels.push_back("bin_" + std::to_string(k));
  }
  return labels;
}

namespace {

BinningResult finish(std::span<const double> values, std::vector<double> edges,
                     bool track_balance) {
  BinningResult result;
  result.edges = std::move(edges);
  result.counts.assign(result.edges.size() + 1, 0);
  result.assignment.reserve(values.size());
  for (double v : values) {
    const std::int32_t bin = bin_of(result.edges, v);
    result.assignment.push_back(bin);
    ++result.counts[static_cast<std::size_t>(bin)];
  }
  if (track_balance) {
    const auto [lo, hi] =
        std::minmax_element(result.counts.begin(), result.counts.end());
    result.imbalanced = *hi - *lo > 1;
  }
  return result;
}

}  // namespace

BinningResult bin_continuous(std::span<const double> values,
                             const BinningSpec& spec) {
  if (values.empty()) {
    throw Error(ErrorCode::Binning, "cannot bin an empty value list");
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::Binning, "values to bin must be finite");
    }
  }
  if (spec.num_bins < 1) {
    throw Error(ErrorCode::Binning, "num_bins must be positive");
  }

  if (spec.strategy == BinningStrategy::ExplicitEdges) {
    if (static_cast<std::size_t>(spec.num_bins) != spec.edges.size() + 1) {
      throw Error(ErrorCode::Binning,
                  "explicit edges need num_bins = len(edges) + 1");
    }
    for (std::size_t i = 1; i < spec.edges.size(); ++i) {
      if (!(spec.edges[i - 1] < spec.edges[i])) {
        throw Error(ErrorCode::Binning, "edges must be strictly increasing");
      }
    }
    return finish(values, spec.edges, false);
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  // Indices where a new tie group starts; cuts may only land here so that
  // identical values never split across bins.
  std::vector<std::size_t> boundaries;
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted[i] != sorted[i - 1]) boundaries.push_back(i);
  }
  const std::size_t distinct = boundaries.size() + 1;
  const auto bins = static_cast<std::size_t>(spec.num_bins);
  if (bins > distinct) {
    throw Error(ErrorCode::Binning,
                "num_bins (" + std::to_string(spec.num_bins) +
                    ") exceeds the number of distinct values (" +
                    std::to_string(distinct) + ")");
  }

  std::vector<double> edges;
  edges.reserve(bins - 1);
  std::size_t prev = 0;  // position in boundaries, one past the last pick
  for (std::size_t k = 1; k < bins; ++k) {
    const std::size_t ideal = k * n / bins;
    // Leave room for the remaining bins - 1 - k cuts after this one.
    const std::size_t last = boundaries.size() - (bins - 1 - k);
    std::size_t best = prev;
    auto distance = [&](std::size_t p) {
      const auto b = static_cast<long long>(boundaries[p]);
      return std::llabs(b - static_cast<long long>(ideal));
    };
    for (std::size_t p = prev + 1; p < last; ++p) {
      if (distance(p) < distance(best)) best = p;
    }
    edges.push_back(sorted[boundaries[best]]);
    prev = best + 1;
  }
  return finish(values, std::move(edges), true);
}

}  // namespace icon2
