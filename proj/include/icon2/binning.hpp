#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace icon2 {

enum class BinningStrategy { EqualCount, ExplicitEdges };

struct BinningSpec {
  int num_bins = 3;
  BinningStrategy strategy = BinningStrategy::EqualCount;
  std::vector<double> edges;  // ExplicitEdges only, strictly increasing
};

struct BinningResult {
  std::vector<double> edges;             // num_bins - 1 cuts, ascending
  std::vector<std::int32_t> assignment;  // bin index per input value
  std::vector<long> counts;              // population per bin
  bool imbalanced = false;  // tie groups forced counts to differ by > 1
};

BinningResult bin_continuous(std::span<const double> values,
                             const BinningSpec& spec);

/// Bin index for a value given ascending cut edges. A value equal to an
/// edge belongs to the upper bucket.
std::int32_t bin_of(std::span<const double> edges, double value);

/// low/high for two bins, low/middle/high for three, bin_1..bin_k otherwise.
std::vector<std::string> default_bin_labels(int num_bins);

}  // namespace icon2
