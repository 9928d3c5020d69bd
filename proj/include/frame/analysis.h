#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frame/partition.h"
#include "frame/scorer.h"

namespace frame {

struct HistogramBin {
  double lower_edge = 0.0;
  std::uint64_t count = 0;
};

struct DistributionReport {
  std::string group_key;
  SplitMetric metric = SplitMetric::kPpl;
  std::uint64_t sample_count = 0;
  double mean = 0.0;
  // Unbiased (n - 1) sample variance; zero for a single sample.
  double variance = 0.0;
  double min = 0.0;
  double max = 0.0;
  double bin_width = 0.0;
  std::vector<HistogramBin> histogram;
};

// Mean, variance and an equal-width histogram over [min, max]; the maximum
// falls in the last bin. When min == max every value lands in bin 0.
// Throws Error(kEmptyGroup) for no values, Error(kDomain) for bin_count == 0
// and Error(kNonFiniteInput) for NaN or infinite values.
DistributionReport distribution_stats(std::string group_key, std::span<const double> values,
                                      SplitMetric metric, std::size_t bin_count);

inline constexpr std::size_t kDefaultBinCount = 20;

// Samples without a domain are grouped under this key.
inline constexpr std::string_view kNoDomain = "(none)";

// One report per domain, sorted by key.
std::vector<DistributionReport> distribution_by_domain(std::span<const ScoredSample> scored,
                                                       SplitMetric metric,
                                                       std::size_t bin_count = kDefaultBinCount);

// One report per non-empty quadrant, Q1..Q4. Samples the partition does not
// label raise Error(kUnknownId).
std::vector<DistributionReport> distribution_by_quadrant(std::span<const ScoredSample> scored,
                                                         const QuadrantPartition& partition,
                                                         SplitMetric metric,
                                                         std::size_t bin_count = kDefaultBinCount);

// JSON Lines, one report per line, tagged with the grouping ("domain" or
// "quadrant").
std::string serialize_distribution_reports(std::span<const DistributionReport> reports,
                                           std::string_view grouping);

}  // namespace frame
