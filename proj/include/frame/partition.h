#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "frame/scorer.h"

namespace frame {

enum class Quadrant {
  kQ1,  // low PPL, low PD
  kQ2,  // low PPL, high PD
  kQ3,  // high PPL, low PD
  kQ4,  // high PPL, high PD
};

std::string_view quadrant_name(Quadrant q);
std::optional<Quadrant> parse_quadrant(std::string_view name);
inline std::size_t quadrant_index(Quadrant q) { return static_cast<std::size_t>(q); }

struct WeightedValue {
  double value = 0.0;
  std::uint64_t weight = 1;
  // Orders equal values; empty ids fall back to input position.
  std::string_view id = {};
};

// Best token-balanced two-way cut of a population sorted by (value, id).
struct BalancedSplit {
  // Value of the last element on the low side.
  double threshold = 0.0;
  // Input indices in sorted order; the first low_count form the low side.
  std::vector<std::size_t> order;
  std::size_t low_count = 0;
  std::uint64_t low_weight = 0;
  std::uint64_t high_weight = 0;
  // True when every value is identical, so no value separates the sides.
  bool degenerate = false;
};

// Among all cuts of the sorted population leaving both sides non-empty,
// picks the one minimizing |low_weight - high_weight|; ties go to the
// smaller low side. Throws Error(kInsufficientSamples) for fewer than 2
// samples.
BalancedSplit find_balanced_split(std::span<const WeightedValue> samples);

// Threshold of find_balanced_split: samples at or below it form the low side.
double find_token_balanced_threshold(std::span<const WeightedValue> samples);

struct Thresholds {
  double ppl_split = 0.0;
  double pd_split_low_ppl = 0.0;
  double pd_split_high_ppl = 0.0;
};

struct LabeledSample {
  std::string id;
  Quadrant quadrant = Quadrant::kQ1;
  std::uint64_t token_count = 0;
};

class QuadrantPartition {
 public:
  QuadrantPartition() = default;
  // Token totals are summed from the assignments.
  QuadrantPartition(Thresholds thresholds, std::vector<LabeledSample> assignments);
  // Token totals given explicitly (a report read back without per-sample counts).
  QuadrantPartition(Thresholds thresholds, std::vector<LabeledSample> assignments,
                    std::array<std::uint64_t, 4> token_totals);

  const Thresholds& thresholds() const { return thresholds_; }
  // In the order of the scored input.
  std::span<const LabeledSample> assignments() const { return assignments_; }
  const std::array<std::uint64_t, 4>& token_totals() const { return token_totals_; }
  std::uint64_t total_tokens() const;

  std::optional<Quadrant> label_of(std::string_view id) const;
  // Ids of one quadrant, in input order.
  std::vector<std::string> ids_in(Quadrant q) const;
  std::size_t count_in(Quadrant q) const;

 private:
  Thresholds thresholds_;
  std::vector<LabeledSample> assignments_;
  std::array<std::uint64_t, 4> token_totals_{};
  std::unordered_map<std::string, Quadrant> index_;
};

// Token-balanced PPL split over all samples (PPL of the strong model), then
// a separate token-balanced PD split inside each PPL half. Throws
// Error(kDegenerateDistribution) when a metric cannot be split.
QuadrantPartition partition_quadrants(std::span<const ScoredSample> scored);

enum class SplitMetric { kPpl, kPd };

std::string_view split_metric_name(SplitMetric metric);

struct TwoWaySplit {
  SplitMetric metric = SplitMetric::kPpl;
  double threshold = 0.0;
  // Input order within each side.
  std::vector<std::string> low;
  std::vector<std::string> high;
  std::uint64_t low_tokens = 0;
  std::uint64_t high_tokens = 0;
};

TwoWaySplit two_way_partition(std::span<const ScoredSample> scored, SplitMetric metric);

// Partition report: a header with thresholds and token totals, then
// {"id","quadrant"} per sample.
std::string serialize_partition_report(const QuadrantPartition& partition);
QuadrantPartition parse_partition_report(std::string_view content);
void write_partition_report(const QuadrantPartition& partition, const std::filesystem::path& path);
QuadrantPartition read_partition_report(const std::filesystem::path& path);

}  // namespace frame
