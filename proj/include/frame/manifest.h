#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace frame {

enum class Schedule {
  kFrame,            // Q3 -> Q4 -> Q1 -> Q2
  kQ3Q1Q4Q2,         // PD-priority alternative
  kTwoStagePplH2L,
  kTwoStagePplL2H,
  kTwoStagePdL2H,
  kTwoStagePdH2L,
  kRandom,
};

std::optional<Schedule> parse_schedule(std::string_view name);
std::string_view schedule_name(Schedule schedule);

// Source a sample was drawn from: a quadrant, or one half of a two-way split.
enum class StageLabel { kQ1, kQ2, kQ3, kQ4, kPplLow, kPplHigh, kPdLow, kPdHigh };

std::optional<StageLabel> parse_stage_label(std::string_view name);
std::string_view stage_label_name(StageLabel label);

struct Batch {
  std::uint64_t batch_index = 0;
  std::vector<std::string> sample_ids;
  std::map<StageLabel, std::uint64_t> source_counts;

  friend bool operator==(const Batch&, const Batch&) = default;
};

struct OrderedManifest {
  static constexpr int kVersion = 1;

  std::uint64_t batch_size = 1;
  Schedule schedule = Schedule::kFrame;
  std::uint64_t seed = 0;
  std::vector<Batch> batches;

  std::size_t sample_count() const;
  // Sample ids in training order.
  std::vector<std::string> flattened_ids() const;

  friend bool operator==(const OrderedManifest&, const OrderedManifest&) = default;
};

// Throws Error(kInvalidManifest) unless: batch indices run 0..B-1, every
// batch is non-empty and holds at most batch_size ids (only the last may be
// short), source_counts are positive and sum to the batch size, and no id
// appears twice.
void validate_manifest(const OrderedManifest& manifest);

// Canonical JSON Lines: a header {"batch_size","schedule","seed","version"}
// then one {"batch_index","sample_ids","source_counts"} line per batch, keys
// sorted.
std::string serialize_manifest(const OrderedManifest& manifest);
OrderedManifest parse_manifest(std::string_view content);

void write_manifest(const OrderedManifest& manifest, const std::filesystem::path& path);
OrderedManifest read_manifest(const std::filesystem::path& path);

}  // namespace frame
