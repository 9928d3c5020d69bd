#include "frame/manifest.h"

#include <array>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "frame/corpus.h"
#include "frame/error.h"

namespace frame {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<Schedule, std::string_view>, 7> kSchedules{{
    {Schedule::kFrame, "frame"},
    {Schedule::kQ3Q1Q4Q2, "q3_q1_q4_q2"},
    {Schedule::kTwoStagePplH2L, "two_stage_ppl_h2l"},
    {Schedule::kTwoStagePplL2H, "two_stage_ppl_l2h"},
    {Schedule::kTwoStagePdL2H, "two_stage_pd_l2h"},
    {Schedule::kTwoStagePdH2L, "two_stage_pd_h2l"},
    {Schedule::kRandom, "random"},
}};

constexpr std::array<std::pair<StageLabel, std::string_view>, 8> kStageLabels{{
    {StageLabel::kQ1, "Q1"},
    {StageLabel::kQ2, "Q2"},
    {StageLabel::kQ3, "Q3"},
    {StageLabel::kQ4, "Q4"},
    {StageLabel::kPplLow, "ppl_low"},
    {StageLabel::kPplHigh, "ppl_high"},
    {StageLabel::kPdLow, "pd_low"},
    {StageLabel::kPdHigh, "pd_high"},
}};

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidManifest, "invalid manifest: " + what);
}

std::uint64_t get_u64(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) invalid(where + ": missing '" + key + "'");
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer() && it->get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(it->get<std::int64_t>());
  }
  invalid(where + ": '" + key + "' must be a non-negative integer");
}

}  // namespace

std::optional<Schedule> parse_schedule(std::string_view name) {
  for (const auto& [value, text] : kSchedules) {
    if (text == name) return value;
  }
  return std::nullopt;
}

std::string_view schedule_name(Schedule schedule) {
  for (const auto& [value, text] : kSchedules) {
    if (value == schedule) return text;
  }
  return "unknown";
}

std::optional<StageLabel> parse_stage_label(std::string_view name) {
  for (const auto& [value, text] : kStageLabels) {
    if (text == name) return value;
  }
  return std::nullopt;
}

std::string_view stage_label_name(StageLabel label) {
  for (const auto& [value, text] : kStageLabels) {
    if (value == label) return text;
  }
  return "unknown";
}

std::size_t OrderedManifest::sample_count() const {
  std::size_t n = 0;
  for (const auto& b : batches) n += b.sample_ids.size();
  return n;
}

std::vector<std::string> OrderedManifest::flattened_ids() const {
  std::vector<std::string> ids;
  ids.reserve(sample_count());
  for (const auto& b : batches) ids.insert(ids.end(), b.sample_ids.begin(), b.sample_ids.end());
  return ids;
}

void validate_manifest(const OrderedManifest& manifest) {
  if (manifest.batch_size == 0) invalid("batch_size must be positive");
  if (schedule_name(manifest.schedule) == "unknown") invalid("unknown schedule");
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < manifest.batches.size(); ++i) {
    const Batch& b = manifest.batches[i];
    const std::string where = "batch " + std::to_string(i);
    if (b.batch_index != i) invalid(where + ": batch_index " + std::to_string(b.batch_index));
    if (b.sample_ids.empty()) invalid(where + ": empty batch");
    if (b.sample_ids.size() > manifest.batch_size) invalid(where + ": exceeds batch_size");
    if (b.sample_ids.size() < manifest.batch_size && i + 1 != manifest.batches.size()) {
      invalid(where + ": only the final batch may be short");
    }
    std::uint64_t counted = 0;
    for (const auto& [label, count] : b.source_counts) {
      if (stage_label_name(label) == "unknown") invalid(where + ": unknown stage label");
      if (count == 0) invalid(where + ": zero source count for " + std::string(stage_label_name(label)));
      counted += count;
    }
    if (counted != b.sample_ids.size()) invalid(where + ": source_counts do not sum to batch size");
    for (const auto& id : b.sample_ids) {
      if (!seen.insert(id).second) invalid("sample id '" + id + "' appears twice");
    }
  }
}

std::string serialize_manifest(const OrderedManifest& manifest) {
  validate_manifest(manifest);
  std::string out;
  json header = {{"version", OrderedManifest::kVersion},
                 {"batch_size", manifest.batch_size},
                 {"schedule", std::string(schedule_name(manifest.schedule))},
                 {"seed", manifest.seed}};
  out += header.dump();
  out += '\n';
  for (const auto& b : manifest.batches) {
    json counts = json::object();
    for (const auto& [label, count] : b.source_counts) {
      counts[std::string(stage_label_name(label))] = count;
    }
    json line = {{"batch_index", b.batch_index}, {"sample_ids", b.sample_ids},
                 {"source_counts", std::move(counts)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

OrderedManifest parse_manifest(std::string_view content) {
  OrderedManifest manifest;
  bool have_header = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, "manifest " + where + ": " + e.what());
    }
    if (!j.is_object()) invalid(where + ": expected an object");

    if (!have_header) {
      if (get_u64(j, "version", where) != OrderedManifest::kVersion) {
        invalid(where + ": unsupported version");
      }
      manifest.batch_size = get_u64(j, "batch_size", where);
      manifest.seed = get_u64(j, "seed", where);
      auto sched = j.find("schedule");
      if (sched == j.end() || !sched->is_string()) invalid(where + ": missing 'schedule'");
      auto parsed = parse_schedule(sched->get<std::string>());
      if (!parsed) invalid(where + ": unknown schedule '" + sched->get<std::string>() + "'");
      manifest.schedule = *parsed;
      have_header = true;
      continue;
    }

    Batch batch;
    batch.batch_index = get_u64(j, "batch_index", where);
    auto ids = j.find("sample_ids");
    if (ids == j.end() || !ids->is_array()) invalid(where + ": missing 'sample_ids'");
    for (const auto& id : *ids) {
      if (!id.is_string()) invalid(where + ": sample ids must be strings");
      batch.sample_ids.push_back(id.get<std::string>());
    }
    auto counts = j.find("source_counts");
    if (counts == j.end() || !counts->is_object()) invalid(where + ": missing 'source_counts'");
    for (const auto& [key, value] : counts->items()) {
      auto label = parse_stage_label(key);
      if (!label) invalid(where + ": unknown stage label '" + key + "'");
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        invalid(where + ": source count must be a non-negative integer");
      }
      batch.source_counts[*label] = value.get<std::uint64_t>();
    }
    manifest.batches.push_back(std::move(batch));
  }
  if (!have_header) invalid("missing header record");
  validate_manifest(manifest);
  return manifest;
}

void write_manifest(const OrderedManifest& manifest, const std::filesystem::path& path) {
  write_file(path, serialize_manifest(manifest));
}

OrderedManifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path));
}

}  // namespace frame
