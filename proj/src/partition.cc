#include "frame/partition.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "frame/error.h"

namespace frame {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 4> kQuadrantNames{"Q1", "Q2", "Q3", "Q4"};

std::uint64_t abs_diff(std::uint64_t a, std::uint64_t b) { return a > b ? a - b : b - a; }

struct HalfSplit {
  BalancedSplit split;
  std::vector<std::size_t> members;  // indices into the scored input
};

HalfSplit split_members(std::span<const ScoredSample> scored, std::vector<std::size_t> members,
                        SplitMetric metric, std::string_view population) {
  if (members.size() < 2) {
    throw Error(ErrorCode::kDegenerateDistribution,
                "degenerate distribution: " + std::string(population) + " has " +
                    std::to_string(members.size()) + " sample(s), cannot split by " +
                    std::string(split_metric_name(metric)));
  }
  std::vector<WeightedValue> values;
  values.reserve(members.size());
  for (std::size_t i : members) {
    const ScoredSample& s = scored[i];
    double v = metric == SplitMetric::kPpl ? s.ppl_strong : s.pd;
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteInput, "non-finite " + std::string(split_metric_name(metric)) +
                                                  " for sample '" + s.id + "'");
    }
    values.push_back({v, s.token_count, s.id});
  }
  BalancedSplit split = find_balanced_split(values);
  if (split.degenerate) {
    throw Error(ErrorCode::kDegenerateDistribution,
                "degenerate distribution: all " + std::string(split_metric_name(metric)) +
                    " values in " + std::string(population) + " are identical");
  }
  return {std::move(split), std::move(members)};
}

}  // namespace

std::string_view quadrant_name(Quadrant q) { return kQuadrantNames[quadrant_index(q)]; }

std::optional<Quadrant> parse_quadrant(std::string_view name) {
  for (std::size_t i = 0; i < kQuadrantNames.size(); ++i) {
    if (kQuadrantNames[i] == name) return static_cast<Quadrant>(i);
  }
  return std::nullopt;
}

std::string_view split_metric_name(SplitMetric metric) {
  return metric == SplitMetric::kPpl ? "ppl" : "pd";
}

BalancedSplit find_balanced_split(std::span<const WeightedValue> samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "token-balanced split needs at least 2 samples, got " +
                    std::to_string(samples.size()));
  }
  BalancedSplit result;
  result.order.resize(samples.size());
  std::iota(result.order.begin(), result.order.end(), std::size_t{0});
  std::stable_sort(result.order.begin(), result.order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].value != samples[b].value) return samples[a].value < samples[b].value;
    return samples[a].id < samples[b].id;
  });

  std::uint64_t total = 0;
  for (const auto& s : samples) {
    if (s.weight == 0) throw Error(ErrorCode::kZeroTokenCount, "split weights must be positive");
    total += s.weight;
  }

  std::uint64_t cumulative = 0;
  std::uint64_t best_gap = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t k = 1; k < samples.size(); ++k) {
    cumulative += samples[result.order[k - 1]].weight;
    std::uint64_t gap = abs_diff(cumulative, total - cumulative);
    // Strict improvement only: on a tie the earlier cut (smaller low side) stays.
    if (gap < best_gap) {
      best_gap = gap;
      result.low_count = k;
      result.low_weight = cumulative;
    }
  }
  result.high_weight = total - result.low_weight;
  result.threshold = samples[result.order[result.low_count - 1]].value;
  result.degenerate =
      samples[result.order.front()].value == samples[result.order.back()].value;
  return result;
}

double find_token_balanced_threshold(std::span<const WeightedValue> samples) {
  return find_balanced_split(samples).threshold;
}

QuadrantPartition::QuadrantPartition(Thresholds thresholds, std::vector<LabeledSample> assignments)
    : thresholds_(thresholds), assignments_(std::move(assignments)) {
  for (const auto& a : assignments_) {
    token_totals_[quadrant_index(a.quadrant)] += a.token_count;
    if (!index_.emplace(a.id, a.quadrant).second) {
      throw Error(ErrorCode::kDuplicateId, "sample '" + a.id + "' labeled twice");
    }
  }
}

QuadrantPartition::QuadrantPartition(Thresholds thresholds, std::vector<LabeledSample> assignments,
                                     std::array<std::uint64_t, 4> token_totals)
    : QuadrantPartition(thresholds, std::move(assignments)) {
  token_totals_ = token_totals;
}

std::uint64_t QuadrantPartition::total_tokens() const {
  return std::accumulate(token_totals_.begin(), token_totals_.end(), std::uint64_t{0});
}

std::optional<Quadrant> QuadrantPartition::label_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> QuadrantPartition::ids_in(Quadrant q) const {
  std::vector<std::string> ids;
  for (const auto& a : assignments_) {
    if (a.quadrant == q) ids.push_back(a.id);
  }
  return ids;
}

std::size_t QuadrantPartition::count_in(Quadrant q) const {
  return static_cast<std::size_t>(std::count_if(
      assignments_.begin(), assignments_.end(), [q](const LabeledSample& a) { return a.quadrant == q; }));
}

QuadrantPartition partition_quadrants(std::span<const ScoredSample> scored) {
  if (scored.size() < 4) {
    throw Error(ErrorCode::kInsufficientSamples,
                "quadrant partition needs at least 4 samples, got " + std::to_string(scored.size()));
  }
  std::vector<std::size_t> all(scored.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  HalfSplit by_ppl = split_members(scored, std::move(all), SplitMetric::kPpl, "the corpus");

  std::vector<std::size_t> low_ppl(by_ppl.split.order.begin(),
                                   by_ppl.split.order.begin() + by_ppl.split.low_count);
  std::vector<std::size_t> high_ppl(by_ppl.split.order.begin() + by_ppl.split.low_count,
                                    by_ppl.split.order.end());
  // order[] indexes into the member list, which is the identity here.
  HalfSplit low = split_members(scored, low_ppl, SplitMetric::kPd, "the low-PPL half");
  HalfSplit high = split_members(scored, high_ppl, SplitMetric::kPd, "the high-PPL half");

  std::vector<Quadrant> label(scored.size());
  auto assign = [&](const HalfSplit& half, Quadrant low_pd, Quadrant high_pd) {
    for (std::size_t r = 0; r < half.split.order.size(); ++r) {
      std::size_t input = half.members[half.split.order[r]];
      label[input] = r < half.split.low_count ? low_pd : high_pd;
    }
  };
  assign(low, Quadrant::kQ1, Quadrant::kQ2);
  assign(high, Quadrant::kQ3, Quadrant::kQ4);

  std::vector<LabeledSample> assignments;
  assignments.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    assignments.push_back({scored[i].id, label[i], scored[i].token_count});
  }
  Thresholds thresholds{by_ppl.split.threshold, low.split.threshold, high.split.threshold};
  return QuadrantPartition(thresholds, std::move(assignments));
}

TwoWaySplit two_way_partition(std::span<const ScoredSample> scored, SplitMetric metric) {
  if (scored.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "two-way split needs at least 2 samples, got " + std::to_string(scored.size()));
  }
  std::vector<std::size_t> all(scored.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  HalfSplit half = split_members(scored, std::move(all), metric, "the corpus");

  std::vector<bool> is_low(scored.size(), false);
  for (std::size_t r = 0; r < half.split.low_count; ++r) is_low[half.split.order[r]] = true;

  TwoWaySplit out;
  out.metric = metric;
  out.threshold = half.split.threshold;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (is_low[i]) {
      out.low.push_back(scored[i].id);
      out.low_tokens += scored[i].token_count;
    } else {
      out.high.push_back(scored[i].id);
      out.high_tokens += scored[i].token_count;
    }
  }
  return out;
}

std::string serialize_partition_report(const QuadrantPartition& partition) {
  const Thresholds& t = partition.thresholds();
  json totals = json::object();
  for (std::size_t q = 0; q < 4; ++q) totals[std::string(kQuadrantNames[q])] = partition.token_totals()[q];
  json header = {
      {"kind", "partition_report"},
      {"version", 1},
      {"sample_count", partition.assignments().size()},
      {"thresholds",
       {{"ppl_split", t.ppl_split},
        {"pd_split_low_ppl", t.pd_split_low_ppl},
        {"pd_split_high_ppl", t.pd_split_high_ppl}}},
      {"pd_threshold_gap", t.pd_split_high_ppl - t.pd_split_low_ppl},
      {"token_totals", std::move(totals)},
  };
  std::string out = header.dump();
  out += '\n';
  for (const auto& a : partition.assignments()) {
    json line = {{"id", a.id}, {"quadrant", std::string(quadrant_name(a.quadrant))}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

QuadrantPartition parse_partition_report(std::string_view content) {
  std::optional<json> header;
  std::vector<LabeledSample> assignments;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "partition report line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + e.what());
    }
    if (!header) {
      if (!j.is_object() || j.value("kind", "") != "partition_report") {
        throw Error(ErrorCode::kParse, where + "expected partition_report header");
      }
      header = std::move(j);
      continue;
    }
    if (!j.contains("id") || !j["id"].is_string() || !j.contains("quadrant") ||
        !j["quadrant"].is_string()) {
      throw Error(ErrorCode::kParse, where + "expected {\"id\", \"quadrant\"}");
    }
    auto q = parse_quadrant(j["quadrant"].get<std::string>());
    if (!q) throw Error(ErrorCode::kParse, where + "unknown quadrant");
    assignments.push_back({j["id"].get<std::string>(), *q, 0});
  }
  if (!header) throw Error(ErrorCode::kParse, "partition report: missing header");
  Thresholds t;
  std::array<std::uint64_t, 4> totals{};
  try {
    const json& th = header->at("thresholds");
    t.ppl_split = th.at("ppl_split").get<double>();
    t.pd_split_low_ppl = th.at("pd_split_low_ppl").get<double>();
    t.pd_split_high_ppl = th.at("pd_split_high_ppl").get<double>();
    for (std::size_t q = 0; q < 4; ++q) {
      totals[q] = header->at("token_totals").at(std::string(kQuadrantNames[q])).get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("partition report header: ") + e.what());
  }
  return QuadrantPartition(t, std::move(assignments), totals);
}

void write_partition_report(const QuadrantPartition& partition, const std::filesystem::path& path) {
  write_file(path, serialize_partition_report(partition));
}

QuadrantPartition read_partition_report(const std::filesystem::path& path) {
  return parse_partition_report(read_file(path));
}

}  // namespace frame
