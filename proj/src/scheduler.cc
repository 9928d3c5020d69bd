#include "frame/scheduler.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "frame/error.h"

namespace frame {
namespace {

using nlohmann::json;

StageLabel stage_of(Quadrant q) {
  switch (q) {
    case Quadrant::kQ1: return StageLabel::kQ1;
    case Quadrant::kQ2: return StageLabel::kQ2;
    case Quadrant::kQ3: return StageLabel::kQ3;
    case Quadrant::kQ4: return StageLabel::kQ4;
  }
  return StageLabel::kQ1;
}

std::vector<StagedId> staged(std::span<const std::string> ids, StageLabel stage) {
  std::vector<StagedId> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back({id, stage});
  return out;
}

std::vector<StagedId> quadrant_ids(const QuadrantPartition& partition, Quadrant q) {
  auto ids = partition.ids_in(q);
  if (ids.empty()) {
    throw Error(ErrorCode::kEmptyQuadrant,
                "quadrant " + std::string(quadrant_name(q)) + " is empty; cannot build schedule");
  }
  return staged(ids, stage_of(q));
}

std::vector<StagedId> merge_pair(std::vector<StagedId> d1, std::vector<StagedId> d2,
                                 const OrderOptions& options, bool random_sample,
                                 std::uint64_t stream) {
  MergePlan plan = plan_merge(d1.size(), d2.size(), options.batch_size, options.params);
  plan.random_sample = random_sample;
  plan.seed = random_sample ? derive_seed(options.seed, stream) : options.seed;
  return merge_datasets(std::move(d1), std::move(d2), plan);
}

// Two-level composition shared by both four-stage schedules.
OrderedManifest four_stage(const QuadrantPartition& partition, Schedule schedule,
                           std::array<Quadrant, 4> order, const OrderOptions& options) {
  std::array<std::vector<StagedId>, 4> sources;
  for (std::size_t i = 0; i < 4; ++i) sources[i] = quadrant_ids(partition, order[i]);
  std::vector<StagedId> first =
      merge_pair(std::move(sources[0]), std::move(sources[1]), options, true, kFirstPairStream);
  std::vector<StagedId> second =
      merge_pair(std::move(sources[2]), std::move(sources[3]), options, true, kSecondPairStream);
  std::vector<StagedId> merged =
      merge_pair(std::move(first), std::move(second), options, false, 0);
  return make_manifest(merged, schedule, options);
}

OrderedManifest shuffled(std::vector<StagedId> all, const OrderOptions& options) {
  SplitMix64 rng(derive_seed(options.seed, kRandomStream));
  shuffle(std::span<StagedId>(all), rng);
  return make_manifest(all, Schedule::kRandom, options);
}

bool ppl_high(Quadrant q) { return q == Quadrant::kQ3 || q == Quadrant::kQ4; }
bool pd_high(Quadrant q) { return q == Quadrant::kQ2 || q == Quadrant::kQ4; }

// Precedence of population A over B from per-batch counts.
double precedence(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  double total_a = 0.0;
  double total_b = 0.0;
  for (auto c : a) total_a += static_cast<double>(c);
  for (auto c : b) total_b += static_cast<double>(c);
  if (total_a == 0.0 || total_b == 0.0) return 0.0;
  double later_b = total_b;
  double wins = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    later_b -= static_cast<double>(b[i]);
    wins += static_cast<double>(a[i]) * (later_b + 0.5 * static_cast<double>(b[i]));
  }
  return wins / (total_a * total_b);
}

}  // namespace

double s_shape(double p, const SShapeParams& params) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kDomain, "s_shape: completion ratio " + std::to_string(p) +
                                        " is outside [0, 1]");
  }
  if (!(params.steepness > 0.0) || !std::isfinite(params.steepness)) {
    throw Error(ErrorCode::kDomain, "s_shape: steepness must be positive and finite");
  }
  return 1.0 / (1.0 + std::exp(params.steepness * (p - 0.5)));
}

MergePlan plan_merge(std::uint64_t n1, std::uint64_t n2, std::uint64_t batch_size,
                     const SShapeParams& params) {
  if (batch_size == 0) throw Error(ErrorCode::kSizeMismatch, "batch size must be positive");
  if (n1 + n2 == 0) throw Error(ErrorCode::kSizeMismatch, "cannot merge two empty sources");

  MergePlan plan;
  plan.n1 = n1;
  plan.n2 = n2;
  plan.batch_size = batch_size;
  plan.params = params;

  const std::uint64_t total = n1 + n2;
  const std::uint64_t m = (total + batch_size - 1) / batch_size;
  plan.batch_sizes.assign(m, batch_size);
  plan.batch_sizes.back() = total - (m - 1) * batch_size;

  std::vector<double> share(m);
  plan.ideal_cumulative.resize(m);
  double cumulative = 0.0;
  for (std::uint64_t i = 0; i < m; ++i) {
    share[i] = s_shape(static_cast<double>(i + 1) / static_cast<double>(m), params);
    cumulative += share[i] * static_cast<double>(plan.batch_sizes[i]);
    plan.ideal_cumulative[i] = cumulative;
  }

  const double f0 = s_shape(0.0, params);
  const double f1 = s_shape(1.0, params);
  const double span = f0 - f1;
  const double surplus = static_cast<double>(n1) - cumulative;

  std::uint64_t taken = 0;
  std::uint64_t rem1 = n1;
  std::uint64_t rem2 = n2;
  plan.d1_takes.resize(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    // Nearly flat curves make the S-shaped weight ill-conditioned; spread
    // the surplus linearly instead.
    const double weight = span > 1e-12 ? (f0 - share[i]) / span
                                       : static_cast<double>(i + 1) / static_cast<double>(m);
    const double target = plan.ideal_cumulative[i] + surplus * weight;
    const std::int64_t done = static_cast<std::int64_t>(taken);
    const std::int64_t diffused = std::llround(plan.ideal_cumulative[i]) - done;
    const std::int64_t want = std::llround(target) - done;

    const std::uint64_t cap = plan.batch_sizes[i];
    const std::int64_t lo = static_cast<std::int64_t>(cap > rem2 ? cap - rem2 : 0);
    const std::int64_t hi = static_cast<std::int64_t>(std::min(cap, rem1));
    const std::int64_t take = std::clamp(want, lo, hi);

    if (!plan.clamp_start && take != want) plan.clamp_start = i;
    if (!plan.substitution_start && take != diffused) plan.substitution_start = i;

    plan.d1_takes[i] = static_cast<std::uint64_t>(take);
    taken += plan.d1_takes[i];
    rem1 -= plan.d1_takes[i];
    rem2 -= cap - plan.d1_takes[i];
  }
  return plan;
}

std::vector<StagedId> merge_datasets(std::vector<StagedId> d1, std::vector<StagedId> d2,
                                     const MergePlan& plan) {
  if (d1.size() != plan.n1 || d2.size() != plan.n2) {
    throw Error(ErrorCode::kSizeMismatch,
                "merge plan expects sources of " + std::to_string(plan.n1) + " and " +
                    std::to_string(plan.n2) + " samples, got " + std::to_string(d1.size()) +
                    " and " + std::to_string(d2.size()));
  }
  if (plan.random_sample) {
    SplitMix64 rng(plan.seed);
    shuffle(std::span<StagedId>(d1), rng);
    shuffle(std::span<StagedId>(d2), rng);
  }
  std::vector<StagedId> merged;
  merged.reserve(d1.size() + d2.size());
  std::size_t left = 0;
  std::size_t right = 0;
  for (std::size_t i = 0; i < plan.total_steps(); ++i) {
    const std::size_t from_first = plan.d1_takes[i];
    const std::size_t from_second = plan.batch_sizes[i] - from_first;
    for (std::size_t k = 0; k < from_first; ++k) merged.push_back(std::move(d1[left++]));
    for (std::size_t k = 0; k < from_second; ++k) merged.push_back(std::move(d2[right++]));
  }
  return merged;
}

OrderedManifest make_manifest(std::span<const StagedId> ordered, Schedule schedule,
                              const OrderOptions& options) {
  if (options.batch_size == 0) throw Error(ErrorCode::kSizeMismatch, "batch size must be positive");
  OrderedManifest manifest;
  manifest.batch_size = options.batch_size;
  manifest.schedule = schedule;
  manifest.seed = options.seed;
  for (std::size_t start = 0; start < ordered.size(); start += options.batch_size) {
    Batch batch;
    batch.batch_index = manifest.batches.size();
    const std::size_t end = std::min<std::size_t>(ordered.size(), start + options.batch_size);
    for (std::size_t i = start; i < end; ++i) {
      batch.sample_ids.push_back(ordered[i].id);
      ++batch.source_counts[ordered[i].stage];
    }
    manifest.batches.push_back(std::move(batch));
  }
  return manifest;
}

OrderedManifest build_frame(const QuadrantPartition& partition, const OrderOptions& options) {
  return four_stage(partition, Schedule::kFrame,
                    {Quadrant::kQ3, Quadrant::kQ4, Quadrant::kQ1, Quadrant::kQ2}, options);
}

OrderedManifest build_ablation(const QuadrantPartition& partition, Schedule schedule,
                               const OrderOptions& options) {
  switch (schedule) {
    case Schedule::kFrame:
      return build_frame(partition, options);
    case Schedule::kQ3Q1Q4Q2:
      return four_stage(partition, schedule,
                        {Quadrant::kQ3, Quadrant::kQ1, Quadrant::kQ4, Quadrant::kQ2}, options);
    case Schedule::kRandom: {
      std::vector<StagedId> all;
      for (const auto& a : partition.assignments()) all.push_back({a.id, stage_of(a.quadrant)});
      return shuffled(std::move(all), options);
    }
    default:
      throw Error(ErrorCode::kMissingSplit, "schedule " + std::string(schedule_name(schedule)) +
                                                " needs a two-way split, not a quadrant partition");
  }
}

OrderedManifest build_ablation(const TwoWaySplit& split, Schedule schedule,
                               const OrderOptions& options) {
  const bool by_ppl = split.metric == SplitMetric::kPpl;
  const StageLabel low_label = by_ppl ? StageLabel::kPplLow : StageLabel::kPdLow;
  const StageLabel high_label = by_ppl ? StageLabel::kPplHigh : StageLabel::kPdHigh;
  auto low = staged(split.low, low_label);
  auto high = staged(split.high, high_label);

  auto require = [&](SplitMetric metric) {
    if (split.metric != metric) {
      throw Error(ErrorCode::kMissingSplit,
                  "schedule " + std::string(schedule_name(schedule)) + " needs a " +
                      std::string(split_metric_name(metric)) + " split, got a " +
                      std::string(split_metric_name(split.metric)) + " split");
    }
  };
  auto two_stage = [&](std::vector<StagedId> first, std::vector<StagedId> second) {
    auto merged = merge_pair(std::move(first), std::move(second), options, true, kFirstPairStream);
    return make_manifest(merged, schedule, options);
  };

  switch (schedule) {
    case Schedule::kTwoStagePplH2L:
      require(SplitMetric::kPpl);
      return two_stage(std::move(high), std::move(low));
    case Schedule::kTwoStagePplL2H:
      require(SplitMetric::kPpl);
      return two_stage(std::move(low), std::move(high));
    case Schedule::kTwoStagePdL2H:
      require(SplitMetric::kPd);
      return two_stage(std::move(low), std::move(high));
    case Schedule::kTwoStagePdH2L:
      require(SplitMetric::kPd);
      return two_stage(std::move(high), std::move(low));
    case Schedule::kRandom: {
      std::vector<StagedId> all = std::move(low);
      all.insert(all.end(), high.begin(), high.end());
      return shuffled(std::move(all), options);
    }
    default:
      throw Error(ErrorCode::kMissingSplit, "schedule " + std::string(schedule_name(schedule)) +
                                                " needs a quadrant partition, not a two-way split");
  }
}

ConstraintReport verify_stage_constraints(const OrderedManifest& manifest,
                                          const QuadrantPartition& partition) {
  const std::size_t batches = manifest.batches.size();
  std::array<std::vector<std::uint64_t>, 4> histogram;
  for (auto& h : histogram) h.assign(batches, 0);

  std::size_t seen = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    for (const auto& id : manifest.batches[b].sample_ids) {
      auto q = partition.label_of(id);
      if (!q) {
        throw Error(ErrorCode::kIdUniverseMismatch,
                    "manifest id '" + id + "' is not in the partition");
      }
      ++histogram[quadrant_index(*q)][b];
      ++seen;
    }
  }
  if (seen != partition.assignments().size()) {
    throw Error(ErrorCode::kIdUniverseMismatch,
                "manifest holds " + std::to_string(seen) + " ids but the partition labels " +
                    std::to_string(partition.assignments().size()));
  }

  ConstraintReport report;
  std::array<double, 4> mean{};
  std::vector<Quadrant> present;
  for (std::size_t q = 0; q < 4; ++q) {
    double count = 0.0;
    double sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      count += static_cast<double>(histogram[q][b]);
      sum += static_cast<double>(histogram[q][b]) * static_cast<double>(b);
    }
    if (count > 0.0) {
      mean[q] = sum / count;
      present.push_back(static_cast<Quadrant>(q));
    }
  }
  std::stable_sort(present.begin(), present.end(), [&](Quadrant a, Quadrant b) {
    return mean[quadrant_index(a)] < mean[quadrant_index(b)];
  });
  report.stages = present;
  for (Quadrant q : present) report.mean_batch_index.push_back(mean[quadrant_index(q)]);

  for (std::size_t i = 0; i + 1 < present.size(); ++i) {
    StageBoundary edge;
    edge.from = present[i];
    edge.to = present[i + 1];
    edge.precedence = precedence(histogram[quadrant_index(edge.from)], histogram[quadrant_index(edge.to)]);
    edge.separated = edge.precedence >= kStageSeparation;
    edge.ppl = edge.separated && ppl_high(edge.from) >= ppl_high(edge.to) ? Verdict::kSatisfied
                                                                          : Verdict::kViolated;
    edge.pd = edge.separated && pd_high(edge.from) <= pd_high(edge.to) ? Verdict::kSatisfied
                                                                       : Verdict::kViolated;
    report.boundaries.push_back(edge);
  }

  const bool four_stage_schedule =
      manifest.schedule == Schedule::kFrame || manifest.schedule == Schedule::kQ3Q1Q4Q2;
  for (std::size_t i = 0; i < report.boundaries.size(); ++i) {
    StageBoundary& edge = report.boundaries[i];
    const int broken = (edge.ppl == Verdict::kViolated) + (edge.pd == Verdict::kViolated);
    if (four_stage_schedule && present.size() == 4 && i == 1 && edge.separated && broken == 1) {
      edge.intentional_break = true;
      report.intentional_break = i;
      continue;
    }
    report.violations += static_cast<std::size_t>(broken);
  }

  auto merged = [&](Quadrant a, Quadrant b) {
    std::vector<std::uint64_t> h(batches);
    for (std::size_t k = 0; k < batches; ++k) {
      h[k] = histogram[quadrant_index(a)][k] + histogram[quadrant_index(b)][k];
    }
    return h;
  };
  auto nonempty = [](const std::vector<std::uint64_t>& h) {
    return std::any_of(h.begin(), h.end(), [](std::uint64_t c) { return c > 0; });
  };
  auto high_ppl = merged(Quadrant::kQ3, Quadrant::kQ4);
  auto low_ppl = merged(Quadrant::kQ1, Quadrant::kQ2);
  if (nonempty(high_ppl) && nonempty(low_ppl)) {
    report.halves.ppl_high_to_low_precedence = precedence(high_ppl, low_ppl);
  }
  auto low_pd = merged(Quadrant::kQ1, Quadrant::kQ3);
  auto high_pd = merged(Quadrant::kQ2, Quadrant::kQ4);
  if (nonempty(low_pd) && nonempty(high_pd)) {
    report.halves.pd_low_to_high_precedence = precedence(low_pd, high_pd);
  }
  return report;
}

std::string serialize_constraint_report(const ConstraintReport& report) {
  auto verdict = [](Verdict v) { return v == Verdict::kSatisfied ? "satisfied" : "violated"; };
  json stages = json::array();
  for (std::size_t i = 0; i < report.stages.size(); ++i) {
    stages.push_back({{"quadrant", std::string(quadrant_name(report.stages[i]))},
                      {"mean_batch_index", report.mean_batch_index[i]}});
  }
  json boundaries = json::array();
  for (const auto& b : report.boundaries) {
    boundaries.push_back({{"from", std::string(quadrant_name(b.from))},
                          {"to", std::string(quadrant_name(b.to))},
                          {"precedence", b.precedence},
                          {"separated", b.separated},
                          {"ppl_constraint", verdict(b.ppl)},
                          {"pd_constraint", verdict(b.pd)},
                          {"intentional_break", b.intentional_break}});
  }
  json halves = json::object();
  if (report.halves.ppl_high_to_low_precedence) {
    double p = *report.halves.ppl_high_to_low_precedence;
    halves["ppl_high_to_low"] = {{"precedence", p}, {"satisfied", p >= kStageSeparation}};
  }
  if (report.halves.pd_low_to_high_precedence) {
    double p = *report.halves.pd_low_to_high_precedence;
    halves["pd_low_to_high"] = {{"precedence", p}, {"satisfied", p >= kStageSeparation}};
  }
  json j = {{"kind", "constraint_report"},
            {"stages", std::move(stages)},
            {"boundaries", std::move(boundaries)},
            {"halves", std::move(halves)},
            {"violations", report.violations},
            {"all_satisfied", report.all_satisfied()}};
  if (report.intentional_break) j["intentional_break_boundary"] = *report.intentional_break;
  return j.dump();
}

}  // namespace frame
