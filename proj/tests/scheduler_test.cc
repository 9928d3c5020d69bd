#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "frame/scheduler.h"
#include "oracles.h"
#include "test_util.h"

namespace frame {
namespace {

using testing::code_of;

constexpr std::array<Quadrant, 4> kAll{Quadrant::kQ1, Quadrant::kQ2, Quadrant::kQ3, Quadrant::kQ4};

QuadrantPartition equal_quadrants(std::size_t per_quadrant, bool interleave = true) {
  std::vector<LabeledSample> labeled;
  for (std::size_t i = 0; i < per_quadrant; ++i) {
    for (Quadrant q : kAll) {
      labeled.push_back({std::string(quadrant_name(q)) + "-" + std::to_string(i), q, 10});
    }
  }
  if (!interleave) {
    std::stable_sort(labeled.begin(), labeled.end(),
                     [](const auto& a, const auto& b) { return a.quadrant < b.quadrant; });
  }
  return QuadrantPartition(Thresholds{}, std::move(labeled));
}

std::array<double, 4> mean_batch_index(const OrderedManifest& m, const QuadrantPartition& p) {
  std::array<double, 4> sum{};
  std::array<double, 4> count{};
  for (const auto& b : m.batches) {
    for (const auto& id : b.sample_ids) {
      auto q = quadrant_index(*p.label_of(id));
      sum[q] += static_cast<double>(b.batch_index);
      count[q] += 1.0;
    }
  }
  for (std::size_t q = 0; q < 4; ++q) sum[q] /= count[q];
  return sum;
}

std::vector<std::string> sorted_ids(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<StagedId> staged(const std::string& prefix, std::size_t n, StageLabel label) {
  std::vector<StagedId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), label});
  return out;
}

TEST(SShape, Examples) {
  EXPECT_EQ(s_shape(0.5), 0.5);
  EXPECT_EQ(s_shape(0.5, {3.0}), 0.5);
  EXPECT_NEAR(s_shape(0.25), 0.999841, 1e-6);
  EXPECT_NEAR(s_shape(0.25), static_cast<double>(oracle::logistic(0.25L, 35.0L)), 1e-15);
}

TEST(SShape, SymmetryAndMonotonicity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double p = u(rng);
    double a = 0.1 + 60.0 * u(rng);
    EXPECT_NEAR(s_shape(p, {a}) + s_shape(1.0 - p, {a}), 1.0, 1e-12);
    double q = std::min(1.0, p + 1e-3);
    if (q > p) { EXPECT_LT(s_shape(q, {a}), s_shape(p, {a})); }
  }
}

TEST(SShape, DomainErrors) {
  EXPECT_EQ(code_of([] { s_shape(-0.01); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { s_shape(1.01); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { s_shape(0.3, {0.0}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { s_shape(NAN); }), ErrorCode::kDomain);
}

TEST(PlanMerge, HandTracedExample) {
  MergePlan plan = plan_merge(4, 4, 2);
  EXPECT_EQ(plan.total_steps(), 4u);
  EXPECT_EQ(plan.d1_takes, (std::vector<std::uint64_t>{2, 1, 1, 0}));
  // Ideal draws are quoted to 3 or 4 decimals; tolerances follow the digits.
  std::vector<double> ideal{2.000, 1.000, 0.0003, 0.0000};
  std::vector<double> tol{5e-4, 5e-4, 5e-5, 5e-5};
  for (std::size_t i = 0; i < 4; ++i) {
    double per_batch = plan.ideal_cumulative[i] - (i ? plan.ideal_cumulative[i - 1] : 0.0);
    EXPECT_NEAR(per_batch, ideal[i], tol[i]);
  }
}

TEST(PlanMerge, EmptyFirstSource) {
  MergePlan plan = plan_merge(0, 7, 3);
  EXPECT_EQ(plan.d1_takes, (std::vector<std::uint64_t>{0, 0, 0}));
  EXPECT_EQ(plan.batch_sizes, (std::vector<std::uint64_t>{3, 3, 1}));
}

TEST(PlanMerge, PreconditionErrors) {
  EXPECT_EQ(code_of([] { plan_merge(0, 0, 4); }), ErrorCode::kSizeMismatch);
  EXPECT_EQ(code_of([] { plan_merge(3, 3, 0); }), ErrorCode::kSizeMismatch);
}

TEST(PlanMerge, SteepLimitIsNearlyAHardConcatenation) {
  // With p = i/m landing exactly on 0.5, the midpoint batch is split; the
  // rest of the plan is all-first-source then all-second-source.
  for (std::uint64_t m_half : {5u, 8u, 13u}) {
    const std::uint64_t n = 10 * m_half;
    MergePlan plan = plan_merge(n, n, 10, {1e6});
    const auto& t = plan.d1_takes;
    std::size_t first_partial = t.size();
    std::size_t last_partial = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] != 0 && t[i] != 10) {
        first_partial = std::min(first_partial, i);
        last_partial = i;
      }
    }
    ASSERT_LT(first_partial, t.size());
    EXPECT_LE(last_partial - first_partial, 1u);
    EXPECT_GE(first_partial + 1, m_half - 1);
    for (std::size_t i = 0; i < first_partial; ++i) EXPECT_EQ(t[i], 10u);
    for (std::size_t i = last_partial + 1; i < t.size(); ++i) EXPECT_EQ(t[i], 0u);
  }
}

TEST(PlanMergeProperty, ConservationAndCapacity) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 2000; ++trial) {
    std::uint64_t n1 = rng() % 300;
    std::uint64_t n2 = rng() % 300;
    if (n1 + n2 == 0) continue;
    std::uint64_t batch = 1 + rng() % 40;
    double a = trial % 3 == 0 ? 35.0 : 0.5 + static_cast<double>(rng() % 1000) / 10.0;
    MergePlan plan = plan_merge(n1, n2, batch, {a});
    std::uint64_t sum1 = 0;
    std::uint64_t sum2 = 0;
    for (std::size_t i = 0; i < plan.total_steps(); ++i) {
      ASSERT_LE(plan.d1_takes[i], plan.batch_sizes[i]);
      if (i + 1 < plan.total_steps()) { ASSERT_EQ(plan.batch_sizes[i], batch); }
      sum1 += plan.d1_takes[i];
      sum2 += plan.batch_sizes[i] - plan.d1_takes[i];
    }
    EXPECT_EQ(sum1, n1);
    EXPECT_EQ(sum2, n2);
    EXPECT_EQ(plan.total_steps(), (n1 + n2 + batch - 1) / batch);
  }
}

TEST(PlanMergeProperty, PrefixTracksIdealUntilSubstitution) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::uint64_t n1 = rng() % 500;
    std::uint64_t n2 = rng() % 500;
    if (n1 + n2 == 0) continue;
    std::uint64_t batch = 1 + rng() % 50;
    long double a = trial % 2 ? 35.0L : 1.0L + static_cast<long double>(rng() % 600) / 10.0L;
    MergePlan plan = plan_merge(n1, n2, batch, {static_cast<double>(a)});
    auto ideal = oracle::ideal_cumulative(n1, n2, batch, a);
    std::size_t stop = plan.substitution_start.value_or(plan.total_steps());
    long double cumulative = 0.0L;
    for (std::size_t i = 0; i < stop; ++i) {
      cumulative += plan.d1_takes[i];
      ASSERT_LT(std::abs(cumulative - ideal[i]), 1.0L)
          << "n1=" << n1 << " n2=" << n2 << " N=" << batch << " a=" << static_cast<double>(a) << " i=" << i;
    }
  }
}

TEST(PlanMergeProperty, SubstitutionWaitsForTheTransition) {
  // With a steep curve and balanced sources the first batches are pure
  // first-source draws, so no substitution happens in the opening 30%.
  for (std::uint64_t n : {40u, 100u, 1000u}) {
    for (std::uint64_t batch : {1u, 4u, 10u}) {
      MergePlan plan = plan_merge(n, n, batch);
      if (!plan.substitution_start) continue;
      EXPECT_GE(static_cast<double>(*plan.substitution_start), 0.3 * plan.total_steps());
    }
  }
}

TEST(MergeDatasets, EmptyFirstSource) {
  auto d2 = std::vector<StagedId>{{"x", StageLabel::kQ2}, {"y", StageLabel::kQ2}};
  auto out = merge_datasets({}, d2, plan_merge(0, 2, 2));
  EXPECT_EQ(out, d2);
}

TEST(MergeDatasets, SizeMismatch) {
  EXPECT_EQ(code_of([] { merge_datasets(staged("a", 3, StageLabel::kQ1), {}, plan_merge(2, 0, 1)); }),
            ErrorCode::kSizeMismatch);
}

TEST(MergeDatasets, SequentialModeCrossesOnlyNearTheMidpoint) {
  const std::size_t n = 200;
  const std::uint64_t batch = 10;
  MergePlan plan = plan_merge(n, n, batch);
  auto out = merge_datasets(staged("a", n, StageLabel::kQ3), staged("b", n, StageLabel::kQ4), plan);
  // Input order preserved inside each source.
  std::size_t next_a = 0;
  std::size_t next_b = 0;
  std::size_t last_a_batch = 0;
  std::size_t first_b_batch = out.size();
  for (std::size_t pos = 0; pos < out.size(); ++pos) {
    if (out[pos].stage == StageLabel::kQ3) {
      EXPECT_EQ(out[pos].id, "a" + std::to_string(next_a++));
      last_a_batch = pos / batch;
    } else {
      EXPECT_EQ(out[pos].id, "b" + std::to_string(next_b++));
      first_b_batch = std::min(first_b_batch, pos / batch);
    }
  }
  // Batches where f(p) is neither ~1 nor ~0 bound the crossing window.
  const double m = static_cast<double>(plan.total_steps());
  std::size_t window_start = 0;
  std::size_t window_end = 0;
  for (std::size_t i = 1; i <= plan.total_steps(); ++i) {
    double f = s_shape(static_cast<double>(i) / m);
    if (f > 1.0 - 1.0 / (2.0 * batch)) window_start = i;
    if (f >= 1.0 / (2.0 * batch)) window_end = i;
  }
  EXPECT_GE(first_b_batch + 1, window_start);
  EXPECT_LE(last_a_batch + 1, window_end + 1);
}

TEST(MergeDatasets, RandomModeIsSeeded) {
  MergePlan plan = plan_merge(30, 30, 6);
  plan.random_sample = true;
  plan.seed = 77;
  auto d1 = staged("a", 30, StageLabel::kQ3);
  auto d2 = staged("b", 30, StageLabel::kQ4);
  auto first = merge_datasets(d1, d2, plan);
  EXPECT_EQ(merge_datasets(d1, d2, plan), first);
  plan.seed = 78;
  EXPECT_NE(merge_datasets(d1, d2, plan), first);
  std::vector<std::string> ids;
  for (const auto& s : first) ids.push_back(s.id);
  std::vector<std::string> expected;
  for (const auto& s : d1) expected.push_back(s.id);
  for (const auto& s : d2) expected.push_back(s.id);
  EXPECT_EQ(sorted_ids(ids), sorted_ids(expected));
}

TEST(BuildFrame, OneSamplePerQuadrant) {
  QuadrantPartition p = equal_quadrants(1);
  OrderedManifest m = build_frame(p, {1, {}, 5});
  ASSERT_EQ(m.batches.size(), 4u);
  std::vector<Quadrant> order;
  for (const auto& id : m.flattened_ids()) order.push_back(*p.label_of(id));
  EXPECT_EQ(order, (std::vector<Quadrant>{Quadrant::kQ3, Quadrant::kQ4, Quadrant::kQ1, Quadrant::kQ2}));
}

TEST(BuildFrame, StageMassOrderingAndEdges) {
  QuadrantPartition p = equal_quadrants(100);
  OrderedManifest m = build_frame(p, {10, {35.0}, 1234});
  ASSERT_EQ(m.batches.size(), 40u);
  auto mean = mean_batch_index(m, p);
  EXPECT_LT(mean[2], mean[3]);
  EXPECT_LT(mean[3], mean[0]);
  EXPECT_LT(mean[0], mean[1]);
  std::size_t head_q3 = 0;
  std::size_t tail_q2 = 0;
  for (std::size_t b = 0; b < 4; ++b) {
    for (const auto& id : m.batches[b].sample_ids) head_q3 += *p.label_of(id) == Quadrant::kQ3;
    for (const auto& id : m.batches[36 + b].sample_ids) tail_q2 += *p.label_of(id) == Quadrant::kQ2;
  }
  EXPECT_GE(head_q3, 38u);
  EXPECT_GE(tail_q2, 38u);
}

TEST(BuildFrame, SourceCountsMatchLabels) {
  QuadrantPartition p = equal_quadrants(13);
  OrderedManifest m = build_frame(p, {7, {}, 3});
  validate_manifest(m);
  for (const auto& b : m.batches) {
    std::map<StageLabel, std::uint64_t> counts;
    for (const auto& id : b.sample_ids) ++counts[static_cast<StageLabel>(quadrant_index(*p.label_of(id)))];
    EXPECT_EQ(counts, b.source_counts);
  }
}

TEST(BuildFrame, EmptyQuadrant) {
  std::vector<LabeledSample> labeled{{"a", Quadrant::kQ1, 1}, {"b", Quadrant::kQ2, 1}, {"c", Quadrant::kQ3, 1}};
  QuadrantPartition p(Thresholds{}, labeled);
  EXPECT_EQ(code_of([&] { build_frame(p, {1, {}, 0}); }), ErrorCode::kEmptyQuadrant);
}

TEST(BuildAblation, RandomIsStableAndSeedSensitive) {
  QuadrantPartition p = equal_quadrants(20);
  auto a = build_ablation(p, Schedule::kRandom, {8, {}, 1});
  EXPECT_EQ(build_ablation(p, Schedule::kRandom, {8, {}, 1}), a);
  EXPECT_NE(build_ablation(p, Schedule::kRandom, {8, {}, 2}).flattened_ids(), a.flattened_ids());
  EXPECT_EQ(a.schedule, Schedule::kRandom);
}

TEST(BuildAblation, PdPriorityOrdering) {
  QuadrantPartition p = equal_quadrants(50);
  auto m = build_ablation(p, Schedule::kQ3Q1Q4Q2, {10, {}, 9});
  auto mean = mean_batch_index(m, p);
  EXPECT_LT(mean[2], mean[0]);
  EXPECT_LT(mean[0], mean[3]);
  EXPECT_LT(mean[3], mean[1]);
}

TEST(BuildAblation, FrameForwarded) {
  QuadrantPartition p = equal_quadrants(5);
  EXPECT_EQ(build_ablation(p, Schedule::kFrame, {3, {}, 4}), build_frame(p, {3, {}, 4}));
}

TwoWaySplit split_of(SplitMetric metric, std::size_t n) {
  TwoWaySplit s;
  s.metric = metric;
  for (std::size_t i = 0; i < n; ++i) {
    s.low.push_back("lo" + std::to_string(i));
    s.high.push_back("hi" + std::to_string(i));
  }
  s.low_tokens = s.high_tokens = n;
  return s;
}

double mean_position(const OrderedManifest& m, const std::string& prefix) {
  double sum = 0.0;
  double count = 0.0;
  for (const auto& b : m.batches) {
    for (const auto& id : b.sample_ids) {
      if (id.rfind(prefix, 0) == 0) {
        sum += static_cast<double>(b.batch_index);
        count += 1.0;
      }
    }
  }
  return sum / count;
}

TEST(BuildAblation, TwoStageSchedulesPutFirstStageEarlier) {
  struct Case {
    Schedule schedule;
    SplitMetric metric;
    const char* first;
    const char* second;
  };
  for (Case c : {Case{Schedule::kTwoStagePplH2L, SplitMetric::kPpl, "hi", "lo"},
                 Case{Schedule::kTwoStagePplL2H, SplitMetric::kPpl, "lo", "hi"},
                 Case{Schedule::kTwoStagePdL2H, SplitMetric::kPd, "lo", "hi"},
                 Case{Schedule::kTwoStagePdH2L, SplitMetric::kPd, "hi", "lo"}}) {
    auto m = build_ablation(split_of(c.metric, 60), c.schedule, {6, {}, 11});
    EXPECT_LT(mean_position(m, c.first), mean_position(m, c.second)) << schedule_name(c.schedule);
    EXPECT_EQ(m.sample_count(), 120u);
  }
}

TEST(BuildAblation, MissingSplitErrors) {
  QuadrantPartition p = equal_quadrants(3);
  EXPECT_EQ(code_of([&] { build_ablation(p, Schedule::kTwoStagePdL2H, {1, {}, 0}); }),
            ErrorCode::kMissingSplit);
  EXPECT_EQ(code_of([&] { build_ablation(split_of(SplitMetric::kPd, 3), Schedule::kTwoStagePplH2L, {1, {}, 0}); }),
            ErrorCode::kMissingSplit);
  EXPECT_EQ(code_of([&] { build_ablation(split_of(SplitMetric::kPd, 3), Schedule::kFrame, {1, {}, 0}); }),
            ErrorCode::kMissingSplit);
}

TEST(SchedulerProperty, EverySchedulePermutesTheInput) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<LabeledSample> labeled;
    std::size_t n = 4 + rng() % 120;
    for (std::size_t i = 0; i < n; ++i) {
      Quadrant q = i < 4 ? kAll[i] : kAll[rng() % 4];
      labeled.push_back({"s" + std::to_string(i), q, 1 + rng() % 9});
    }
    QuadrantPartition p(Thresholds{}, labeled);
    std::vector<std::string> ids;
    for (const auto& l : labeled) ids.push_back(l.id);
    OrderOptions opts{1 + rng() % 16, {5.0 + static_cast<double>(rng() % 50)}, rng()};
    for (Schedule s : {Schedule::kFrame, Schedule::kQ3Q1Q4Q2, Schedule::kRandom}) {
      auto m = build_ablation(p, s, opts);
      validate_manifest(m);
      EXPECT_EQ(sorted_ids(m.flattened_ids()), sorted_ids(ids));
    }
  }
}

TEST(VerifyConstraints, FrameManifest) {
  QuadrantPartition p = equal_quadrants(100);
  auto report = verify_stage_constraints(build_frame(p, {10, {}, 8}), p);
  ASSERT_EQ(report.stages,
            (std::vector<Quadrant>{Quadrant::kQ3, Quadrant::kQ4, Quadrant::kQ1, Quadrant::kQ2}));
  ASSERT_EQ(report.boundaries.size(), 3u);
  for (std::size_t i : {0u, 2u}) {
    EXPECT_EQ(report.boundaries[i].ppl, Verdict::kSatisfied);
    EXPECT_EQ(report.boundaries[i].pd, Verdict::kSatisfied);
    EXPECT_FALSE(report.boundaries[i].intentional_break);
  }
  EXPECT_EQ(report.boundaries[1].ppl, Verdict::kSatisfied);
  EXPECT_EQ(report.boundaries[1].pd, Verdict::kViolated);
  EXPECT_TRUE(report.boundaries[1].intentional_break);
  EXPECT_EQ(report.intentional_break, 1u);
  EXPECT_TRUE(report.all_satisfied());
}

TEST(VerifyConstraints, PdPriorityBreaksPplOnce) {
  QuadrantPartition p = equal_quadrants(100);
  auto report = verify_stage_constraints(build_ablation(p, Schedule::kQ3Q1Q4Q2, {10, {}, 8}), p);
  ASSERT_EQ(report.boundaries.size(), 3u);
  EXPECT_EQ(report.boundaries[1].ppl, Verdict::kViolated);
  EXPECT_EQ(report.boundaries[1].pd, Verdict::kSatisfied);
  EXPECT_TRUE(report.boundaries[1].intentional_break);
  EXPECT_TRUE(report.all_satisfied());
}

TEST(VerifyConstraints, RandomManifestFailsEverything) {
  QuadrantPartition p = equal_quadrants(100);
  auto report = verify_stage_constraints(build_ablation(p, Schedule::kRandom, {10, {}, 8}), p);
  EXPECT_FALSE(report.intentional_break.has_value());
  for (const auto& b : report.boundaries) {
    EXPECT_FALSE(b.separated);
    EXPECT_EQ(b.ppl, Verdict::kViolated);
    EXPECT_EQ(b.pd, Verdict::kViolated);
  }
  EXPECT_EQ(report.violations, 6u);
  EXPECT_LT(*report.halves.ppl_high_to_low_precedence, kStageSeparation);
}

TEST(VerifyConstraints, SingleQuadrantIsVacuous) {
  std::vector<LabeledSample> labeled;
  for (int i = 0; i < 9; ++i) labeled.push_back({"x" + std::to_string(i), Quadrant::kQ2, 1});
  QuadrantPartition p(Thresholds{}, labeled);
  std::vector<StagedId> ids;
  for (const auto& l : labeled) ids.push_back({l.id, StageLabel::kQ2});
  auto m = make_manifest(ids, Schedule::kFrame, {4, {}, 0});
  auto report = verify_stage_constraints(m, p);
  EXPECT_TRUE(report.boundaries.empty());
  EXPECT_TRUE(report.all_satisfied());
}

TEST(VerifyConstraints, TwoStagePplHalvesOrdered) {
  QuadrantPartition p = equal_quadrants(50, false);
  TwoWaySplit split;
  split.metric = SplitMetric::kPpl;
  for (const auto& a : p.assignments()) {
    bool high = a.quadrant == Quadrant::kQ3 || a.quadrant == Quadrant::kQ4;
    (high ? split.high : split.low).push_back(a.id);
  }
  auto m = build_ablation(split, Schedule::kTwoStagePplH2L, {10, {}, 2});
  auto report = verify_stage_constraints(m, p);
  ASSERT_TRUE(report.halves.ppl_high_to_low_precedence.has_value());
  EXPECT_GE(*report.halves.ppl_high_to_low_precedence, kStageSeparation);
}

TEST(VerifyConstraints, IdUniverseMismatch) {
  QuadrantPartition p = equal_quadrants(2);
  auto m = build_frame(p, {2, {}, 0});
  QuadrantPartition bigger = equal_quadrants(3);
  EXPECT_EQ(code_of([&] { verify_stage_constraints(m, bigger); }), ErrorCode::kIdUniverseMismatch);
  m.batches[0].sample_ids[0] = "stranger";
  EXPECT_EQ(code_of([&] { verify_stage_constraints(m, p); }), ErrorCode::kIdUniverseMismatch);
}

}  // namespace
}  // namespace frame
