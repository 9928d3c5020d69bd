#include <gtest/gtest.h>

#include <random>

#include "frame/manifest.h"
#include "frame/prng.h"
#include "test_util.h"

namespace frame {
namespace {

using testing::code_of;

OrderedManifest eight_sample_manifest() {
  OrderedManifest m;
  m.batch_size = 3;
  m.schedule = Schedule::kFrame;
  m.seed = 0xFFFFFFFFFFFFFFFFull;
  m.batches = {
      {0, {"a", "b", "c"}, {{StageLabel::kQ3, 3}}},
      {1, {"d", "e", "f"}, {{StageLabel::kQ3, 1}, {StageLabel::kQ4, 2}}},
      {2, {"g", "h"}, {{StageLabel::kQ1, 1}, {StageLabel::kQ2, 1}}},
  };
  return m;
}

TEST(Manifest, EmptyManifestIsHeaderOnly) {
  OrderedManifest m;
  m.batch_size = 4;
  m.schedule = Schedule::kRandom;
  m.seed = 9;
  std::string text = serialize_manifest(m);
  EXPECT_EQ(text, "{\"batch_size\":4,\"schedule\":\"random\",\"seed\":9,\"version\":1}\n");
  EXPECT_EQ(parse_manifest(text), m);
}

TEST(Manifest, EightSampleRoundTrip) {
  OrderedManifest m = eight_sample_manifest();
  auto path = testing::scratch_dir("m") / "manifest.jsonl";
  write_manifest(m, path);
  OrderedManifest back = read_manifest(path);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize_manifest(back), serialize_manifest(m));
  EXPECT_EQ(back.sample_count(), 8u);
  EXPECT_EQ(back.flattened_ids().front(), "a");
}

TEST(Manifest, UnknownStageLabelIsInvalid) {
  std::string text =
      "{\"batch_size\":1,\"schedule\":\"frame\",\"seed\":0,\"version\":1}\n"
      "{\"batch_index\":0,\"sample_ids\":[\"a\"],\"source_counts\":{\"Q9\":1}}\n";
  EXPECT_EQ(code_of([&] { parse_manifest(text); }), ErrorCode::kInvalidManifest);
}

TEST(Manifest, UnknownScheduleIsInvalid) {
  std::string text = "{\"batch_size\":1,\"schedule\":\"sideways\",\"seed\":0,\"version\":1}\n";
  EXPECT_EQ(code_of([&] { parse_manifest(text); }), ErrorCode::kInvalidManifest);
}

TEST(Manifest, ValidationCatchesBrokenInvariants) {
  auto broken = [](auto mutate) {
    OrderedManifest m = eight_sample_manifest();
    mutate(m);
    return code_of([&] { validate_manifest(m); });
  };
  EXPECT_EQ(broken([](OrderedManifest& m) { m.batches[1].sample_ids[0] = "a"; }),
            ErrorCode::kInvalidManifest);
  EXPECT_EQ(broken([](OrderedManifest& m) { m.batches[2].batch_index = 5; }),
            ErrorCode::kInvalidManifest);
  EXPECT_EQ(broken([](OrderedManifest& m) { m.batches[0].source_counts[StageLabel::kQ3] = 2; }),
            ErrorCode::kInvalidManifest);
  EXPECT_EQ(broken([](OrderedManifest& m) { m.batches[0].sample_ids.pop_back(); m.batches[0].source_counts[StageLabel::kQ3] = 2; }),
            ErrorCode::kInvalidManifest);
  EXPECT_EQ(broken([](OrderedManifest& m) { m.batches[2].sample_ids.push_back("x"); m.batches[2].sample_ids.push_back("y"); m.batches[2].source_counts[StageLabel::kQ2] = 3; }),
            ErrorCode::kInvalidManifest);
  // Writing refuses invalid manifests too.
  OrderedManifest dup = eight_sample_manifest();
  dup.batches[2].sample_ids[1] = "a";
  EXPECT_EQ(code_of([&] { serialize_manifest(dup); }), ErrorCode::kInvalidManifest);
}

TEST(ManifestProperty, RandomManifestsRoundTrip) {
  std::mt19937_64 rng(31);
  const StageLabel labels[] = {StageLabel::kQ1, StageLabel::kQ2, StageLabel::kQ3, StageLabel::kQ4,
                               StageLabel::kPplLow, StageLabel::kPdHigh};
  for (int trial = 0; trial < 100; ++trial) {
    OrderedManifest m;
    m.batch_size = 1 + rng() % 7;
    m.schedule = static_cast<Schedule>(rng() % 7);
    m.seed = rng();
    std::size_t n = rng() % 60;
    for (std::size_t i = 0; i < n; i += m.batch_size) {
      Batch b;
      b.batch_index = m.batches.size();
      for (std::size_t k = i; k < std::min<std::size_t>(n, i + m.batch_size); ++k) {
        b.sample_ids.push_back("s" + std::to_string(k));
        ++b.source_counts[labels[rng() % 6]];
      }
      m.batches.push_back(b);
    }
    EXPECT_EQ(parse_manifest(serialize_manifest(m)), m);
  }
}

TEST(Prng, SplitMixKnownAnswer) {
  // Reference output of SplitMix64 seeded with 0.
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ull);
}

TEST(Prng, UniformBelowStaysInRangeAndCoversIt) {
  SplitMix64 rng(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto v = rng.uniform_below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Prng, ShuffleIsSeededPermutation) {
  std::vector<int> base(100);
  for (int i = 0; i < 100; ++i) base[i] = i;
  auto run = [&](std::uint64_t seed) {
    std::vector<int> v = base;
    SplitMix64 rng(seed);
    shuffle(std::span<int>(v), rng);
    return v;
  };
  EXPECT_EQ(run(1), run(1));
  EXPECT_NE(run(1), run(2));
  auto sorted = run(3);
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, base);
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
}

}  // namespace
}  // namespace frame
