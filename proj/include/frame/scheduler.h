#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frame/manifest.h"
#include "frame/partition.h"
#include "frame/prng.h"

namespace frame {

struct SShapeParams {
  double steepness = 35.0;  // a
};

// Share of a batch drawn from the first source at completion ratio p:
//   f(p) = 1 / (1 + exp(a * (p - 0.5))).
// Throws Error(kDomain) for p outside [0, 1] or a <= 0.
double s_shape(double p, const SShapeParams& params = {});

// Per-batch draw counts for merging two sources of sizes n1 and n2.
//
// Batch i (1-based, p = i/m) ideally draws f(p) * N_i samples from the first
// source. The cumulative ideal C_i = sum_{j<=i} f(j/m) * N_j generally ends
// at C_m != n1, because p starts at 1/m. That surplus s = n1 - C_m (or
// deficit, if negative) is fed back along the S-curve itself:
//   T_i = C_i + s * g_i,  g_i = (f(0) - f(i/m)) / (f(0) - f(1)),
// and each batch takes round(T_i) minus what was already taken (error
// diffusion), clamped so neither source is overdrawn. The transition
// therefore absorbs the surplus instead of leaving stragglers for the last
// batch, and both sources are consumed exactly.
struct MergePlan {
  std::uint64_t n1 = 0;
  std::uint64_t n2 = 0;
  std::uint64_t batch_size = 1;
  SShapeParams params;
  bool random_sample = false;
  std::uint64_t seed = 0;

  // One entry per batch.
  std::vector<std::uint64_t> d1_takes;
  std::vector<std::uint64_t> batch_sizes;
  // Cumulative ideal first-source draws C_i.
  std::vector<double> ideal_cumulative;
  // First batch (0-based) whose take differs from plain error diffusion of
  // C_i, i.e. where surplus absorption or source exhaustion substitutes
  // samples. Absent when the plan is pure error diffusion throughout.
  std::optional<std::size_t> substitution_start;
  // First batch where a source bound (exhaustion) clamped the take.
  std::optional<std::size_t> clamp_start;

  std::size_t total_steps() const { return d1_takes.size(); }
};

// Throws Error(kSizeMismatch) when n1 + n2 == 0 or batch_size == 0.
MergePlan plan_merge(std::uint64_t n1, std::uint64_t n2, std::uint64_t batch_size,
                     const SShapeParams& params = {});

struct StagedId {
  std::string id;
  StageLabel stage = StageLabel::kQ1;

  friend bool operator==(const StagedId&, const StagedId&) = default;
};

// Interleaves d1 and d2 per the plan. With plan.random_sample each source
// is first shuffled with SplitMix64(plan.seed), d1 before d2; otherwise both
// are consumed in the given order. Within a batch, first-source samples
// precede second-source ones. Throws Error(kSizeMismatch) when the sizes
// disagree with the plan.
std::vector<StagedId> merge_datasets(std::vector<StagedId> d1, std::vector<StagedId> d2,
                                     const MergePlan& plan);

struct OrderOptions {
  std::uint64_t batch_size = 1;
  SShapeParams params;
  std::uint64_t seed = 0;
};

// Stream ids for derive_seed(): one per shuffling merge.
inline constexpr std::uint64_t kFirstPairStream = 1;
inline constexpr std::uint64_t kSecondPairStream = 2;
inline constexpr std::uint64_t kRandomStream = 3;

// S34 = merge(Q3, Q4, shuffled), S12 = merge(Q1, Q2, shuffled),
// result = merge(S34, S12, in order). Throws Error(kEmptyQuadrant).
OrderedManifest build_frame(const QuadrantPartition& partition, const OrderOptions& options);

// kQ3Q1Q4Q2 (S31 = merge(Q3, Q1), S42 = merge(Q4, Q2), merge(S31, S42)) and
// kRandom (seeded shuffle of everything, stages labeled by quadrant).
// kFrame is forwarded to build_frame. Two-stage schedules need a
// TwoWaySplit and raise Error(kMissingSplit) here.
OrderedManifest build_ablation(const QuadrantPartition& partition, Schedule schedule,
                               const OrderOptions& options);

// Two-stage schedules: one shuffled merge of the two halves in the order
// the schedule names. kRandom shuffles everything. Other schedules raise
// Error(kMissingSplit), as does a split on the wrong metric.
OrderedManifest build_ablation(const TwoWaySplit& split, Schedule schedule,
                               const OrderOptions& options);

// Groups a merged sequence into consecutive batches of batch_size.
OrderedManifest make_manifest(std::span<const StagedId> ordered, Schedule schedule,
                              const OrderOptions& options);

enum class Verdict { kSatisfied, kViolated };

struct StageBoundary {
  Quadrant from = Quadrant::kQ1;
  Quadrant to = Quadrant::kQ1;
  // P(batch(x) < batch(y)) + P(batch(x) == batch(y)) / 2 for x in `from`, y in `to`.
  double precedence = 0.0;
  bool separated = false;
  Verdict ppl = Verdict::kViolated;  // PPL never increases into the next stage
  Verdict pd = Verdict::kViolated;   // PD never decreases into the next stage
  bool intentional_break = false;
};

struct HalfOrdering {
  // High-PPL quadrants (Q3, Q4) ahead of low-PPL ones (Q1, Q2).
  std::optional<double> ppl_high_to_low_precedence;
  // Low-PD quadrants (Q1, Q3) ahead of high-PD ones (Q2, Q4).
  std::optional<double> pd_low_to_high_precedence;
};

struct ConstraintReport {
  // Quadrants present in the manifest, ordered by mean batch index.
  std::vector<Quadrant> stages;
  std::vector<double> mean_batch_index;
  std::vector<StageBoundary> boundaries;
  HalfOrdering halves;
  std::size_t violations = 0;             // excluding the intentional break
  std::optional<std::size_t> intentional_break;  // boundary index

  bool all_satisfied() const { return violations == 0; }
};

// Precedence at or above this marks two stages as genuinely sequential.
inline constexpr double kStageSeparation = 0.9;

// Checks the PPL and PD stage-ordering constraints at quadrant level. A
// boundary satisfies a constraint only when the two stages are separated
// in time and their quadrant bands respect the ordering. For the four-stage
// schedules, a single violated constraint at the second-to-third boundary is
// the designed break and is flagged rather than counted. Throws
// Error(kIdUniverseMismatch) unless manifest and partition cover the same
// ids.
ConstraintReport verify_stage_constraints(const OrderedManifest& manifest,
                                          const QuadrantPartition& partition);

std::string serialize_constraint_report(const ConstraintReport& report);

}  // namespace frame
