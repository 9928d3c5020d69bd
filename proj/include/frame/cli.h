#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "frame/corpus.h"
#include "frame/manifest.h"

namespace frame::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitUsage = 2,
  kExitInput = 3,
  kExitInternal = 4,
};

enum class ScoreSource { kBuiltin, kExternal };

std::optional<ScoreSource> parse_score_source(std::string_view name);
std::string_view score_source_name(ScoreSource source);

struct PipelineConfig {
  std::filesystem::path corpus_path;
  // Unset: TSV for a .tsv extension, JSON Lines otherwise.
  std::optional<CorpusFormat> corpus_format;
  Tokenizer tokenizer = Tokenizer::kWhitespace;

  ScoreSource score_source = ScoreSource::kBuiltin;
  std::filesystem::path external_scores;
  int weak_order = 1;
  int strong_order = 3;
  double smoothing_k = 0.1;

  std::uint64_t batch_size = 16;
  double steepness = 35.0;
  Schedule schedule = Schedule::kFrame;
  std::uint64_t seed = 0;

  double cutoff_fraction = 0.1;
  std::size_t bins = 20;
  std::vector<std::filesystem::path> loss_curves;

  std::filesystem::path output_dir = "frame_out";
  // 0 uses every hardware thread.
  unsigned threads = 0;

  CorpusFormat effective_corpus_format() const;

  // Artifact locations under output_dir.
  std::filesystem::path scores_path() const { return output_dir / "scores.jsonl"; }
  std::filesystem::path partition_path() const { return output_dir / "partition.jsonl"; }
  std::filesystem::path manifest_path() const { return output_dir / "manifest.jsonl"; }
  std::filesystem::path distributions_path() const { return output_dir / "distributions.jsonl"; }
  std::filesystem::path spectral_path() const { return output_dir / "spectral.jsonl"; }
  std::filesystem::path smoothness_path() const { return output_dir / "smoothness.csv"; }
};

// Applies `key = value` lines from a TOML-style file onto `config`.
// Relative paths are resolved against the file's directory. Unknown keys
// and out-of-range values raise Error(kConfig).
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);
void apply_config_text(PipelineConfig& config, std::string_view text,
                       const std::filesystem::path& base_dir);

// Range and consistency checks shared by every command.
void validate_config(const PipelineConfig& config);

struct Environment {
  // Value of FRAME_SEED, if set.
  std::optional<std::string> frame_seed;

  static Environment from_process();
};

// Parses argv-style arguments (without the program name) and runs one
// subcommand. Artifacts go to files, machine-readable summaries to `out`,
// progress and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Environment& env);

}  // namespace frame::cli
