#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "frame/analysis.h"
#include "frame/cli.h"
#include "frame/error.h"
#include "frame/partition.h"
#include "frame/scheduler.h"
#include "frame/scorer.h"
#include "frame/spectral.h"

namespace frame::cli {
namespace {

namespace fs = std::filesystem;

// Flag values; an empty optional means "not given on the command line".
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> corpus;
  std::optional<std::string> corpus_format;
  std::optional<std::string> tokenizer;
  std::optional<std::string> score_source;
  std::optional<std::string> external_scores;
  std::optional<int> weak_order;
  std::optional<int> strong_order;
  std::optional<double> smoothing_k;
  std::optional<std::uint64_t> batch_size;
  std::optional<double> steepness;
  std::optional<std::string> schedule;
  std::optional<std::uint64_t> seed;
  std::optional<double> cutoff_fraction;
  std::optional<std::size_t> bins;
  std::vector<std::string> loss_curves;
  std::optional<std::string> output_dir;
  std::optional<unsigned> threads;

  // Inputs that default to artifacts under output_dir.
  std::optional<std::string> scores;
  std::optional<std::string> manifest;
  std::optional<std::string> partition;
};

void add_common_options(CLI::App& cmd, Flags& f) {
  cmd.add_option("-c,--config", f.config, "TOML-style config file");
  cmd.add_option("--corpus", f.corpus, "Corpus file (JSON Lines or TSV)");
  cmd.add_option("--corpus-format", f.corpus_format, "jsonl | tsv (default: by extension)");
  cmd.add_option("--tokenizer", f.tokenizer, "whitespace | bytes");
  cmd.add_option("--score-source", f.score_source, "builtin | external");
  cmd.add_option("--external-scores", f.external_scores, "Score file used when score-source=external");
  cmd.add_option("--weak-order", f.weak_order, "Order of the weak n-gram reference model");
  cmd.add_option("--strong-order", f.strong_order, "Order of the strong n-gram reference model");
  cmd.add_option("--smoothing-k", f.smoothing_k, "Add-k smoothing constant");
  cmd.add_option("--batch-size", f.batch_size, "Samples per batch (N)");
  cmd.add_option("--steepness", f.steepness, "S-curve steepness (a)");
  cmd.add_option("--schedule", f.schedule, "frame | q3_q1_q4_q2 | two_stage_* | random");
  cmd.add_option("--seed", f.seed, "Seed for all shuffles (overrides FRAME_SEED)");
  cmd.add_option("--cutoff-fraction", f.cutoff_fraction, "Spectral cutoff as a fraction of Nyquist");
  cmd.add_option("--bins", f.bins, "Histogram bins for distribution reports");
  cmd.add_option("-o,--output-dir", f.output_dir, "Directory for all artifacts");
  cmd.add_option("--threads", f.threads, "Worker cap for scoring (0 = all cores)");
}

template <typename T, typename Parse>
void override_enum(const std::optional<std::string>& flag, T& field, Parse parse,
                   std::string_view what) {
  if (!flag) return;
  auto v = parse(*flag);
  if (!v) throw Error(ErrorCode::kConfig, "unknown " + std::string(what) + " '" + *flag + "'");
  field = *v;
}

template <typename T>
void override_value(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

PipelineConfig resolve_config(const Flags& f, const Environment& env) {
  PipelineConfig c;
  if (f.config) apply_config_file(c, *f.config);
  if (env.frame_seed) {
    const std::string& s = *env.frame_seed;
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorCode::kConfig, "FRAME_SEED='" + s + "' is not an unsigned 64-bit integer");
    }
    c.seed = seed;
  }
  if (f.corpus) c.corpus_path = *f.corpus;
  override_enum(f.corpus_format, c.corpus_format, parse_corpus_format, "corpus format");
  override_enum(f.tokenizer, c.tokenizer, parse_tokenizer, "tokenizer");
  override_enum(f.score_source, c.score_source, parse_score_source, "score source");
  if (f.external_scores) c.external_scores = *f.external_scores;
  override_value(f.weak_order, c.weak_order);
  override_value(f.strong_order, c.strong_order);
  override_value(f.smoothing_k, c.smoothing_k);
  override_value(f.batch_size, c.batch_size);
  override_value(f.steepness, c.steepness);
  override_enum(f.schedule, c.schedule, parse_schedule, "schedule");
  override_value(f.seed, c.seed);
  override_value(f.cutoff_fraction, c.cutoff_fraction);
  override_value(f.bins, c.bins);
  if (!f.loss_curves.empty()) c.loss_curves.assign(f.loss_curves.begin(), f.loss_curves.end());
  if (f.output_dir) c.output_dir = *f.output_dir;
  override_value(f.threads, c.threads);
  validate_config(c);
  return c;
}

unsigned worker_count(const PipelineConfig& c) {
  if (c.threads > 0) return c.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path scores_input(const PipelineConfig& c, const Flags& f) {
  return f.scores ? fs::path(*f.scores) : c.scores_path();
}

std::vector<ScoredSample> load_scored(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kIo, "score file not found: " + path.string() + " (run 'frame score' first)");
  }
  auto records = read_score_file(path);
  return scored_from_records(records);
}

struct Context {
  std::ostream& out;
  std::ostream& err;
};

void cmd_score(const PipelineConfig& c, Context ctx) {
  if (c.corpus_path.empty()) throw Error(ErrorCode::kConfig, "no corpus given (set 'corpus' or --corpus)");
  const bool builtin = c.score_source == ScoreSource::kBuiltin;
  if (!builtin && c.external_scores.empty()) {
    throw Error(ErrorCode::kConfig, "score_source=external needs 'external_scores'");
  }
  LoadOptions load;
  load.format = c.effective_corpus_format();
  load.tokenizer = c.tokenizer;
  load.retain_text = builtin;
  Corpus corpus = load_corpus(c.corpus_path, load);
  ctx.err << "frame: loaded " << corpus.size() << " samples (" << corpus.total_tokens()
          << " tokens) from " << c.corpus_path.string() << "\n";

  std::vector<ScoredSample> scored;
  if (builtin) {
    if (!corpus.has_text()) {
      throw Error(ErrorCode::kConfig, "the builtin scorer needs sample text, but " +
                                          c.corpus_path.string() +
                                          " has samples without text; use score_source=external");
    }
    NgramOptions weak_opts{c.weak_order, c.smoothing_k, c.tokenizer, 0};
    NgramOptions strong_opts{c.strong_order, c.smoothing_k, c.tokenizer, 0};
    NgramModel weak = train_ngram(corpus, weak_opts);
    NgramModel strong = train_ngram(corpus, strong_opts);
    ctx.err << "frame: trained " << c.weak_order << "-gram and " << c.strong_order
            << "-gram reference models (V=" << strong.vocab_size() << ")\n";
    scored = score_corpus(corpus, weak, strong, worker_count(c));
  } else {
    auto records = read_score_file(c.external_scores);
    AttachResult attached = attach_external_scores(corpus, records, false);
    if (!attached.unknown_ids.empty()) {
      ctx.err << "frame: ignoring " << attached.unknown_ids.size()
              << " score record(s) whose id is not in the corpus:";
      const std::size_t shown = std::min<std::size_t>(attached.unknown_ids.size(), 5);
      for (std::size_t i = 0; i < shown; ++i) ctx.err << " " << attached.unknown_ids[i];
      if (shown < attached.unknown_ids.size()) ctx.err << " ...";
      ctx.err << "\n";
    }
    scored = std::move(attached.samples);
  }
  write_score_file(scored, c.scores_path());
  ctx.err << "frame: wrote " << scored.size() << " scores to " << c.scores_path().string() << "\n";
}

QuadrantPartition cmd_partition(const PipelineConfig& c, const Flags& f, Context ctx,
                                bool print_summary) {
  auto scored = load_scored(scores_input(c, f));
  QuadrantPartition partition = partition_quadrants(scored);
  write_partition_report(partition, c.partition_path());
  ctx.err << "frame: wrote partition report to " << c.partition_path().string() << "\n";
  if (print_summary) {
    std::string report = serialize_partition_report(partition);
    ctx.out << report.substr(0, report.find('\n') + 1);
  }
  return partition;
}

bool is_two_stage(Schedule s) {
  return s == Schedule::kTwoStagePplH2L || s == Schedule::kTwoStagePplL2H ||
         s == Schedule::kTwoStagePdL2H || s == Schedule::kTwoStagePdH2L;
}

void cmd_order(const PipelineConfig& c, const Flags& f, Context ctx) {
  auto scored = load_scored(scores_input(c, f));
  QuadrantPartition partition = partition_quadrants(scored);
  write_partition_report(partition, c.partition_path());

  OrderOptions options{c.batch_size, SShapeParams{c.steepness}, c.seed};
  OrderedManifest manifest;
  if (is_two_stage(c.schedule)) {
    const bool by_ppl =
        c.schedule == Schedule::kTwoStagePplH2L || c.schedule == Schedule::kTwoStagePplL2H;
    TwoWaySplit split = two_way_partition(scored, by_ppl ? SplitMetric::kPpl : SplitMetric::kPd);
    manifest = build_ablation(split, c.schedule, options);
  } else {
    manifest = build_ablation(partition, c.schedule, options);
  }
  write_manifest(manifest, c.manifest_path());
  ctx.err << "frame: wrote " << manifest.batches.size() << " batches (" << schedule_name(c.schedule)
          << ") to " << c.manifest_path().string() << "\n";

  ConstraintReport report = verify_stage_constraints(manifest, partition);
  ctx.out << serialize_constraint_report(report) << "\n";
}

void cmd_analyze(const PipelineConfig& c, const Flags& f, Context ctx) {
  const fs::path scores = scores_input(c, f);
  const bool have_scores = fs::exists(scores);
  if (!have_scores && c.loss_curves.empty()) {
    throw Error(ErrorCode::kIo, "nothing to analyze: score file not found: " + scores.string() +
                                    " and no loss curves given");
  }
  // Load every curve before writing anything so a bad path leaves no partial output.
  std::vector<LossCurve> curves;
  for (const auto& path : c.loss_curves) curves.push_back(load_loss_curve(path));

  if (have_scores) {
    auto scored = load_scored(scores);
    QuadrantPartition partition = partition_quadrants(scored);
    std::string text;
    for (SplitMetric metric : {SplitMetric::kPpl, SplitMetric::kPd}) {
      auto by_domain = distribution_by_domain(scored, metric, c.bins);
      text += serialize_distribution_reports(by_domain, "domain");
    }
    for (SplitMetric metric : {SplitMetric::kPpl, SplitMetric::kPd}) {
      auto by_quadrant = distribution_by_quadrant(scored, partition, metric, c.bins);
      text += serialize_distribution_reports(by_quadrant, "quadrant");
    }
    write_file(c.distributions_path(), text);
    ctx.err << "frame: wrote distribution reports to " << c.distributions_path().string() << "\n";
  } else {
    ctx.err << "frame: no score file at " << scores.string() << "; skipping distribution reports\n";
  }

  if (!curves.empty()) {
    auto ranking = compare_smoothness(curves, c.cutoff_fraction);
    write_file(c.spectral_path(), serialize_spectral_reports(ranking));
    const std::string table = smoothness_table_csv(ranking);
    write_file(c.smoothness_path(), table);
    ctx.err << "frame: wrote spectral reports for " << curves.size() << " curve(s) to "
            << c.spectral_path().string() << "\n";
    ctx.out << table;
  }
}

int cmd_verify(const PipelineConfig& c, const Flags& f, Context ctx) {
  const fs::path manifest_path = f.manifest ? fs::path(*f.manifest) : c.manifest_path();
  const fs::path partition_path = f.partition ? fs::path(*f.partition) : c.partition_path();
  for (const auto& p : {manifest_path, partition_path}) {
    if (!fs::exists(p)) throw Error(ErrorCode::kIo, "file not found: " + p.string());
  }
  OrderedManifest manifest = read_manifest(manifest_path);
  QuadrantPartition partition = read_partition_report(partition_path);
  ConstraintReport report = verify_stage_constraints(manifest, partition);
  ctx.out << serialize_constraint_report(report) << "\n";
  if (!report.all_satisfied()) {
    ctx.err << "frame: " << report.violations << " stage constraint violation(s)\n";
    return kExitVerifyFailed;
  }
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return kExitUsage;
    default:
      return kExitInput;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Environment& env) {
  CLI::App app{"Corpus ordering toolkit: scoring, quadrant partitioning, batch scheduling, analysis",
               "frame"};
  app.require_subcommand(1);
  Flags flags;

  auto* score = app.add_subcommand("score", "Score every sample with weak and strong reference models");
  auto* partition = app.add_subcommand("partition", "Split scored samples into token-balanced quadrants");
  auto* order = app.add_subcommand("order", "Partition and emit the batch-ordered manifest");
  auto* analyze = app.add_subcommand("analyze", "Distribution and loss-curve smoothness reports");
  auto* pipeline = app.add_subcommand("pipeline", "score, order and analyze in one run");
  auto* verify = app.add_subcommand("verify", "Check a manifest against the stage constraints");
  for (auto* cmd : {score, partition, order, analyze, pipeline, verify}) {
    add_common_options(*cmd, flags);
  }
  for (auto* cmd : {partition, order, analyze}) {
    cmd->add_option("--scores", flags.scores, "Score file (default: <output-dir>/scores.jsonl)");
  }
  for (auto* cmd : {analyze, pipeline}) {
    cmd->add_option("--loss-curve", flags.loss_curves, "Loss curve file (CSV or JSON Lines); repeatable");
  }
  verify->add_option("--manifest", flags.manifest, "Manifest (default: <output-dir>/manifest.jsonl)");
  verify->add_option("--partition", flags.partition,
                     "Partition report (default: <output-dir>/partition.jsonl)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "frame: " << e.what() << "\n";
    return kExitUsage;
  }

  Context ctx{out, err};
  try {
    PipelineConfig config = resolve_config(flags, env);
    if (score->parsed()) {
      cmd_score(config, ctx);
    } else if (partition->parsed()) {
      cmd_partition(config, flags, ctx, true);
    } else if (order->parsed()) {
      cmd_order(config, flags, ctx);
    } else if (analyze->parsed()) {
      cmd_analyze(config, flags, ctx);
    } else if (pipeline->parsed()) {
      cmd_score(config, ctx);
      cmd_order(config, flags, ctx);
      cmd_analyze(config, flags, ctx);
    } else if (verify->parsed()) {
      return cmd_verify(config, flags, ctx);
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "frame: error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "frame: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace frame::cli
