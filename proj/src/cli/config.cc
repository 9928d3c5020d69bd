#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "frame/cli.h"
#include "frame/corpus.h"
#include "frame/error.h"

namespace frame::cli {
namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfig, message);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    config_error("config key '" + std::string(key) + "': '" + std::string(text) +
                 "' is not a valid number");
  }
  return value;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

using Setter = std::function<void(PipelineConfig&, const std::vector<std::string>&,
                                  const std::filesystem::path&)>;

const std::string& single(std::string_view key, const std::vector<std::string>& inputs) {
  if (inputs.size() != 1) config_error("config key '" + std::string(key) + "' takes one value");
  return inputs.front();
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"corpus",
       [](PipelineConfig& c, const auto& in, const auto& base) {
         c.corpus_path = resolve(base, single("corpus", in));
       }},
      {"corpus_format",
       [](PipelineConfig& c, const auto& in, const auto&) {
         auto f = parse_corpus_format(single("corpus_format", in));
         if (!f) config_error("corpus_format must be 'jsonl' or 'tsv'");
         c.corpus_format = *f;
       }},
      {"tokenizer",
       [](PipelineConfig& c, const auto& in, const auto&) {
         auto t = parse_tokenizer(single("tokenizer", in));
         if (!t) config_error("tokenizer must be 'whitespace' or 'bytes'");
         c.tokenizer = *t;
       }},
      {"score_source",
       [](PipelineConfig& c, const auto& in, const auto&) {
         auto s = parse_score_source(single("score_source", in));
         if (!s) config_error("score_source must be 'builtin' or 'external'");
         c.score_source = *s;
       }},
      {"external_scores",
       [](PipelineConfig& c, const auto& in, const auto& base) {
         c.external_scores = resolve(base, single("external_scores", in));
       }},
      {"weak_order",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.weak_order = parse_number<int>("weak_order", single("weak_order", in));
       }},
      {"strong_order",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.strong_order = parse_number<int>("strong_order", single("strong_order", in));
       }},
      {"smoothing_k",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.smoothing_k = parse_number<double>("smoothing_k", single("smoothing_k", in));
       }},
      {"batch_size",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.batch_size = parse_number<std::uint64_t>("batch_size", single("batch_size", in));
       }},
      {"steepness",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.steepness = parse_number<double>("steepness", single("steepness", in));
       }},
      {"schedule",
       [](PipelineConfig& c, const auto& in, const auto&) {
         auto s = parse_schedule(single("schedule", in));
         if (!s) config_error("unknown schedule '" + single("schedule", in) + "'");
         c.schedule = *s;
       }},
      {"seed",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.seed = parse_number<std::uint64_t>("seed", single("seed", in));
       }},
      {"cutoff_fraction",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.cutoff_fraction = parse_number<double>("cutoff_fraction", single("cutoff_fraction", in));
       }},
      {"bins",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.bins = parse_number<std::size_t>("bins", single("bins", in));
       }},
      {"loss_curves",
       [](PipelineConfig& c, const auto& in, const auto& base) {
         c.loss_curves.clear();
         for (const auto& v : in) c.loss_curves.push_back(resolve(base, v));
       }},
      {"output_dir",
       [](PipelineConfig& c, const auto& in, const auto& base) {
         c.output_dir = resolve(base, single("output_dir", in));
       }},
      {"threads",
       [](PipelineConfig& c, const auto& in, const auto&) {
         c.threads = parse_number<unsigned>("threads", single("threads", in));
       }},
  };
  return table;
}

}  // namespace

std::optional<ScoreSource> parse_score_source(std::string_view name) {
  if (name == "builtin") return ScoreSource::kBuiltin;
  if (name == "external") return ScoreSource::kExternal;
  return std::nullopt;
}

std::string_view score_source_name(ScoreSource source) {
  return source == ScoreSource::kBuiltin ? "builtin" : "external";
}

CorpusFormat PipelineConfig::effective_corpus_format() const {
  if (corpus_format) return *corpus_format;
  return corpus_path.extension() == ".tsv" ? CorpusFormat::kTsv : CorpusFormat::kJsonl;
}

void apply_config_text(PipelineConfig& config, std::string_view text,
                       const std::filesystem::path& base_dir) {
  std::istringstream in{std::string(text)};
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    config_error(std::string("malformed config: ") + e.what());
  }
  for (const auto& item : items) {
    // Section open/close markers emitted by the TOML reader.
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    auto it = setters().find(key);
    if (it == setters().end()) config_error("unknown config key '" + key + "'");
    it->second(config, item.inputs, base_dir);
  }
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    config_error("config file not found: " + path.string());
  }
  apply_config_text(config, read_file(path), path.parent_path());
}

void validate_config(const PipelineConfig& c) {
  if (c.weak_order < 1 || c.strong_order < 1) config_error("n-gram orders must be at least 1");
  if (c.weak_order >= c.strong_order) {
    config_error("weak_order (" + std::to_string(c.weak_order) +
                 ") must be lower than strong_order (" + std::to_string(c.strong_order) + ")");
  }
  if (!(c.smoothing_k > 0.0) || !std::isfinite(c.smoothing_k)) {
    config_error("smoothing_k must be positive");
  }
  if (c.batch_size == 0) config_error("batch_size must be positive");
  if (!(c.steepness > 0.0) || !std::isfinite(c.steepness)) {
    config_error("steepness must be positive");
  }
  if (!(c.cutoff_fraction > 0.0 && c.cutoff_fraction < 1.0)) {
    config_error("cutoff_fraction must lie in (0, 1)");
  }
  if (c.bins == 0) config_error("bins must be positive");
  if (c.output_dir.empty()) config_error("output_dir must not be empty");
}

Environment Environment::from_process() {
  Environment env;
  if (const char* seed = std::getenv("FRAME_SEED")) env.frame_seed = seed;
  return env;
}

}  // namespace frame::cli
