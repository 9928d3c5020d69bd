#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "frame/corpus.h"

namespace frame {

// Add-k smoothed n-gram language model over whole tokens. Contexts at the
// start of a document are padded with a begin-of-sequence marker that is
// not part of the vocabulary. Immutable after construction.
class NgramModel {
 public:
  using TokenId = std::uint32_t;

  int order() const { return order_; }
  std::size_t vocab_size() const { return vocab_size_; }
  double smoothing_k() const { return smoothing_k_; }
  Tokenizer tokenizer() const { return tokenizer_; }

  // P(next | context) with add-k smoothing:
  //   (count(context, next) + k) / (count(context) + k * V).
  // Only the last order-1 context tokens are used; missing history is padded.
  // Out-of-vocabulary tokens receive the unseen-event mass.
  double probability(std::span<const std::string_view> context, std::string_view next) const;

  // Sum of natural-log probabilities of every token of `text`.
  double log_likelihood(std::string_view text, std::uint64_t* token_count = nullptr) const;

  // Uniform model: every token has probability 1/V.
  static NgramModel uniform(std::size_t vocab_size, Tokenizer tokenizer = Tokenizer::kWhitespace);

  // Builds a model from explicit n-gram counts. Each entry is
  // (context..., next) of length `order`; the context may use "<s>" for
  // padding. vocab_size may exceed the tokens listed.
  static NgramModel from_counts(
      int order, std::size_t vocab_size, double smoothing_k,
      const std::vector<std::pair<std::vector<std::string>, std::uint64_t>>& ngram_counts,
      Tokenizer tokenizer = Tokenizer::kWhitespace);

  friend struct NgramTrainer;

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> next;
  };

  static constexpr TokenId kBos = 0xFFFFFFFFu;
  static constexpr TokenId kUnknown = 0xFFFFFFFEu;

  NgramModel(int order, double smoothing_k, Tokenizer tokenizer)
      : order_(order), smoothing_k_(smoothing_k), tokenizer_(tokenizer) {}

  TokenId lookup(std::string_view token) const;
  TokenId intern(std::string_view token);
  double probability_ids(std::span<const TokenId> history, TokenId next) const;
  static std::string context_key(std::span<const TokenId> history);

  int order_ = 1;
  std::size_t vocab_size_ = 0;
  double smoothing_k_ = 1.0;
  Tokenizer tokenizer_ = Tokenizer::kWhitespace;
  std::unordered_map<std::string, TokenId> vocab_;
  std::unordered_map<std::string, ContextCounts> contexts_;
};

struct NgramOptions {
  int order = 1;
  double smoothing_k = 0.1;
  Tokenizer tokenizer = Tokenizer::kWhitespace;
  // 0 infers V from the distinct training tokens.
  std::size_t vocab_size = 0;
};

// Throws Error(kMissingText) when any sample lacks text.
NgramModel train_ngram(const Corpus& corpus, const NgramOptions& options);

// exp(-(1/T) * sum log p(token_t | context)), accumulated in the log domain.
double perplexity(const NgramModel& model, const SampleRecord& sample);

// (ppl_weak - ppl_strong) / ppl_weak. Throws Error(kNonPositivePerplexity).
double compute_pd(double ppl_weak, double ppl_strong);

struct ScoredSample {
  std::string id;
  std::uint64_t token_count = 0;
  double ppl_strong = 0.0;
  double ppl_weak = 0.0;
  double pd = 0.0;
  std::optional<std::string> domain;

  friend bool operator==(const ScoredSample&, const ScoredSample&) = default;
};

// One ScoredSample per corpus sample, in corpus order. Scoring is split over
// `threads` workers; results do not depend on the thread count.
std::vector<ScoredSample> score_corpus(const Corpus& corpus, const NgramModel& weak,
                                       const NgramModel& strong, unsigned threads = 1);

// Score-file record. A pd field in the input is ignored.
struct ScoreRecord {
  std::string id;
  double ppl_strong = 0.0;
  double ppl_weak = 0.0;
  std::optional<std::uint64_t> token_count;
  std::optional<std::string> domain;
};

std::vector<ScoreRecord> parse_score_file(std::string_view content,
                                          std::string_view source_name = "<memory>");
std::vector<ScoreRecord> read_score_file(const std::filesystem::path& path);

struct AttachResult {
  std::vector<ScoredSample> samples;
  // Score ids absent from the corpus; empty unless strict mode is off.
  std::vector<std::string> unknown_ids;
};

// Joins scores onto the corpus by id and recomputes pd. Missing ids raise
// Error(kMissingScore); extra ids raise Error(kUnknownId) under `strict`
// and are otherwise reported in unknown_ids.
AttachResult attach_external_scores(const Corpus& corpus, std::span<const ScoreRecord> scores,
                                    bool strict = false);

// Builds ScoredSamples straight from score records that carry token_count.
std::vector<ScoredSample> scored_from_records(std::span<const ScoreRecord> scores);

// {"id","pd","ppl_strong","ppl_weak","token_count"} per line.
std::string serialize_scores(std::span<const ScoredSample> scored);
void write_score_file(std::span<const ScoredSample> scored, const std::filesystem::path& path);

}  // namespace frame
