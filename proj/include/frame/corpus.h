#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace frame {

enum class Tokenizer {
  kWhitespace,  // runs of ASCII whitespace separate tokens
  kBytes,       // every byte is a token
};

std::optional<Tokenizer> parse_tokenizer(std::string_view name);
std::string_view tokenizer_name(Tokenizer tokenizer);

// Splits text into tokens. Views point into `text`.
std::vector<std::string_view> tokenize(std::string_view text,
                                       Tokenizer tokenizer = Tokenizer::kWhitespace);

// Throws Error(kEmptyText) when the text has no tokens.
std::uint64_t count_tokens(std::string_view text,
                           Tokenizer tokenizer = Tokenizer::kWhitespace);

struct SampleRecord {
  std::string id;
  std::uint64_t token_count = 0;
  std::optional<std::string> text;
  std::optional<std::string> domain;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Ordered collection of samples with unique ids and a cached token total.
class Corpus {
 public:
  Corpus() = default;

  // Validates ids and token counts; throws Error(kDuplicateId / kZeroTokenCount).
  explicit Corpus(std::vector<SampleRecord> samples);

  void add(SampleRecord sample);

  std::span<const SampleRecord> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::uint64_t total_tokens() const { return total_tokens_; }

  // True when every sample carries text.
  bool has_text() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.samples_ == b.samples_;
  }

 private:
  std::vector<SampleRecord> samples_;
  std::unordered_set<std::string> ids_;
  std::uint64_t total_tokens_ = 0;
};

enum class CorpusFormat { kJsonl, kTsv };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);

struct LoadOptions {
  CorpusFormat format = CorpusFormat::kJsonl;
  Tokenizer tokenizer = Tokenizer::kWhitespace;
  // When false, text is used only to derive token counts and then dropped,
  // so memory stays proportional to ids and counts.
  bool retain_text = true;
};

// Reads a corpus line by line. JSON Lines records look like
//   {"id": "a", "token_count": 3, "text": "...", "domain": "..."}
// where token_count may be omitted when text is present. TSV rows are
//   id <TAB> token_count [<TAB> domain [<TAB> text]]
// with \t, \n and \\ escapes in the text column. Blank lines are skipped.
Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options = {});
Corpus parse_corpus(std::string_view content, const LoadOptions& options = {},
                    std::string_view source_name = "<memory>");

// Canonical JSON Lines form (sorted keys, one record per line).
std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Shared helpers for the line-oriented formats.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace frame
