#include "frame/corpus.h"

#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "frame/error.h"

namespace frame {
namespace {

using nlohmann::json;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string located(std::string_view source, std::size_t line, const std::string& what) {
  std::ostringstream out;
  out << source << ":" << line << ": " << what;
  return out.str();
}

std::string unescape_tsv(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] == '\\' && i + 1 < field.size()) {
      char next = field[i + 1];
      if (next == 't') { out.push_back('\t'); ++i; continue; }
      if (next == 'n') { out.push_back('\n'); ++i; continue; }
      if (next == '\\') { out.push_back('\\'); ++i; continue; }
    }
    out.push_back(field[i]);
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::uint64_t parse_count(std::string_view field, std::string_view source, std::size_t line) {
  if (field.empty()) throw Error(ErrorCode::kParse, located(source, line, "empty token_count"));
  std::uint64_t value = 0;
  for (char c : field) {
    if (c < '0' || c > '9') {
      throw Error(ErrorCode::kParse,
                  located(source, line, "token_count is not a non-negative integer: '" +
                                            std::string(field) + "'"));
    }
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return value;
}

// Resolves token_count against text. A missing count is derived; a present
// count must match the tokenizer.
std::uint64_t resolve_count(std::optional<std::uint64_t> declared,
                            const std::optional<std::string>& text, Tokenizer tokenizer,
                            std::string_view source, std::size_t line, const std::string& id) {
  if (!text) {
    if (!declared) {
      throw Error(ErrorCode::kParse,
                  located(source, line, "record '" + id + "' has neither token_count nor text"));
    }
    return *declared;
  }
  std::uint64_t counted = 0;
  try {
    counted = count_tokens(*text, tokenizer);
  } catch (const Error&) {
    throw Error(ErrorCode::kEmptyText,
                located(source, line, "record '" + id + "' has empty text"));
  }
  if (declared && *declared != counted) {
    throw Error(ErrorCode::kTokenCountMismatch,
                located(source, line,
                        "record '" + id + "' declares token_count " + std::to_string(*declared) +
                            " but text has " + std::to_string(counted) + " tokens"));
  }
  return counted;
}

SampleRecord parse_jsonl_record(std::string_view text_line, const LoadOptions& options,
                                std::string_view source, std::size_t line) {
  json j;
  try {
    j = json::parse(text_line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, located(source, line, std::string("invalid JSON: ") + e.what()));
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, located(source, line, "expected a JSON object"));

  SampleRecord record;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) {
    throw Error(ErrorCode::kParse, located(source, line, "missing string field 'id'"));
  }
  record.id = id->get<std::string>();

  std::optional<std::uint64_t> declared;
  if (auto tc = j.find("token_count"); tc != j.end() && !tc->is_null()) {
    if (tc->is_number_unsigned()) {
      declared = tc->get<std::uint64_t>();
    } else if (tc->is_number_integer() && tc->get<std::int64_t>() >= 0) {
      declared = static_cast<std::uint64_t>(tc->get<std::int64_t>());
    } else {
      throw Error(ErrorCode::kParse,
                  located(source, line, "token_count must be a non-negative integer"));
    }
  }
  if (auto t = j.find("text"); t != j.end() && !t->is_null()) {
    if (!t->is_string()) throw Error(ErrorCode::kParse, located(source, line, "text must be a string"));
    record.text = t->get<std::string>();
  }
  if (auto d = j.find("domain"); d != j.end() && !d->is_null()) {
    if (!d->is_string()) throw Error(ErrorCode::kParse, located(source, line, "domain must be a string"));
    record.domain = d->get<std::string>();
  }
  record.token_count =
      resolve_count(declared, record.text, options.tokenizer, source, line, record.id);
  return record;
}

SampleRecord parse_tsv_record(std::string_view text_line, const LoadOptions& options,
                              std::string_view source, std::size_t line) {
  auto fields = split_tabs(text_line);
  if (fields.size() < 2 || fields.size() > 4) {
    throw Error(ErrorCode::kParse,
                located(source, line, "expected 2 to 4 tab-separated fields, got " +
                                          std::to_string(fields.size())));
  }
  SampleRecord record;
  record.id = std::string(fields[0]);
  if (record.id.empty()) throw Error(ErrorCode::kParse, located(source, line, "empty id"));
  std::optional<std::uint64_t> declared;
  if (!fields[1].empty()) declared = parse_count(fields[1], source, line);
  if (fields.size() >= 3 && !fields[2].empty()) record.domain = std::string(fields[2]);
  if (fields.size() == 4) record.text = unescape_tsv(fields[3]);
  record.token_count =
      resolve_count(declared, record.text, options.tokenizer, source, line, record.id);
  return record;
}

void ingest_line(Corpus& corpus, std::string_view line, std::size_t line_no,
                 const LoadOptions& options, std::string_view source) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (trim(line).empty()) return;
  SampleRecord record = options.format == CorpusFormat::kJsonl
                            ? parse_jsonl_record(line, options, source, line_no)
                            : parse_tsv_record(line, options, source, line_no);
  if (!options.retain_text) record.text.reset();
  try {
    corpus.add(std::move(record));
  } catch (const Error& e) {
    throw Error(e.code(), located(source, line_no, e.what()));
  }
}

}  // namespace

std::optional<Tokenizer> parse_tokenizer(std::string_view name) {
  if (name == "whitespace") return Tokenizer::kWhitespace;
  if (name == "bytes") return Tokenizer::kBytes;
  return std::nullopt;
}

std::string_view tokenizer_name(Tokenizer tokenizer) {
  return tokenizer == Tokenizer::kBytes ? "bytes" : "whitespace";
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "tsv") return CorpusFormat::kTsv;
  return std::nullopt;
}

std::vector<std::string_view> tokenize(std::string_view text, Tokenizer tokenizer) {
  std::vector<std::string_view> tokens;
  if (tokenizer == Tokenizer::kBytes) {
    tokens.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) tokens.push_back(text.substr(i, 1));
    return tokens;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::uint64_t count_tokens(std::string_view text, Tokenizer tokenizer) {
  std::string_view trimmed = trim(text);
  if (trimmed.empty()) throw Error(ErrorCode::kEmptyText, "cannot count tokens of empty text");
  if (tokenizer == Tokenizer::kBytes) return text.size();
  std::uint64_t count = 0;
  bool in_token = false;
  for (char c : trimmed) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

Corpus::Corpus(std::vector<SampleRecord> samples) {
  samples_.reserve(samples.size());
  for (auto& s : samples) add(std::move(s));
}

void Corpus::add(SampleRecord sample) {
  if (sample.token_count == 0) {
    throw Error(ErrorCode::kZeroTokenCount, "sample '" + sample.id + "' has token_count 0");
  }
  if (!ids_.insert(sample.id).second) {
    throw Error(ErrorCode::kDuplicateId, "duplicate sample id '" + sample.id + "'");
  }
  total_tokens_ += sample.token_count;
  samples_.push_back(std::move(sample));
}

bool Corpus::has_text() const {
  for (const auto& s : samples_) {
    if (!s.text) return false;
  }
  return true;
}

Corpus parse_corpus(std::string_view content, const LoadOptions& options,
                    std::string_view source_name) {
  Corpus corpus;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    ingest_line(corpus, content.substr(pos, end - pos), ++line_no, options, source_name);
    pos = end + 1;
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open corpus file: " + path.string());

  // Line by line: with retain_text off, peak memory tracks the metadata
  // rather than the file size.
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  const std::string source = path.string();
  while (std::getline(in, line)) ingest_line(corpus, line, ++line_no, options, source);
  if (in.bad()) throw Error(ErrorCode::kIo, "read failure on " + source);
  return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.samples()) {
    json j = {{"id", s.id}, {"token_count", s.token_count}};
    if (s.text) j["text"] = *s.text;
    if (s.domain) j["domain"] = *s.domain;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, serialize_corpus(corpus));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open file for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failure on " + path.string());
}

}  // namespace frame
