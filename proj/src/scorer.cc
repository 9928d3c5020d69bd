#include "frame/scorer.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "frame/error.h"

namespace frame {

using nlohmann::json;

struct NgramTrainer {
  static NgramModel make(int order, double k, Tokenizer tokenizer) {
    return NgramModel(order, k, tokenizer);
  }
  static NgramModel::TokenId intern(NgramModel& m, std::string_view token) {
    return m.intern(token);
  }
  static void add(NgramModel& m, std::span<const NgramModel::TokenId> history,
                  NgramModel::TokenId next, std::uint64_t count) {
    auto& ctx = m.contexts_[NgramModel::context_key(history)];
    ctx.total += count;
    ctx.next[next] += count;
  }
  static void set_vocab_size(NgramModel& m, std::size_t v) { m.vocab_size_ = v; }
  static std::size_t distinct(const NgramModel& m) { return m.vocab_.size(); }
  static constexpr NgramModel::TokenId bos() { return NgramModel::kBos; }
};

namespace {

void check_model_params(int order, double k) {
  if (order < 1) throw Error(ErrorCode::kConfig, "n-gram order must be >= 1");
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw Error(ErrorCode::kConfig, "smoothing_k must be a positive finite number");
  }
}

}  // namespace

NgramModel::TokenId NgramModel::lookup(std::string_view token) const {
  auto it = vocab_.find(std::string(token));
  return it == vocab_.end() ? kUnknown : it->second;
}

NgramModel::TokenId NgramModel::intern(std::string_view token) {
  auto [it, inserted] =
      vocab_.try_emplace(std::string(token), static_cast<TokenId>(vocab_.size()));
  return it->second;
}

std::string NgramModel::context_key(std::span<const TokenId> history) {
  std::string key(history.size() * sizeof(TokenId), '\0');
  for (std::size_t i = 0; i < history.size(); ++i) {
    TokenId id = history[i];
    for (std::size_t b = 0; b < sizeof(TokenId); ++b) {
      key[i * sizeof(TokenId) + b] = static_cast<char>((id >> (8 * b)) & 0xFF);
    }
  }
  return key;
}

double NgramModel::probability_ids(std::span<const TokenId> history, TokenId next) const {
  const double denom_k = smoothing_k_ * static_cast<double>(vocab_size_);
  auto it = contexts_.find(context_key(history));
  if (it == contexts_.end()) return smoothing_k_ / denom_k;
  double hit = 0.0;
  if (next != kUnknown) {
    auto n = it->second.next.find(next);
    if (n != it->second.next.end()) hit = static_cast<double>(n->second);
  }
  return (hit + smoothing_k_) / (static_cast<double>(it->second.total) + denom_k);
}

double NgramModel::probability(std::span<const std::string_view> context,
                               std::string_view next) const {
  const std::size_t want = static_cast<std::size_t>(order_ - 1);
  std::vector<TokenId> history(want, kBos);
  const std::size_t have = std::min(want, context.size());
  for (std::size_t i = 0; i < have; ++i) {
    std::string_view tok = context[context.size() - have + i];
    history[want - have + i] = tok == "<s>" ? kBos : lookup(tok);
  }
  return probability_ids(history, lookup(next));
}

double NgramModel::log_likelihood(std::string_view text, std::uint64_t* token_count) const {
  auto tokens = tokenize(text, tokenizer_);
  const std::size_t h = static_cast<std::size_t>(order_ - 1);
  std::vector<TokenId> window(h, kBos);
  double total = 0.0;
  for (std::string_view tok : tokens) {
    TokenId id = lookup(tok);
    total += std::log(probability_ids(window, id));
    if (h > 0) {
      std::rotate(window.begin(), window.begin() + 1, window.end());
      window.back() = id;
    }
  }
  if (token_count) *token_count = tokens.size();
  return total;
}

NgramModel NgramModel::uniform(std::size_t vocab_size, Tokenizer tokenizer) {
  if (vocab_size == 0) throw Error(ErrorCode::kConfig, "vocab_size must be positive");
  NgramModel model(1, 1.0, tokenizer);
  model.vocab_size_ = vocab_size;
  return model;
}

NgramModel NgramModel::from_counts(
    int order, std::size_t vocab_size, double smoothing_k,
    const std::vector<std::pair<std::vector<std::string>, std::uint64_t>>& ngram_counts,
    Tokenizer tokenizer) {
  check_model_params(order, smoothing_k);
  NgramModel model(order, smoothing_k, tokenizer);
  for (const auto& [gram, count] : ngram_counts) {
    if (gram.size() != static_cast<std::size_t>(order)) {
      throw Error(ErrorCode::kConfig, "n-gram length does not match model order");
    }
    if (count == 0) throw Error(ErrorCode::kConfig, "n-gram counts must be positive");
    std::vector<TokenId> history;
    for (std::size_t i = 0; i + 1 < gram.size(); ++i) {
      history.push_back(gram[i] == "<s>" ? kBos : model.intern(gram[i]));
    }
    TokenId next = model.intern(gram.back());
    NgramTrainer::add(model, history, next, count);
  }
  if (vocab_size < model.vocab_.size()) {
    throw Error(ErrorCode::kConfig, "vocab_size is smaller than the number of listed tokens");
  }
  model.vocab_size_ = vocab_size;
  return model;
}

NgramModel train_ngram(const Corpus& corpus, const NgramOptions& options) {
  check_model_params(options.order, options.smoothing_k);
  NgramModel model = NgramTrainer::make(options.order, options.smoothing_k, options.tokenizer);
  const std::size_t h = static_cast<std::size_t>(options.order - 1);
  for (const auto& sample : corpus.samples()) {
    if (!sample.text) {
      throw Error(ErrorCode::kMissingText,
                  "cannot train n-gram model: sample '" + sample.id + "' has no text");
    }
    std::vector<NgramModel::TokenId> window(h, NgramTrainer::bos());
    for (std::string_view tok : tokenize(*sample.text, options.tokenizer)) {
      NgramModel::TokenId id = NgramTrainer::intern(model, tok);
      NgramTrainer::add(model, window, id, 1);
      if (h > 0) {
        std::rotate(window.begin(), window.begin() + 1, window.end());
        window.back() = id;
      }
    }
  }
  const std::size_t distinct = NgramTrainer::distinct(model);
  std::size_t v = options.vocab_size == 0 ? distinct : options.vocab_size;
  if (v < distinct) {
    throw Error(ErrorCode::kConfig, "vocab_size " + std::to_string(v) + " is below the " +
                                        std::to_string(distinct) + " distinct training tokens");
  }
  if (v == 0) throw Error(ErrorCode::kConfig, "cannot train n-gram model on an empty corpus");
  NgramTrainer::set_vocab_size(model, v);
  return model;
}

double perplexity(const NgramModel& model, const SampleRecord& sample) {
  if (!sample.text) {
    throw Error(ErrorCode::kMissingText, "sample '" + sample.id + "' has no text to score");
  }
  std::uint64_t tokens = 0;
  double ll = model.log_likelihood(*sample.text, &tokens);
  if (tokens == 0) throw Error(ErrorCode::kEmptyText, "sample '" + sample.id + "' has no tokens");
  return std::exp(-ll / static_cast<double>(tokens));
}

double compute_pd(double ppl_weak, double ppl_strong) {
  if (!(ppl_weak > 0.0) || !(ppl_strong > 0.0) || !std::isfinite(ppl_weak) ||
      !std::isfinite(ppl_strong)) {
    throw Error(ErrorCode::kNonPositivePerplexity,
                "perplexities must be positive and finite (weak=" + std::to_string(ppl_weak) +
                    ", strong=" + std::to_string(ppl_strong) + ")");
  }
  return (ppl_weak - ppl_strong) / ppl_weak;
}

std::vector<ScoredSample> score_corpus(const Corpus& corpus, const NgramModel& weak,
                                       const NgramModel& strong, unsigned threads) {
  auto samples = corpus.samples();
  std::vector<ScoredSample> out(samples.size());
  auto score_one = [&](std::size_t i) {
    const SampleRecord& s = samples[i];
    ScoredSample& r = out[i];
    r.id = s.id;
    r.token_count = s.token_count;
    r.domain = s.domain;
    r.ppl_weak = perplexity(weak, s);
    r.ppl_strong = perplexity(strong, s);
    r.pd = compute_pd(r.ppl_weak, r.ppl_strong);
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(samples.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) score_one(i);
    return out;
  }

  // Contiguous chunks; each worker writes only its own slots. The first
  // error by sample index wins so failures are reported deterministically.
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::size_t> error_at(threads, samples.size());
  std::vector<std::thread> workers;
  const std::size_t chunk = (samples.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(samples.size(), begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          score_one(i);
        } catch (...) {
          errors[t] = std::current_exception();
          error_at[t] = i;
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  auto first = std::min_element(error_at.begin(), error_at.end());
  if (*first < samples.size()) std::rethrow_exception(errors[first - error_at.begin()]);
  return out;
}

std::vector<ScoreRecord> parse_score_file(std::string_view content, std::string_view source_name) {
  std::vector<ScoreRecord> records;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const std::string where = std::string(source_name) + ":" + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + "invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kParse, where + "expected a JSON object");
    ScoreRecord r;
    auto id = j.find("id");
    if (id == j.end() || !id->is_string()) throw Error(ErrorCode::kParse, where + "missing 'id'");
    r.id = id->get<std::string>();
    for (auto [key, slot] : {std::pair{"ppl_strong", &r.ppl_strong}, std::pair{"ppl_weak", &r.ppl_weak}}) {
      auto it = j.find(key);
      if (it == j.end() || !it->is_number()) {
        throw Error(ErrorCode::kParse, where + "missing numeric '" + key + "'");
      }
      *slot = it->get<double>();
      if (!(*slot > 0.0) || !std::isfinite(*slot)) {
        throw Error(ErrorCode::kNonPositivePerplexity,
                    where + "'" + key + "' must be positive and finite for id '" + r.id + "'");
      }
    }
    if (auto tc = j.find("token_count"); tc != j.end() && !tc->is_null()) {
      if (!tc->is_number_integer() || tc->get<std::int64_t>() <= 0) {
        throw Error(ErrorCode::kParse, where + "token_count must be a positive integer");
      }
      r.token_count = tc->get<std::uint64_t>();
    }
    if (auto d = j.find("domain"); d != j.end() && d->is_string()) r.domain = d->get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ScoreRecord> read_score_file(const std::filesystem::path& path) {
  return parse_score_file(read_file(path), path.string());
}

AttachResult attach_external_scores(const Corpus& corpus, std::span<const ScoreRecord> scores,
                                    bool strict) {
  std::unordered_map<std::string_view, const ScoreRecord*> by_id;
  by_id.reserve(scores.size());
  for (const auto& r : scores) {
    if (!by_id.emplace(r.id, &r).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate score record for id '" + r.id + "'");
    }
  }

  AttachResult result;
  std::vector<std::string> missing;
  std::unordered_set<std::string_view> corpus_ids;
  for (const auto& s : corpus.samples()) {
    corpus_ids.insert(s.id);
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      missing.push_back(s.id);
      continue;
    }
    const ScoreRecord& r = *it->second;
    ScoredSample out;
    out.id = s.id;
    out.token_count = s.token_count;
    out.domain = s.domain ? s.domain : r.domain;
    out.ppl_strong = r.ppl_strong;
    out.ppl_weak = r.ppl_weak;
    out.pd = compute_pd(r.ppl_weak, r.ppl_strong);
    result.samples.push_back(std::move(out));
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ... (" + std::to_string(missing.size()) + " total)";
    throw Error(ErrorCode::kMissingScore, "no score record for ids: " + list);
  }
  for (const auto& r : scores) {
    if (!corpus_ids.contains(r.id)) result.unknown_ids.push_back(r.id);
  }
  if (strict && !result.unknown_ids.empty()) {
    throw Error(ErrorCode::kUnknownId,
                "score record for id '" + result.unknown_ids.front() + "' not in corpus (" +
                    std::to_string(result.unknown_ids.size()) + " unknown)");
  }
  return result;
}

std::vector<ScoredSample> scored_from_records(std::span<const ScoreRecord> scores) {
  std::vector<ScoredSample> out;
  out.reserve(scores.size());
  std::unordered_set<std::string_view> seen;
  for (const auto& r : scores) {
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate score record for id '" + r.id + "'");
    }
    if (!r.token_count) {
      throw Error(ErrorCode::kParse, "score record '" + r.id +
                                         "' has no token_count; supply the corpus to join counts");
    }
    out.push_back({r.id, *r.token_count, r.ppl_strong, r.ppl_weak,
                   compute_pd(r.ppl_weak, r.ppl_strong), r.domain});
  }
  return out;
}

std::string serialize_scores(std::span<const ScoredSample> scored) {
  std::string out;
  for (const auto& s : scored) {
    json j = {{"id", s.id},
              {"token_count", s.token_count},
              {"ppl_strong", s.ppl_strong},
              {"ppl_weak", s.ppl_weak},
              {"pd", s.pd}};
    if (s.domain) j["domain"] = *s.domain;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_score_file(std::span<const ScoredSample> scored, const std::filesystem::path& path) {
  write_file(path, serialize_scores(scored));
}

}  // namespace frame
