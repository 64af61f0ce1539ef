#include "catgen/corpus.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace catgen::corpus {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || is_digit(c) || c >= 0x80;
}

bool is_url(std::string_view chunk) {
  auto starts = [&](std::string_view p) {
    if (chunk.size() < p.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto c = static_cast<unsigned char>(chunk[i]);
      if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
      if (c != static_cast<unsigned char>(p[i])) return false;
    }
    return true;
  };
  return starts("http://") || starts("https://") || starts("www.");
}

// Character at `i` joins the word characters on both sides of it.
bool is_joiner(std::string_view s, std::size_t i) {
  if (i == 0 || i + 1 >= s.size()) return false;
  const auto prev = static_cast<unsigned char>(s[i - 1]);
  const auto next = static_cast<unsigned char>(s[i + 1]);
  switch (s[i]) {
    case '\'':
    case '-':
      return is_word_char(prev) && is_word_char(next);
    case '.':
    case ',':
      return is_digit(prev) && is_digit(next);
    default:
      return false;
  }
}

std::string join(const TokenSeq& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    out += t;
    out.push_back('\x1f');
  }
  return out;
}

}  // namespace

void validate(const SentenceRecord& record) {
  const auto& t = record.tokens;
  if (t.size() < 3) throw std::invalid_argument("sentence record needs at least 3 tokens");
  if (t.front() != Vocabulary::kSos || t.back() != Vocabulary::kEos) {
    throw std::invalid_argument("sentence record must be framed by <sos> ... <eos>");
  }
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (t[i] == Vocabulary::kSos || t[i] == Vocabulary::kEos) {
      throw std::invalid_argument("sentence record has interior <sos>/<eos>");
    }
  }
  if (record.category < 0) throw std::invalid_argument("negative category id");
}

std::string clean_text(std::string_view raw) {
  std::string spaced(raw);
  for (auto& ch : spaced) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x20 || c == 0x7f) ch = ' ';
  }
  std::string out;
  std::size_t i = 0;
  while (i < spaced.size()) {
    while (i < spaced.size() && is_space(static_cast<unsigned char>(spaced[i]))) ++i;
    const std::size_t start = i;
    while (i < spaced.size() && !is_space(static_cast<unsigned char>(spaced[i]))) ++i;
    if (start == i) break;
    std::string_view chunk(spaced.data() + start, i - start);
    if (is_url(chunk)) continue;
    if (!out.empty()) out.push_back(' ');
    for (char ch : chunk) {
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      out.push_back(ch);
    }
  }
  return out;
}

TokenSeq tokenize(std::string_view text) {
  TokenSeq tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      flush();
    } else if (is_word_char(c) || is_joiner(text, i)) {
      word.push_back(text[i]);
    } else {
      flush();
      tokens.emplace_back(1, text[i]);
    }
  }
  flush();
  return tokens;
}

std::vector<TokenSeq> deduplicate(const std::vector<TokenSeq>& sentences) {
  std::unordered_set<std::string> seen;
  std::vector<TokenSeq> out;
  for (const auto& s : sentences) {
    if (seen.insert(join(s)).second) out.push_back(s);
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<TokenSeq>& sentences,
                            std::size_t max_size) {
  if (max_size <= Vocabulary::kNumSpecials) {
    throw std::invalid_argument("max vocabulary size must exceed the 4 special tokens");
  }
  struct Entry {
    std::string token;
    std::size_t count;
    std::size_t first;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : sentences) {
    for (const auto& t : s) {
      auto [it, inserted] = index.try_emplace(t, entries.size());
      if (inserted) {
        entries.push_back({t, 0, entries.size()});
      }
      ++entries[it->second].count;
    }
  }
  std::ranges::stable_sort(entries, [](const Entry& a, const Entry& b) {
    return a.count > b.count;
  });
  Vocabulary vocab;
  const std::size_t keep =
      std::min(entries.size(), max_size - Vocabulary::kNumSpecials);
  for (std::size_t i = 0; i < keep; ++i) vocab.add(entries[i].token);
  return vocab;
}

SentenceRecord encode_sentence(const TokenSeq& tokens, const Vocabulary& vocab,
                               CategoryId category) {
  if (tokens.empty()) throw std::invalid_argument("cannot encode an empty sentence");
  SentenceRecord r;
  r.category = category;
  r.tokens.reserve(tokens.size() + 2);
  r.tokens.push_back(Vocabulary::kSos);
  for (const auto& t : tokens) r.tokens.push_back(vocab.id(t));
  r.tokens.push_back(Vocabulary::kEos);
  return r;
}

TokenSeq decode_content(const SentenceRecord& record, const Vocabulary& vocab) {
  TokenSeq out;
  for (TokenId id : record.content()) out.push_back(vocab.token(id));
  return out;
}

std::vector<TrainingExample> window_examples(const SentenceRecord& record,
                                             std::size_t seq_len) {
  if (seq_len == 0) throw std::invalid_argument("window length must be positive");
  const auto& tok = record.tokens;
  const std::size_t n = tok.size();
  std::vector<TrainingExample> out;
  for (std::size_t start = 0; start + 1 < n; start += seq_len) {
    TrainingExample ex;
    ex.category = record.category;
    ex.inputs.resize(seq_len, Vocabulary::kPad);
    ex.targets.resize(seq_len, Vocabulary::kPad);
    ex.mask.resize(seq_len, 0);
    for (std::size_t t = 0; t < seq_len; ++t) {
      const std::size_t pos = start + t;
      if (pos < n) ex.inputs[t] = tok[pos];
      if (pos + 1 < n) {
        ex.targets[t] = tok[pos + 1];
        ex.mask[t] = 1;
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

SentenceRecord reverse_record(const SentenceRecord& record) {
  SentenceRecord r = record;
  if (r.tokens.size() > 2) std::reverse(r.tokens.begin() + 1, r.tokens.end() - 1);
  return r;
}

}  // namespace catgen::corpus
