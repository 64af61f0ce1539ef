#pragma once

// Text cleaning, tokenization and the record/window types fed to training.
//
// Cleaning rules (applied in this order):
//   * whitespace tokens beginning with "http://", "https://" or "www." are
//     dropped as URLs;
//   * ASCII control characters become spaces;
//   * ASCII letters are lowercased (other bytes pass through untouched);
//   * runs of whitespace collapse to one space, ends are trimmed.
//
// Tokenization rules: a word is a maximal run of word characters (ASCII
// letters, digits, and any byte >= 0x80 so UTF-8 letters stay intact).
// An apostrophe or hyphen joins two word characters ("what's", "can't",
// "well-known"); "." or "," joins two digits ("3.5", "1,000"). Every other
// non-space character is a single-character punctuation token.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catgen/types.hpp"
#include "catgen/vocabulary.hpp"

namespace catgen::corpus {

using TokenSeq = std::vector<std::string>;

/// A framed sentence: sos, content ids, eos.
struct SentenceRecord {
  CategoryId category = 0;
  std::vector<TokenId> tokens;

  std::span<const TokenId> content() const {
    return std::span<const TokenId>(tokens).subspan(1, tokens.size() - 2);
  }
  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

/// Throws std::invalid_argument unless the record is framed by sos/eos, has
/// at least one content token and no interior sos/eos.
void validate(const SentenceRecord& record);

struct TrainingExample {
  CategoryId category = 0;
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  std::vector<std::uint8_t> mask;  // 1 where the target counts toward the loss
};

std::string clean_text(std::string_view raw);
TokenSeq tokenize(std::string_view text);

/// Exact-match deduplication keeping first occurrences in order.
std::vector<TokenSeq> deduplicate(const std::vector<TokenSeq>& sentences);

/// Keeps the max_size - 4 most frequent tokens (ties by first appearance).
/// Throws when max_size <= 4.
Vocabulary build_vocabulary(const std::vector<TokenSeq>& sentences,
                            std::size_t max_size);

/// Throws when `tokens` is empty.
SentenceRecord encode_sentence(const TokenSeq& tokens, const Vocabulary& vocab,
                               CategoryId category);

/// Content tokens of `record` as strings.
TokenSeq decode_content(const SentenceRecord& record, const Vocabulary& vocab);

/// Splits a record into next-token windows of length `seq_len`, stepping by
/// `seq_len`. Inputs past the sentence end and targets past the last token
/// are <pad>; padded targets have mask 0.
std::vector<TrainingExample> window_examples(const SentenceRecord& record,
                                             std::size_t seq_len);

/// Reverses the content, keeping the sos-first framing.
SentenceRecord reverse_record(const SentenceRecord& record);

}  // namespace catgen::corpus
