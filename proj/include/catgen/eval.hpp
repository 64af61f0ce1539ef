#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "catgen/checkpoint.hpp"
#include "catgen/corpus.hpp"
#include "catgen/types.hpp"

namespace catgen::eval {

/// Phrase overlap score: repeatedly take a longest common contiguous phrase
/// among the not-yet-matched tokens of both sequences, add length^2 and mark
/// that occurrence as matched in both (a phrase may never span a matched
/// token). When several occurrences share the longest length, the choice
/// that maximizes the final total is taken, which makes the score symmetric.
std::size_t phrase_overlap(std::span<const TokenId> s1, std::span<const TokenId> s2);
std::size_t phrase_overlap(std::span<const std::string> s1, std::span<const std::string> s2);

/// tanh(phrase_overlap / (|s1| + |s2|)). Throws when both are empty.
double phrase_sim(std::span<const TokenId> s1, std::span<const TokenId> s2);
double phrase_sim(std::span<const std::string> s1, std::span<const std::string> s2);

/// |A ∩ B| / |A ∪ B| over the sets of contiguous k-grams; 0 when both sets
/// are empty. Throws when k == 0.
double k_jaccard(std::span<const TokenId> s1, std::span<const TokenId> s2, std::size_t k);
double k_jaccard(std::span<const std::string> s1, std::span<const std::string> s2,
                 std::size_t k);

struct SampleScore {
  std::size_t sample_index = 0;
  std::size_t source_index = 0;          // corpus record that provided the seed
  std::string text;                      // generated continuation
  std::ptrdiff_t best_match_index = -1;  // argmax phrase_sim record, -1 if none
  double k_jaccard = 0.0;                // max over the remaining corpus
  double phrase_overlap = 0.0;           // max phrase_sim over the remaining corpus
};

struct SimilarityReport {
  CategoryId category = 0;
  double exploration = 0.0;
  double k_jaccard_mean = 0.0;
  double phrase_overlap_mean = 0.0;
  std::vector<SampleScore> per_sample;
};

struct ProtocolConfig {
  double exploration = 0.1;
  std::size_t sample_count = 100;
  std::size_t k = 4;
  std::size_t max_tokens = 30;
  std::uint64_t rng_seed = 0;
};

/// Samples distinct corpus records, seeds generation with the first half
/// (floor) of each record's content under every category tag, and scores
/// each continuation (seed excluded) by its maximum similarity to every
/// other record. One report per category. A sample count above the corpus
/// size is clamped with a warning on `warnings` when non-null.
std::vector<SimilarityReport> novelty_protocol(const model::Checkpoint& model,
                                               std::span<const corpus::SentenceRecord> corpus,
                                               const ProtocolConfig& cfg,
                                               std::ostream* warnings = nullptr);

/// Columns: category, exploration, sample_index, k_jaccard, phrase_overlap,
/// best_match_index. Starts with a header row.
void write_report_tsv(std::ostream& out, std::span<const SimilarityReport> reports);

/// Splits texts into sentences at '.', '!' and '?' (a '.' or ',' between
/// digits does not split), removes spaces before closing punctuation, and
/// capitalizes each sentence's first letter and the pronoun "i".
std::vector<std::string> parser_prep(std::span<const std::string> texts);

}  // namespace catgen::eval
