#pragma once

// Prepared categorical datasets and their on-disk layout:
//
//   <dir>/dataset.tsv   "<category-id>\t<space-joined content tokens>" per line
//   <dir>/vocab.txt     one token per line, line number = id
//   <dir>/manifest.txt  key=value lines (num_categories, count.<k>, ...)

#include <filesystem>
#include <string>
#include <vector>

#include "catgen/corpus.hpp"
#include "catgen/keyvalue.hpp"
#include "catgen/vocabulary.hpp"

namespace catgen::corpus {

struct Dataset {
  Vocabulary vocab;
  std::vector<SentenceRecord> records;
  std::size_t num_categories = 0;
  bool reverse_augmented = false;

  std::vector<std::size_t> counts_per_category() const;
};

struct SourceText {
  CategoryId category = 0;
  std::vector<std::string> lines;
};

struct PrepareOptions {
  std::size_t max_vocab = 10000;
  /// Adds a word-reversed copy of every category-0 sentence under tag 1.
  /// All sources must then be category 0.
  bool reverse_augment = false;
};

/// Clean, tokenize, drop empty lines, deduplicate within each category,
/// build the capped vocabulary over all sources, encode.
Dataset build_dataset(const std::vector<SourceText>& sources,
                      const PrepareOptions& options);

std::vector<std::string> read_lines(const std::filesystem::path& path);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Throws std::runtime_error naming the missing file.
Dataset load_dataset(const std::filesystem::path& dir);

KeyValues dataset_manifest(const Dataset& dataset);

inline constexpr const char* kDatasetFile = "dataset.tsv";
inline constexpr const char* kVocabFile = "vocab.txt";
inline constexpr const char* kManifestFile = "manifest.txt";

}  // namespace catgen::corpus
