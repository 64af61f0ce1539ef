#pragma once

#include <filesystem>
#include <iosfwd>

#include "catgen/rng.hpp"
#include "catgen/tensor.hpp"
#include "catgen/vocabulary.hpp"

namespace catgen::model {

struct PretrainedTable {
  Tensor table;              // [vocab x dim]
  std::size_t found = 0;     // vocabulary rows filled from the file
  std::size_t randomized = 0;
};

/// Reads GloVe text format (`word v1 ... v_dim` per line) and builds a
/// vocabulary-aligned table. Rows for tokens absent from the file, special
/// tokens included, are drawn uniformly in +-1/sqrt(dim) from `rng` in id
/// order. Lines for words outside the vocabulary are skipped; a line whose
/// vector length differs from `dim` is an error.
PretrainedTable load_pretrained(std::istream& in, const corpus::Vocabulary& vocab,
                                std::size_t dim, Rng& rng);
PretrainedTable load_pretrained(const std::filesystem::path& path,
                                const corpus::Vocabulary& vocab, std::size_t dim,
                                Rng& rng);

}  // namespace catgen::model
