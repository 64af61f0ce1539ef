#include "catgen/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace catgen::model {

PretrainedTable load_pretrained(std::istream& in, const corpus::Vocabulary& vocab,
                                std::size_t dim, Rng& rng) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  PretrainedTable out;
  out.table = Tensor({vocab.size(), dim});
  std::vector<bool> filled(vocab.size(), false);

  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto sp = line.find(' ');
    if (sp == std::string::npos) continue;
    const auto id = vocab.find(std::string_view(line).substr(0, sp));
    if (!id || corpus::Vocabulary::is_special(*id)) continue;
    const auto row_index = static_cast<std::size_t>(*id);
    if (filled[row_index]) continue;  // first occurrence wins

    auto row = out.table.row(row_index);
    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    std::size_t k = 0;
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v = 0.0;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || k >= dim) {
        throw std::runtime_error("embedding line " + std::to_string(line_no) +
                                 ": expected " + std::to_string(dim) + " numbers");
      }
      row[k++] = v;
      p = next;
    }
    if (k != dim) {
      throw std::runtime_error("embedding line " + std::to_string(line_no) +
                               ": expected " + std::to_string(dim) + " numbers");
    }
    filled[row_index] = true;
    ++out.found;
  }

  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    if (filled[r]) continue;
    for (auto& v : out.table.row(r)) v = rng.uniform(-bound, bound);
    ++out.randomized;
  }
  return out;
}

PretrainedTable load_pretrained(const std::filesystem::path& path,
                                const corpus::Vocabulary& vocab, std::size_t dim,
                                Rng& rng) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read embedding file: " + path.string());
  return load_pretrained(in, vocab, dim, rng);
}

}  // namespace catgen::model
