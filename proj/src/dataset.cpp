#include "catgen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "catgen/keyvalue.hpp"

namespace catgen::corpus {

namespace fs = std::filesystem;

std::vector<std::size_t> Dataset::counts_per_category() const {
  std::vector<std::size_t> counts(num_categories, 0);
  for (const auto& r : records) {
    if (static_cast<std::size_t>(r.category) < counts.size()) {
      ++counts[static_cast<std::size_t>(r.category)];
    }
  }
  return counts;
}

Dataset build_dataset(const std::vector<SourceText>& sources,
                      const PrepareOptions& options) {
  if (sources.empty()) throw std::invalid_argument("no input sources given");
  CategoryId max_category = 0;
  for (const auto& s : sources) {
    if (s.category < 0) throw std::invalid_argument("category ids must be non-negative");
    if (options.reverse_augment && s.category != 0) {
      throw std::invalid_argument("--reverse-augment expects every input under category 0");
    }
    max_category = std::max(max_category, s.category);
  }
  const auto num_categories =
      options.reverse_augment ? std::size_t{2} : static_cast<std::size_t>(max_category) + 1;

  std::vector<std::vector<TokenSeq>> per_category(static_cast<std::size_t>(max_category) + 1);
  for (const auto& s : sources) {
    auto& bucket = per_category[static_cast<std::size_t>(s.category)];
    for (const auto& line : s.lines) {
      auto tokens = tokenize(clean_text(line));
      if (!tokens.empty()) bucket.push_back(std::move(tokens));
    }
  }
  std::vector<TokenSeq> all;
  for (auto& bucket : per_category) {
    bucket = deduplicate(bucket);
    all.insert(all.end(), bucket.begin(), bucket.end());
  }

  Dataset ds;
  ds.vocab = build_vocabulary(all, options.max_vocab);
  ds.num_categories = num_categories;
  ds.reverse_augmented = options.reverse_augment;
  for (std::size_t c = 0; c < per_category.size(); ++c) {
    for (const auto& tokens : per_category[c]) {
      ds.records.push_back(encode_sentence(tokens, ds.vocab, static_cast<CategoryId>(c)));
    }
  }
  if (options.reverse_augment) {
    const std::size_t n = ds.records.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto r = reverse_record(ds.records[i]);
      r.category = 1;
      ds.records.push_back(std::move(r));
    }
  }
  return ds;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read input file: " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

KeyValues dataset_manifest(const Dataset& dataset) {
  KeyValues kv;
  kv["num_categories"] = std::to_string(dataset.num_categories);
  kv["vocab_size"] = std::to_string(dataset.vocab.size());
  kv["records"] = std::to_string(dataset.records.size());
  kv["reverse_augment"] = dataset.reverse_augmented ? "1" : "0";
  const auto counts = dataset.counts_per_category();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    kv["count." + std::to_string(c)] = std::to_string(counts[c]);
  }
  return kv;
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / kDatasetFile, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / kDatasetFile).string());
    for (const auto& r : dataset.records) {
      out << r.category << '\t';
      bool first = true;
      for (TokenId id : r.content()) {
        if (!first) out << ' ';
        out << dataset.vocab.token(id);
        first = false;
      }
      out << '\n';
    }
  }
  dataset.vocab.save(dir / kVocabFile);
  write_key_values(dataset_manifest(dataset), dir / kManifestFile);
}

Dataset load_dataset(const fs::path& dir) {
  for (const char* name : {kDatasetFile, kVocabFile, kManifestFile}) {
    if (!fs::exists(dir / name)) {
      throw std::runtime_error("missing dataset file: " + (dir / name).string());
    }
  }
  Dataset ds;
  ds.vocab = Vocabulary::load(dir / kVocabFile);
  const auto manifest = read_key_values(dir / kManifestFile);
  ds.num_categories = parse_size(require_key(manifest, "num_categories"), "num_categories");
  if (auto it = manifest.find("reverse_augment"); it != manifest.end()) {
    ds.reverse_augmented = it->second == "1";
  }

  std::ifstream in(dir / kDatasetFile, std::ios::binary);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": missing tab");
    }
    const auto category = parse_size(line.substr(0, tab), "category");
    if (category >= ds.num_categories) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": category exceeds num_categories");
    }
    std::istringstream words(line.substr(tab + 1));
    TokenSeq tokens;
    for (std::string w; words >> w;) tokens.push_back(std::move(w));
    ds.records.push_back(encode_sentence(tokens, ds.vocab, static_cast<CategoryId>(category)));
  }
  return ds;
}

}  // namespace catgen::corpus
