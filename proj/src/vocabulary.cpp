#include "catgen/vocabulary.hpp"

#include <fstream>
#include <stdexcept>

namespace catgen::corpus {

Vocabulary::Vocabulary() {
  for (auto t : {kPadToken, kUnkToken, kSosToken, kEosToken}) add(t);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumSpecials || tokens[0] != kPadToken ||
      tokens[1] != kUnkToken || tokens[2] != kSosToken || tokens[3] != kEosToken) {
    throw std::invalid_argument(
        "vocabulary must start with <pad>, <unk>, <sos>, <eos>");
  }
  Vocabulary v;
  for (std::size_t i = kNumSpecials; i < tokens.size(); ++i) {
    if (v.find(tokens[i])) {
      throw std::invalid_argument("duplicate vocabulary token: " + tokens[i]);
    }
    v.add(tokens[i]);
  }
  return v;
}

TokenId Vocabulary::add(std::string_view token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

TokenId Vocabulary::id(std::string_view token) const {
  return find(token).value_or(kUnk);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!contains(id)) {
    throw std::out_of_range("token id " + std::to_string(id) + " not in vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw std::runtime_error("failed writing vocabulary: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocabulary: " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(std::move(line));
  }
  return from_tokens(std::move(tokens));
}

}  // namespace catgen::corpus
