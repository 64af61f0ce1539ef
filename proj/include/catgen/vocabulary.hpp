#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "catgen/types.hpp"

namespace catgen::corpus {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

/// Bijective token <-> id map. Ids 0..3 are reserved for <pad>, <unk>,
/// <sos>, <eos> in that order.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kSos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr std::size_t kNumSpecials = 4;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kSosToken = "<sos>";
  static constexpr std::string_view kEosToken = "<eos>";

  /// Specials only.
  Vocabulary();

  /// Builds from an id-ordered token list whose first four entries are the
  /// special literals. Throws on duplicates or missing specials.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  /// Appends a content token and returns its id (existing id if present).
  TokenId add(std::string_view token);

  std::optional<TokenId> find(std::string_view token) const;
  /// Id of `token`, or kUnk when absent.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static bool is_special(TokenId id) {
    return id >= 0 && static_cast<std::size_t>(id) < kNumSpecials;
  }

  /// One token per line; line number is the id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> ids_;
};

}  // namespace catgen::corpus
