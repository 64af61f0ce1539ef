#include "catgen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "catgen/generator.hpp"
#include "catgen/keyvalue.hpp"

namespace catgen::eval {

namespace {

class PhraseMatcher {
 public:
  PhraseMatcher(std::span<const TokenId> a, std::span<const TokenId> b)
      : a_(a), b_(b), used_(a.size() + b.size(), '0'),
        run_((a.size() + 1) * (b.size() + 1), 0) {}

  std::size_t solve() {
    if (auto it = memo_.find(used_); it != memo_.end()) return it->second;

    const std::size_t n = a_.size();
    const std::size_t m = b_.size();
    const std::size_t stride = m + 1;
    std::size_t longest = 0;
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = m; j-- > 0;) {
        std::size_t len = 0;
        if (!used_a(i) && !used_b(j) && a_[i] == b_[j]) len = 1 + run_[(i + 1) * stride + j + 1];
        run_[i * stride + j] = len;
        longest = std::max(longest, len);
      }
    }

    std::size_t best = 0;
    if (longest == 1) {
      best = single_token_matches();
    } else if (longest > 1) {
      std::vector<std::pair<std::size_t, std::size_t>> starts;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          if (run_[i * stride + j] == longest) starts.emplace_back(i, j);
        }
      }
      for (auto [i, j] : starts) {
        mark(i, j, longest, '1');
        best = std::max(best, solve());
        mark(i, j, longest, '0');
      }
      best += longest * longest;
    }
    memo_.emplace(used_, best);
    return best;
  }

 private:
  bool used_a(std::size_t i) const { return used_[i] == '1'; }
  bool used_b(std::size_t j) const { return used_[a_.size() + j] == '1'; }

  void mark(std::size_t i, std::size_t j, std::size_t len, char v) {
    for (std::size_t k = 0; k < len; ++k) {
      used_[i + k] = v;
      used_[a_.size() + j + k] = v;
    }
  }

  // With no common phrase longer than one token left, every maximal
  // sequence of single-token matches pairs up min(count_a, count_b) copies
  // of each token.
  std::size_t single_token_matches() const {
    std::unordered_map<TokenId, std::ptrdiff_t> balance;
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (!used_a(i)) ++balance[a_[i]];
    }
    std::size_t matches = 0;
    for (std::size_t j = 0; j < b_.size(); ++j) {
      if (used_b(j)) continue;
      auto it = balance.find(b_[j]);
      if (it != balance.end() && it->second > 0) {
        --it->second;
        ++matches;
      }
    }
    return matches;
  }

  std::span<const TokenId> a_;
  std::span<const TokenId> b_;
  std::string used_;
  std::vector<std::size_t> run_;
  std::unordered_map<std::string, std::size_t> memo_;
};

// Maps both string sequences onto shared ids.
std::pair<std::vector<TokenId>, std::vector<TokenId>> intern(std::span<const std::string> s1,
                                                             std::span<const std::string> s2) {
  std::unordered_map<std::string, TokenId> ids;
  auto map = [&](std::span<const std::string> s) {
    std::vector<TokenId> out;
    out.reserve(s.size());
    for (const auto& t : s) {
      out.push_back(ids.try_emplace(t, static_cast<TokenId>(ids.size())).first->second);
    }
    return out;
  };
  auto a = map(s1);
  auto b = map(s2);
  return {std::move(a), std::move(b)};
}

std::vector<std::span<const TokenId>> distinct_kgrams(std::span<const TokenId> s, std::size_t k) {
  std::vector<std::span<const TokenId>> grams;
  if (s.size() < k) return grams;
  for (std::size_t i = 0; i + k <= s.size(); ++i) grams.push_back(s.subspan(i, k));
  auto less = [](std::span<const TokenId> x, std::span<const TokenId> y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  };
  auto equal = [](std::span<const TokenId> x, std::span<const TokenId> y) {
    return std::equal(x.begin(), x.end(), y.begin(), y.end());
  };
  std::sort(grams.begin(), grams.end(), less);
  grams.erase(std::unique(grams.begin(), grams.end(), equal), grams.end());
  return grams;
}

}  // namespace

std::size_t phrase_overlap(std::span<const TokenId> s1, std::span<const TokenId> s2) {
  if (s1.empty() || s2.empty()) return 0;
  return PhraseMatcher(s1, s2).solve();
}

std::size_t phrase_overlap(std::span<const std::string> s1, std::span<const std::string> s2) {
  const auto [a, b] = intern(s1, s2);
  return phrase_overlap(a, b);
}

double phrase_sim(std::span<const TokenId> s1, std::span<const TokenId> s2) {
  const std::size_t total = s1.size() + s2.size();
  if (total == 0) throw std::invalid_argument("phrase_sim of two empty sequences");
  return std::tanh(static_cast<double>(phrase_overlap(s1, s2)) / static_cast<double>(total));
}

double phrase_sim(std::span<const std::string> s1, std::span<const std::string> s2) {
  const auto [a, b] = intern(s1, s2);
  return phrase_sim(a, b);
}

double k_jaccard(std::span<const TokenId> s1, std::span<const TokenId> s2, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k_jaccard needs k >= 1");
  const auto a = distinct_kgrams(s1, k);
  const auto b = distinct_kgrams(s2, k);
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::lexicographical_compare(a[i].begin(), a[i].end(), b[j].begin(), b[j].end())) {
      ++i;
    } else if (std::lexicographical_compare(b[j].begin(), b[j].end(), a[i].begin(), a[i].end())) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double k_jaccard(std::span<const std::string> s1, std::span<const std::string> s2,
                 std::size_t k) {
  const auto [a, b] = intern(s1, s2);
  return k_jaccard(a, b, k);
}

std::vector<SimilarityReport> novelty_protocol(const model::Checkpoint& model,
                                               std::span<const corpus::SentenceRecord> corpus,
                                               const ProtocolConfig& cfg,
                                               std::ostream* warnings) {
  if (corpus.empty()) throw std::invalid_argument("novelty protocol needs a non-empty corpus");
  if (cfg.k == 0) throw std::invalid_argument("k must be positive");
  std::size_t samples = cfg.sample_count;
  if (samples > corpus.size()) {
    if (warnings != nullptr) {
      *warnings << "warning: sample count " << samples << " exceeds corpus size "
                << corpus.size() << "; using " << corpus.size() << '\n';
    }
    samples = corpus.size();
  }

  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < samples; ++i) {
    std::swap(order[i], order[i + rng.index(order.size() - i)]);
  }

  const std::size_t num_categories = model.config.num_categories;
  std::vector<SimilarityReport> reports(num_categories);
  for (std::size_t c = 0; c < num_categories; ++c) {
    reports[c].category = static_cast<CategoryId>(c);
    reports[c].exploration = cfg.exploration;
  }

  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t source = order[s];
    const auto content = corpus[source].content();
    const auto seed = content.first(content.size() / 2);
    for (std::size_t c = 0; c < num_categories; ++c) {
      const auto g = gen::generate(model, static_cast<CategoryId>(c), seed, cfg.exploration,
                                   cfg.max_tokens, rng.next_u64());
      SampleScore score;
      score.sample_index = s;
      score.source_index = source;
      score.text = gen::detokenize(g.continuation, model.vocab);
      for (std::size_t j = 0; j < corpus.size(); ++j) {
        if (j == source) continue;
        const auto other = corpus[j].content();
        const double ps = phrase_sim(g.continuation, other);
        if (score.best_match_index < 0 || ps > score.phrase_overlap) {
          score.phrase_overlap = ps;
          score.best_match_index = static_cast<std::ptrdiff_t>(j);
        }
        score.k_jaccard = std::max(score.k_jaccard, k_jaccard(g.continuation, other, cfg.k));
      }
      reports[c].per_sample.push_back(std::move(score));
    }
  }

  for (auto& r : reports) {
    if (r.per_sample.empty()) continue;
    double kj = 0.0, po = 0.0;
    for (const auto& s : r.per_sample) {
      kj += s.k_jaccard;
      po += s.phrase_overlap;
    }
    r.k_jaccard_mean = kj / static_cast<double>(r.per_sample.size());
    r.phrase_overlap_mean = po / static_cast<double>(r.per_sample.size());
  }
  return reports;
}

void write_report_tsv(std::ostream& out, std::span<const SimilarityReport> reports) {
  out << "category\texploration\tsample_index\tk_jaccard\tphrase_overlap\tbest_match_index\n";
  for (const auto& r : reports) {
    for (const auto& s : r.per_sample) {
      out << r.category << '\t' << format_double(r.exploration) << '\t' << s.sample_index << '\t'
          << format_double(s.k_jaccard) << '\t' << format_double(s.phrase_overlap) << '\t'
          << s.best_match_index << '\n';
    }
  }
}

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_alnum(char c) { return is_alpha(c) || (c >= '0' && c <= '9'); }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closing(char c) {
  return is_terminal(c) || c == ',' || c == ';' || c == ':' || c == ')';
}
char upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

std::string finish_sentence(std::string_view raw) {
  std::string s;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == ' ' || c == '\t') {
      std::size_t k = i;
      while (k < raw.size() && (raw[k] == ' ' || raw[k] == '\t')) ++k;
      if (k == raw.size() || s.empty() || is_closing(raw[k])) {
        i = k - 1;
        continue;
      }
      s.push_back(' ');
      i = k - 1;
      continue;
    }
    s.push_back(c);
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != 'i') continue;
    const bool left = i == 0 || (!is_alnum(s[i - 1]) && s[i - 1] != '\'' && s[i - 1] != '-');
    const bool right = i + 1 == s.size() || !is_alnum(s[i + 1]);
    if (left && right && (i + 1 == s.size() || s[i + 1] != '-')) s[i] = 'I';
  }
  for (auto& c : s) {
    if (is_alpha(c)) {
      c = upper(c);
      break;
    }
  }
  return s;
}

}  // namespace

std::vector<std::string> parser_prep(std::span<const std::string> texts) {
  std::vector<std::string> out;
  for (const auto& text : texts) {
    std::size_t start = 0;
    std::size_t i = 0;
    auto emit = [&](std::size_t end) {
      auto sentence = finish_sentence(std::string_view(text).substr(start, end - start));
      if (!sentence.empty()) out.push_back(std::move(sentence));
      start = end;
    };
    while (i < text.size()) {
      const char c = text[i];
      const bool digit_dot = c == '.' && i > 0 && i + 1 < text.size() &&
                             std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
                             std::isdigit(static_cast<unsigned char>(text[i + 1]));
      if (is_terminal(c) && !digit_dot) {
        while (i < text.size() && is_terminal(text[i])) ++i;
        emit(i);
      } else {
        ++i;
      }
    }
    emit(text.size());
  }
  return out;
}

}  // namespace catgen::eval
