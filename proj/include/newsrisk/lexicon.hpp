#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace newsrisk {

enum class LexiconName { LoughranMcDonald, Vader, Afinn, SentiWordNet, Opinion };

/// Fixed feature order used by score_all.
inline constexpr std::array<LexiconName, 5> kLexiconOrder = {LexiconName::LoughranMcDonald, LexiconName::Vader,
                                                             LexiconName::Afinn, LexiconName::SentiWordNet,
                                                             LexiconName::Opinion};

const char* to_string(LexiconName name);
LexiconName parse_lexicon_name(std::string_view text);

using WordSet = std::unordered_set<std::string>;

struct Lexicon {
  LexiconName name = LexiconName::LoughranMcDonald;
  WordSet positive;
  WordSet negative;
  /// Words seen with both polarities; they are excluded from both sets.
  std::vector<std::string> conflicts;
};

/// `word<TAB>score` per line, '#' comments and blank lines ignored. Scores are
/// binarized by sign and zero-valence entries are dropped.
Lexicon parse_lexicon(std::string_view text, LexiconName name);
Lexicon load_lexicon(const std::filesystem::path& path, LexiconName name);

struct SentimentScore {
  LexiconName lexicon = LexiconName::LoughranMcDonald;
  double value = 0.0;
  int positives_counted = 0;
  int negatives_counted = 0;
};

/// Number of preceding tokens inspected for a negator before a positive hit.
inline constexpr std::size_t kNegationWindow = 3;

const WordSet& default_negators();

/// (p - n) / (p + n) over lexicon hits; a positive hit is skipped when one of
/// the three preceding tokens is a negator. 0 when nothing is counted.
SentimentScore sentiment_score(std::span<const std::string> tokens, const Lexicon& lexicon, const WordSet& negators);

using LexiconSet = std::array<Lexicon, 5>;  // indexed like kLexiconOrder

std::array<double, 5> score_all(std::span<const std::string> tokens, const LexiconSet& lexicons,
                                const WordSet& negators);

}  // namespace newsrisk
